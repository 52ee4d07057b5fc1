"""Pauli-channel algebra and Bell-diagonal reductions.

Bell weights and Pauli weights share one ordering: (Phi+, Phi-, Psi+, Psi-)
corresponds to (I, Z, X, Y) acting on one half of a perfect Phi+.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from .core import BellMix, PauliChannelProbs, secret_key_fraction, DEFAULT_F_EC
from .optics import ConditionalState

Permutation = Tuple[int, int, int, int]

# generators of the conservative local relabelling group
_X_RELABEL = (2, 3, 0, 1)
_Z_RELABEL = (1, 0, 3, 2)
_HH_RELABEL = (0, 2, 1, 3)


@dataclass(frozen=True)
class DephasingSpec:
    time: float
    T: float

    def __post_init__(self):
        if not self.time >= 0:
            raise ValueError(f"dephasing time must be >= 0, got {self.time!r}")
        if not self.T > 0:
            raise ValueError(f"coherence time must be positive, got {self.T!r}")

    @property
    def factor(self) -> float:
        if math.isinf(self.T):
            return 1.0
        return math.exp(-self.time / self.T)


def dephasing_from_factor(factor: float) -> PauliChannelProbs:
    """Dephasing channel with coherence factor ``factor`` in [0, 1]."""
    return PauliChannelProbs.from_weights([0.5 * (1 + factor), 0.5 * (1 - factor), 0.0, 0.0])


def dephasing_channel(spec: DephasingSpec) -> PauliChannelProbs:
    return dephasing_from_factor(spec.factor)


def depolarizing_channel(p_depol: float, swaps: int = 1) -> PauliChannelProbs:
    """Depolarising channel, optionally concatenated over ``swaps`` swaps.

    Concatenation keeps the form with 1 - p' = (1 - p)**swaps.
    """
    if not 0 <= p_depol < 1:
        raise ValueError(f"p_depol must lie in [0, 1), got {p_depol!r}")
    if swaps < 0:
        raise ValueError("swap count must be >= 0")
    p = 1.0 - (1.0 - p_depol) ** swaps
    return PauliChannelProbs.from_weights([1 - 0.75 * p, 0.25 * p, 0.25 * p, 0.25 * p])


def transition_matrix(channel: PauliChannelProbs) -> np.ndarray:
    """Symmetric matrix that maps the weights of one channel through another."""
    p1, p2, p3, p4 = channel.as_array()
    return np.array(
        [
            [p1, p2, p3, p4],
            [p2, p1, p4, p3],
            [p3, p4, p1, p2],
            [p4, p3, p2, p1],
        ]
    )


def compose_pauli(chain: Sequence[PauliChannelProbs]) -> PauliChannelProbs:
    """Compose Pauli channels by repeated matrix application."""
    if len(chain) == 0:
        raise ValueError("cannot compose an empty chain")
    vec = np.array([1.0, 0.0, 0.0, 0.0])
    for ch in chain:
        vec = transition_matrix(ch) @ vec
    return PauliChannelProbs.from_weights(vec)


def compose_pauli_power(channel: PauliChannelProbs, k: int) -> PauliChannelProbs:
    """k-fold self-composition by repeated squaring of the transition matrix.

    The matrix is entrywise non-negative, so no negative weights can appear.
    """
    if k < 0:
        raise ValueError("power must be >= 0")
    mat = np.linalg.matrix_power(transition_matrix(channel), k)
    return PauliChannelProbs.from_weights(mat[:, 0])


def bell_to_pauli(mix: BellMix) -> PauliChannelProbs:
    return PauliChannelProbs.from_weights(mix.as_array())


def pauli_to_bell(channel: PauliChannelProbs) -> BellMix:
    return BellMix.from_weights(channel.as_array())


def swap_chain_bell_diagonal(per_segment: Sequence[PauliChannelProbs]) -> BellMix:
    """End-to-end Bell mixture after ideal swaps of segments carrying these errors."""
    if len(per_segment) < 1:
        raise ValueError("need at least one segment")
    return pauli_to_bell(compose_pauli(per_segment))


def erase_offdiagonals(state: ConditionalState) -> BellMix:
    """Bell-diagonal part of a conditional state, normalised."""
    norm = state.trace
    if not norm > 0:
        raise ValueError(f"conditional state has non-positive trace {norm!r}")
    rc, rf = float(np.real(state.c)), float(np.real(state.f))
    return BellMix.from_weights(
        [(state.a + rc) / norm, (state.a - rc) / norm, (state.b + rf) / norm, (state.b - rf) / norm]
    )


def swap_recursion_dark(state0: ConditionalState, levels: int) -> ConditionalState:
    """Apply ``levels`` rounds of the doubling swap recursion (Phi+ outcome).

    The output is unnormalised; its overall scale is not a probability.
    """
    if levels < 0:
        raise ValueError("levels must be >= 0")
    a, b = state0.a, state0.b
    c, d1, d2, f = (complex(v) for v in (state0.c, state0.d1, state0.d2, state0.f))
    for _ in range(levels):
        dd = d1 * d2
        a, b, c, d1, d2, f = (
            a * a + b * b + 2 * dd.real,
            2 * (a * b + dd.real),
            2 * dd + abs(f) ** 2 + c * c,
            d1 * (a + b + c) + np.conj(d1 * f),
            d2 * (a + b + c) + f * np.conj(d2),
            2 * (d2 * np.conj(d1) + f * c.real),
        )
        # rescale to keep numbers in range over many levels
        scale = 2 * (a + b)
        a, b, c, d1, d2, f = a / scale, b / scale, c / scale, d1 / scale, d2 / scale, f / scale
    return ConditionalState(float(a), float(b), complex(c), complex(d1), complex(d2), complex(f))


def _closure(generators: Iterable[Permutation]) -> list:
    ident = (0, 1, 2, 3)
    group = {ident}
    frontier = [ident]
    gens = list(generators)
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                comp = tuple(g[h[i]] for i in range(4))
                if comp not in group:
                    group.add(comp)
                    nxt.append(comp)
        frontier = nxt
    return sorted(group)


PERMUTATION_SETS = {
    "none": [(0, 1, 2, 3)],
    "local": _closure([_X_RELABEL, _Z_RELABEL, _HH_RELABEL]),
    "all": sorted(itertools.permutations(range(4))),
}


def apply_permutation(mix: BellMix, perm: Permutation) -> BellMix:
    """New weight i is old weight perm[i]."""
    w = mix.as_array()
    return BellMix.from_weights([w[perm[i]] for i in range(4)])


def bell_permutation_optimize(mix: BellMix, mode: str = "all", f_EC: float = DEFAULT_F_EC) -> BellMix:
    """Relabel Bell weights to maximise the BB84 key fraction.

    Ties go to the lexicographically smallest permutation in ``mode``.
    """
    try:
        perms = PERMUTATION_SETS[mode]
    except KeyError:
        raise ValueError(f"unknown permutation mode {mode!r}") from None
    best, best_val = None, -1.0
    for perm in perms:
        cand = apply_permutation(mix, perm)
        val = secret_key_fraction(cand, f_EC)
        if val > best_val + 1e-15:
            best, best_val = cand, val
    return best
