"""Shared value types, parameter validation and elementary math.

Units are fixed across the package: kilometres, seconds, radians. Rates are
bits per channel use or bits per second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import NamedTuple, Optional, Tuple

import numpy as np

SCHEMES = ("parallel", "sequential")
DETECTORS = ("onoff", "pnrd", "homodyne")

# main-text parameter set
DEFAULT_ALPHA = 23.9
DEFAULT_THETA = 0.01
DEFAULT_L_ATT = 22.0
DEFAULT_C_FIBER = 2e5
DEFAULT_P_DET = 0.15
DEFAULT_P_DARK = 8e-8
DEFAULT_P_DEPOL = 1e-2
DEFAULT_F_EC = 1.15

NEG_CLAMP = 1e-12
SUM_TOL = 1e-9


class ConfigurationError(ValueError):
    """Invalid or unsupported parameter combination."""

    def __init__(self, message: str, field_name: Optional[str] = None):
        self.field_name = field_name
        if field_name is not None:
            message = f"{field_name}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class ProtocolParams:
    """Full description of one memory-assisted phase-matching QKD configuration.

    ``scheme=None`` picks the usual strategy: parallel for ``n <= 2`` and
    sequential otherwise. ``store_ends`` controls whether Alice and Bob keep
    their qubits in memory until the end (True) or measure them right away.
    """

    n: int = 2
    alpha: float = DEFAULT_ALPHA
    theta: float = DEFAULT_THETA
    L_total: float = 100.0
    L_att: float = DEFAULT_L_ATT
    c_fiber: float = DEFAULT_C_FIBER
    p_det: float = DEFAULT_P_DET
    dark_noclick_vacuum: float = 1.0 - DEFAULT_P_DARK
    T_coherence: float = math.inf
    p_depol: float = DEFAULT_P_DEPOL
    f_EC: float = DEFAULT_F_EC
    scheme: Optional[str] = None
    detector: str = "onoff"
    cutoff_rounds: Optional[int] = None
    delta_phase: float = 0.0
    homodyne_windows: Optional[Tuple[float, float]] = None
    beta_asym: float = 0.5
    store_ends: bool = False

    def __post_init__(self):
        def bad(name, why):
            raise ConfigurationError(why, name)

        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            bad("n", f"must be a positive integer, got {self.n!r}")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            bad("alpha", f"must be a finite non-negative real, got {self.alpha!r}")
        if not (0 < self.theta <= math.pi / 2):
            bad("theta", f"must lie in (0, pi/2], got {self.theta!r}")
        if not (self.L_total >= 0 and math.isfinite(self.L_total)):
            bad("L_total", f"must be a finite non-negative distance, got {self.L_total!r}")
        if not (self.L_att > 0):
            bad("L_att", f"must be positive, got {self.L_att!r}")
        if not (self.c_fiber > 0):
            bad("c_fiber", f"must be positive, got {self.c_fiber!r}")
        if not (0 < self.p_det <= 1):
            bad("p_det", f"must lie in (0, 1], got {self.p_det!r}")
        if not (0 < self.dark_noclick_vacuum <= 1):
            bad("dark_noclick_vacuum", f"must lie in (0, 1], got {self.dark_noclick_vacuum!r}")
        if not (self.T_coherence > 0):
            bad("T_coherence", f"must be positive or inf, got {self.T_coherence!r}")
        if not (0 <= self.p_depol < 1):
            bad("p_depol", f"must lie in [0, 1), got {self.p_depol!r}")
        if not (self.f_EC >= 1):
            bad("f_EC", f"must be >= 1, got {self.f_EC!r}")
        if self.scheme is not None and self.scheme not in SCHEMES:
            bad("scheme", f"must be one of {SCHEMES}, got {self.scheme!r}")
        if self.detector not in DETECTORS:
            bad("detector", f"must be one of {DETECTORS}, got {self.detector!r}")
        if self.cutoff_rounds is not None:
            if isinstance(self.cutoff_rounds, bool) or int(self.cutoff_rounds) != self.cutoff_rounds \
                    or self.cutoff_rounds < 1:
                bad("cutoff_rounds", f"must be a positive integer, got {self.cutoff_rounds!r}")
        if not (self.delta_phase >= 0 and math.isfinite(self.delta_phase)):
            bad("delta_phase", f"must be finite and >= 0, got {self.delta_phase!r}")
        if self.homodyne_windows is not None:
            if len(self.homodyne_windows) != 2 or not all(w > 0 for w in self.homodyne_windows):
                bad("homodyne_windows", f"needs two positive half-widths, got {self.homodyne_windows!r}")
        if self.detector == "homodyne" and self.homodyne_windows is None:
            bad("homodyne_windows", "required when detector is 'homodyne'")
        if not (0.5 <= self.beta_asym < 1):
            bad("beta_asym", f"must lie in [1/2, 1), got {self.beta_asym!r}")

    @property
    def effective_scheme(self) -> str:
        if self.scheme is not None:
            return self.scheme
        return "parallel" if self.n <= 2 else "sequential"

    @property
    def x(self) -> float:
        """alpha^2 sin^2(theta), the only combination the loss-only physics sees."""
        return self.alpha**2 * math.sin(self.theta) ** 2

    @property
    def p_dark(self) -> float:
        return 1.0 - self.dark_noclick_vacuum

    def replace(self, **changes) -> "ProtocolParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        unknown = set(changes) - set(values)
        if unknown:
            raise ConfigurationError(f"unknown field(s) {sorted(unknown)}")
        values.update(changes)
        return ProtocolParams(**values)


class Transmissions(NamedTuple):
    sqrt_eta: float
    eta_total: float
    tau: float


def derived_transmissions(params: ProtocolParams) -> Transmissions:
    """Per-half-segment transmission, end-to-end fibre transmission, round time."""
    sqrt_eta = params.p_det * math.exp(-params.L_total / (2 * params.n * params.L_att))
    eta_total = math.exp(-params.L_total / params.L_att)
    tau = params.L_total / (params.n * params.c_fiber)
    return Transmissions(sqrt_eta, eta_total, tau)


def binary_entropy(x):
    """h(x) = -x log2 x - (1-x) log2 (1-x), with h(0) = h(1) = 0.

    Works elementwise on arrays. Raises ValueError outside [0, 1].
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr >= 0) & (arr <= 1))):
        raise ValueError(f"binary entropy argument outside [0, 1]: {x!r}")
    inner = (arr > 0) & (arr < 1)
    safe = np.where(inner, arr, 0.5)
    out = np.where(inner, -safe * np.log2(safe) - (1 - safe) * np.log2(1 - safe), 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def _clean_probs(values, name):
    vals = np.array(values, dtype=float)
    if np.any(vals < -NEG_CLAMP):
        raise ValueError(f"{name}: negative weight {vals.min():.3e} beyond round-off")
    vals = np.clip(vals, 0.0, None)
    total = vals.sum()
    if total <= 0:
        raise ValueError(f"{name}: weights sum to zero")
    return vals / total


@dataclass(frozen=True)
class BellMix:
    """Bell-diagonal two-qubit state, weights on (Phi+, Phi-, Psi+, Psi-)."""

    pPhiPlus: float
    pPhiMinus: float
    pPsiPlus: float
    pPsiMinus: float

    def __post_init__(self):
        vals = self.as_array()
        if np.any(vals < -NEG_CLAMP) or np.any(vals > 1 + SUM_TOL):
            raise ValueError(f"Bell weights out of range: {vals}")
        if abs(vals.sum() - 1) > SUM_TOL:
            raise ValueError(f"Bell weights sum to {vals.sum()!r}, not 1")

    @classmethod
    def from_weights(cls, weights) -> "BellMix":
        """Clamp round-off negatives, renormalise, and build."""
        return cls(*_clean_probs(weights, "BellMix").tolist())

    def as_array(self) -> np.ndarray:
        return np.array([self.pPhiPlus, self.pPhiMinus, self.pPsiPlus, self.pPsiMinus])

    def normalized(self) -> "BellMix":
        return BellMix.from_weights(self.as_array())

    @property
    def e_Z(self) -> float:
        """Bit error in the key basis: weight on the Psi states."""
        return min(1.0, max(0.0, self.pPsiPlus + self.pPsiMinus))

    @property
    def e_X(self) -> float:
        """Phase error: weight on Phi- and Psi-."""
        return min(1.0, max(0.0, self.pPhiMinus + self.pPsiMinus))


@dataclass(frozen=True)
class PauliChannelProbs:
    """Single-qubit Pauli channel p1 rho + p2 Z rho Z + p3 X rho X + p4 Y rho Y."""

    p1: float
    p2: float
    p3: float
    p4: float

    def __post_init__(self):
        vals = self.as_array()
        if np.any(vals < -NEG_CLAMP) or np.any(vals > 1 + SUM_TOL):
            raise ValueError(f"Pauli weights out of range: {vals}")
        if abs(vals.sum() - 1) > SUM_TOL:
            raise ValueError(f"Pauli weights sum to {vals.sum()!r}, not 1")

    @classmethod
    def from_weights(cls, weights) -> "PauliChannelProbs":
        return cls(*_clean_probs(weights, "PauliChannelProbs").tolist())

    @classmethod
    def identity(cls) -> "PauliChannelProbs":
        return cls(1.0, 0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3, self.p4])


def secret_key_fraction(mix: BellMix, f_EC: float = DEFAULT_F_EC) -> float:
    """Asymptotic BB84 fraction 1 - h(e_X) - f_EC h(e_Z), clamped at zero."""
    value = 1.0 - binary_entropy(mix.e_X) - f_EC * binary_entropy(mix.e_Z)
    return max(0.0, float(value))
