"""Brute-force reference simulations, independent of the closed forms.

These are slow and only meant for validation: a truncated Fock-space model
of the middle-station optics and a four-qubit density-matrix model of
entanglement swapping.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

FOCK_CUTOFF = 40

# table order (uu, dd, ud, du) -> computational index with up = 0
TABLE_TO_COMPUTATIONAL = np.array([0, 3, 1, 2])
_SPIN_A = np.array([1, -1, 1, -1])
_SPIN_B = np.array([1, -1, -1, 1])


def coherent_vector(beta: complex, cutoff: int = FOCK_CUTOFF) -> np.ndarray:
    k = np.arange(cutoff + 1)
    logmag = k * np.log(abs(beta)) - 0.5 * gammaln(k + 1) if beta != 0 else None
    if beta == 0:
        vec = np.zeros(cutoff + 1, dtype=complex)
        vec[0] = 1.0
        return vec
    phase = np.exp(1j * k * np.angle(beta))
    return np.exp(-0.5 * abs(beta) ** 2 + logmag) * phase


def coherent_tail_mass(beta: complex, cutoff: int = FOCK_CUTOFF) -> float:
    v = coherent_vector(beta, cutoff)
    return max(0.0, 1.0 - float(np.sum(np.abs(v) ** 2)))


@lru_cache(maxsize=None)
def _ladder(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1)), 1).astype(complex)


@lru_cache(maxsize=None)
def _two_mode_mixer(angle: float, cutoff: int) -> np.ndarray:
    """exp(angle (a^dag b - a b^dag)) on the truncated two-mode space."""
    a = _ladder(cutoff)
    eye = np.eye(cutoff + 1)
    A = np.kron(a, eye)
    B = np.kron(eye, a)
    gen = A.conj().T @ B - A @ B.conj().T
    return expm(angle * gen)


def beam_splitter(cutoff: int = FOCK_CUTOFF) -> np.ndarray:
    """50:50 splitter mapping |u>|v> to |(u+v)/sqrt2>|(u-v)/sqrt2>."""
    # the bare mixer sends the second port to (v-u)/sqrt2; a parity flip fixes the sign
    parity = np.diag((-1.0) ** np.arange(cutoff + 1))
    return np.kron(np.eye(cutoff + 1), parity) @ _two_mode_mixer(math.pi / 4, cutoff)


@lru_cache(maxsize=None)
def _sparse_mixer_generator(cutoff: int):
    a = sparse.csr_matrix(_ladder(cutoff))
    eye = sparse.identity(cutoff + 1, format="csr")
    A = sparse.kron(a, eye, format="csr")
    B = sparse.kron(eye, a, format="csr")
    return (A.conj().T @ B - A @ B.conj().T).tocsr()


def lossy_branch(beta: complex, transmission: float, cutoff: int = FOCK_CUTOFF) -> np.ndarray:
    """Signal x environment amplitude matrix after a pure-loss channel."""
    angle = math.acos(min(1.0, math.sqrt(transmission)))
    vec = np.kron(coherent_vector(beta, cutoff), np.eye(cutoff + 1)[0])
    out = expm_multiply(angle * _sparse_mixer_generator(cutoff), vec)
    return out.reshape(cutoff + 1, cutoff + 1)


def _environment_frame(branches, rtol: float = 1e-15) -> np.ndarray:
    """Orthonormal basis of the environment states reached by any branch."""
    stacked = np.vstack(branches)
    _, sv, vh = np.linalg.svd(stacked, full_matrices=False)
    keep = sv > rtol * sv[0]
    return vh[keep].conj().T


def _click_operator(kind: str, dark_noclick: float, cutoff: int) -> np.ndarray:
    diag = np.ones(cutoff + 1)
    k = np.arange(cutoff + 1)
    if kind == "onoff":
        diag[0] = 1.0 - dark_noclick
    elif kind == "even":
        diag = ((k % 2 == 0) & (k > 0)).astype(float)
    elif kind == "odd":
        diag = (k % 2 == 1).astype(float)
    else:
        raise ValueError(kind)
    return np.diag(diag).astype(complex)


@lru_cache(maxsize=8)
def _detection_kernel(kind: str, dark_noclick: float, cutoff: int) -> np.ndarray:
    """U^dag (1 x E) U on the two input modes."""
    U = beam_splitter(cutoff)
    E = np.kron(np.eye(cutoff + 1), _click_operator(kind, dark_noclick, cutoff))
    return U.conj().T @ E @ U


def fock_segment_matrix(
    alpha_a: complex,
    alpha_b: complex,
    theta: float,
    trans_a: float,
    trans_b: float,
    dark_noclick: float = 1.0,
    kind: str = "onoff",
    cutoff: int = FOCK_CUTOFF,
) -> np.ndarray:
    """Table-layout segment matrix from a truncated Fock-space simulation.

    ``kind`` selects the detector outcome on the dark port: "onoff" (with
    dark counts) or a PNRD parity "even" / "odd".
    """
    G = _detection_kernel(kind, float(dark_noclick), cutoff)
    branches_a = [lossy_branch(alpha_a * np.exp(-1j * theta * s), trans_a, cutoff) for s in _SPIN_A]
    branches_b = [lossy_branch(alpha_b * np.exp(-1j * theta * s), trans_b, cutoff) for s in _SPIN_B]
    # the environment trace pairs branch k with branch j, so project every
    # branch on one shared environment frame before tracing it out
    frame_a = _environment_frame(branches_a)
    frame_b = _environment_frame(branches_b)
    d = cutoff + 1
    vecs = []
    for ba, bb in zip(branches_a, branches_b):
        ra, rb = ba @ frame_a, bb @ frame_b
        vecs.append(np.einsum("ae,bf->abef", ra, rb).reshape(d * d, -1))
    out = np.zeros((4, 4), dtype=complex)
    for k in range(4):
        g_k = G @ vecs[k]
        for j in range(4):
            out[k, j] = np.sum(vecs[j].conj() * g_k)
    return out


# --- four-qubit swapping model -------------------------------------------

_PAULI = {
    0: np.eye(2, dtype=complex),
    1: np.array([[1, 0], [0, -1]], dtype=complex),
    2: np.array([[0, 1], [1, 0]], dtype=complex),
    3: np.array([[0, -1j], [1j, 0]], dtype=complex),
}


def bell_vectors() -> np.ndarray:
    """Rows: Phi+, Phi-, Psi+, Psi- in the computational basis."""
    s = 1 / math.sqrt(2)
    return np.array(
        [[s, 0, 0, s], [s, 0, 0, -s], [0, s, s, 0], [0, s, -s, 0]], dtype=complex
    )


def bell_diagonal_matrix(weights) -> np.ndarray:
    vecs = bell_vectors()
    return sum(w * np.outer(v, v.conj()) for w, v in zip(weights, vecs))


def bell_weights(rho: np.ndarray) -> np.ndarray:
    vecs = bell_vectors()
    return np.array([np.real(v.conj() @ rho @ v) for v in vecs])


def table_to_computational(m: np.ndarray) -> np.ndarray:
    out = np.zeros((4, 4), dtype=complex)
    idx = TABLE_TO_COMPUTATIONAL
    out[np.ix_(idx, idx)] = m
    return out


def computational_to_table(rho: np.ndarray) -> np.ndarray:
    idx = TABLE_TO_COMPUTATIONAL
    return rho[np.ix_(idx, idx)]


def _swap_project(rho1: np.ndarray, rho2: np.ndarray, outcome: int) -> np.ndarray:
    """Unnormalised state of qubits (0, 3) after projecting qubits (1, 2) on a Bell state."""
    big = np.kron(rho1, rho2).reshape([2] * 8)
    bell = bell_vectors()[outcome].reshape(2, 2)
    # contract qubits 1 and 2 (ket indices 1,2 ; bra indices 5,6)
    return np.einsum("aijbckld,ij,kl->abcd", big, bell.conj(), bell).reshape(4, 4)


def brute_force_swap(rho1: np.ndarray, rho2: np.ndarray, outcome: int = 0, correct: bool = False) -> np.ndarray:
    """Swap two pairs given as computational-basis 4x4 matrices.

    With ``correct=True`` all four outcomes are Pauli-corrected on qubit 3 and
    averaged; otherwise the unnormalised projection on ``outcome`` is returned.
    """
    if not correct:
        return _swap_project(rho1, rho2, outcome)
    # outcome (Phi+, Phi-, Psi+, Psi-) leaves a (I, Z, X, Y) error on the far qubit
    total = np.zeros((4, 4), dtype=complex)
    for k in range(4):
        proj = _swap_project(rho1, rho2, k)
        fix = np.kron(np.eye(2), _PAULI[k])
        total += fix @ proj @ fix.conj().T
    return total / np.trace(total).real


def pauli_on_phi_plus(weights) -> np.ndarray:
    """Apply a Pauli channel with these weights to qubit 1 of a perfect Phi+."""
    phi = bell_vectors()[0]
    base = np.outer(phi, phi.conj())
    out = np.zeros((4, 4), dtype=complex)
    for k, w in enumerate(weights):
        op = np.kron(np.eye(2), _PAULI[k])
        out += w * op @ base @ op.conj().T
    return out


# --- quadrature-window model of homodyne detection ----------------------------
# quadratures x = (a + a^dag)/2 and p = (a - a^dag)/(2i), vacuum variance 1/4


def _coherent_wavefunction(beta: complex, u, quadrature: str):
    x0, p0 = beta.real, beta.imag
    norm = (2 / math.pi) ** 0.25
    if quadrature == "x":
        return norm * np.exp(-((u - x0) ** 2) + 2j * p0 * u - 1j * x0 * p0)
    return norm * np.exp(-((u - p0) ** 2) - 2j * x0 * u + 1j * x0 * p0)


def window_overlap(beta_bra: complex, beta_ket: complex, half_width: float, quadrature: str) -> complex:
    """<beta_bra| P(|q| < half_width) |beta_ket> by numerical quadrature."""
    from scipy.integrate import quad

    def integrand(u, part):
        val = np.conj(_coherent_wavefunction(beta_bra, u, quadrature)) * _coherent_wavefunction(beta_ket, u, quadrature)
        return val.real if part == 0 else val.imag

    lo, hi = (-half_width, half_width) if math.isfinite(half_width) else (-np.inf, np.inf)
    re = quad(integrand, lo, hi, args=(0,), epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    im = quad(integrand, lo, hi, args=(1,), epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return complex(re, im)


def homodyne_window_matrix(alpha: float, theta: float, dp: float, dx: float) -> np.ndarray:
    """Lossless table-layout matrix for a p-window on the bright port and an x-window on the dark port."""
    u = alpha * np.exp(-1j * theta * _SPIN_A)
    v = alpha * np.exp(-1j * theta * _SPIN_B)
    bright = (u + v) / math.sqrt(2)
    dark = (u - v) / math.sqrt(2)
    out = np.zeros((4, 4), dtype=complex)
    for k in range(4):
        for j in range(4):
            out[k, j] = window_overlap(bright[j], bright[k], dp, "p") * window_overlap(dark[j], dark[k], dx, "x")
    return out
