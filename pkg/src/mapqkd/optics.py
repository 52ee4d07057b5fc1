"""Middle-station optics: click probabilities and conditional memory states.

Every state here is returned in the unnormalised (a, b, c, d1, d2, f)
layout over the basis (uu, dd, ud, du):

    [[a,  c*, d1*, d2*],
     [c,  a,  d2,  d1 ],
     [d1, d2*, b,  f* ],
     [d2, d1*, f,  b  ]]

The matrix is four times the true unnormalised density operator, so its
trace 2(a+b) equals four times the click probability. A spin up imprints a
phase exp(-i theta) on its coherent pulse, a spin down exp(+i theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

from .core import BellMix, ConfigurationError, ProtocolParams, derived_transmissions

ERF_IMAG_LIMIT = 10.0
MAX_REP_RATE = 1e7  # local-operation limit for the asymmetric layout (Hz)

# spin sign per basis slot: +1 means phase exp(-i theta)
_SPIN_A = np.array([1, -1, 1, -1])
_SPIN_B = np.array([1, -1, -1, 1])


class IntegrationError(RuntimeError):
    """Adaptive quadrature missed its tolerance."""

    def __init__(self, message: str, achieved: float):
        self.achieved = achieved
        super().__init__(f"{message} (achieved error estimate {achieved:.3e})")


@dataclass(frozen=True)
class ConditionalState:
    """Unnormalised two-qubit state after a heralded middle-station event.

    ``has_coherences`` is False when d1/d2 were not computed (homodyne); the
    Bell-diagonal reduction never needs them.
    """

    a: float
    b: float
    c: complex
    d1: complex
    d2: complex
    f: complex
    has_coherences: bool = True

    @property
    def trace(self) -> float:
        return 2.0 * (self.a + self.b)

    def matrix(self) -> np.ndarray:
        a, b, c, d1, d2, f = self.a, self.b, self.c, self.d1, self.d2, self.f
        cj = np.conj
        return np.array(
            [
                [a, cj(c), cj(d1), cj(d2)],
                [c, a, d2, d1],
                [d1, cj(d2), b, cj(f)],
                [d2, cj(d1), f, b],
            ],
            dtype=complex,
        )

    @classmethod
    def from_matrix(cls, m: np.ndarray, atol: float = 1e-9) -> "ConditionalState":
        """Read coefficients off a 4x4 matrix, symmetrising the table layout.

        Raises ValueError if the matrix departs from the table structure by
        more than ``atol`` relative to its trace.
        """
        m = np.asarray(m, dtype=complex)
        a = 0.5 * (m[0, 0] + m[1, 1]).real
        b = 0.5 * (m[2, 2] + m[3, 3]).real
        c = 0.5 * (m[1, 0] + np.conj(m[0, 1]))
        d1 = 0.25 * (m[2, 0] + np.conj(m[0, 2]) + m[1, 3] + np.conj(m[3, 1]))
        d2 = 0.25 * (m[3, 0] + np.conj(m[0, 3]) + m[1, 2] + np.conj(m[2, 1]))
        f = 0.5 * (m[3, 2] + np.conj(m[2, 3]))
        state = cls(float(a), float(b), complex(c), complex(d1), complex(d2), complex(f))
        scale = max(abs(np.trace(m)), 1e-300)
        dev = np.max(np.abs(state.matrix() - m)) / scale
        if dev > atol:
            raise ValueError(f"matrix departs from the conditional-state layout by {dev:.3e}")
        return state

    def normalized_matrix(self) -> np.ndarray:
        return self.matrix() / self.trace


def coherent_overlap(beta1: complex, beta2: complex) -> complex:
    """<beta1|beta2> for coherent states."""
    return complex(np.exp(-0.5 * abs(beta1) ** 2 - 0.5 * abs(beta2) ** 2 + np.conj(beta1) * beta2))


def _overlap_matrix(vecs: np.ndarray) -> np.ndarray:
    """G[k, j] = <v_j|v_k> for a vector of coherent amplitudes."""
    sq = np.abs(vecs) ** 2
    return np.exp(-0.5 * sq[:, None] - 0.5 * sq[None, :] + vecs[:, None] * np.conj(vecs)[None, :])


def segment_state_matrix(
    amp_a: complex,
    amp_b: complex,
    theta: float,
    trans_a: float,
    trans_b: float,
    dark_noclick: float,
) -> np.ndarray:
    """Table-layout matrix of one segment from explicit coherent-state overlaps.

    Parameters
    ----------
    amp_a, amp_b : complex
        Amplitudes emitted by the two memories (before the spin phase).
    theta : float
        Dispersive rotation angle.
    trans_a, trans_b : float
        Intensity transmissions from each memory to the 50:50 beam splitter,
        detector efficiency included.
    dark_noclick : float
        Probability that the detector stays silent on vacuum.

    Returns
    -------
    numpy.ndarray
        4x4 complex matrix with trace four times the click probability.
    """
    phase_a = np.exp(-1j * theta * _SPIN_A)
    phase_b = np.exp(-1j * theta * _SPIN_B)
    ta, tb = math.sqrt(trans_a), math.sqrt(trans_b)
    u = ta * amp_a * phase_a
    v = tb * amp_b * phase_b
    lost_a = math.sqrt(max(0.0, 1 - trans_a)) * amp_a * phase_a
    lost_b = math.sqrt(max(0.0, 1 - trans_b)) * amp_b * phase_b
    bright = (u + v) / math.sqrt(2)
    dark = (u - v) / math.sqrt(2)
    vac = np.exp(-0.5 * np.abs(dark) ** 2)
    click = _overlap_matrix(dark) - dark_noclick * vac[:, None] * vac[None, :]
    return _overlap_matrix(bright) * _overlap_matrix(lost_a) * _overlap_matrix(lost_b) * click


def _onoff_coefficients(x: float, alpha: float, theta: float, sqrt_eta: float, dark_noclick: float):
    a = 1.0 - dark_noclick
    # expm1 keeps the tiny click probabilities of long links accurate
    lost = math.expm1(-2 * sqrt_eta * x)
    b = a - dark_noclick * lost
    s2 = alpha**2 * math.sin(2 * theta)
    c = a * np.exp(-4 * x + 2j * s2)
    d = a * np.exp(-2 * x + 1j * s2)
    f = math.exp(-2 * x * (2 - sqrt_eta)) * (lost + a)
    return ConditionalState(a, b, complex(c), complex(d), complex(d), complex(f))


def conditional_state_onoff(params: ProtocolParams, sqrt_eta: Optional[float] = None) -> ConditionalState:
    """Closed-form on/off state with dark counts for one symmetric segment."""
    if sqrt_eta is None:
        sqrt_eta = derived_transmissions(params).sqrt_eta
    return _onoff_coefficients(params.x, params.alpha, params.theta, sqrt_eta, params.dark_noclick_vacuum)


def click_probability(params: ProtocolParams, variant: str = "onoff", sqrt_eta: Optional[float] = None) -> float:
    """Per-round heralding probability of one segment.

    The PNRD variant ignores dark counts, as its state model does.
    """
    if sqrt_eta is None:
        sqrt_eta = derived_transmissions(params).sqrt_eta
    mu = 2 * sqrt_eta * params.x
    if variant == "onoff":
        return params.p_dark - 0.5 * params.dark_noclick_vacuum * math.expm1(-mu)
    if variant == "pnrd":
        return -0.5 * math.expm1(-mu)
    raise ConfigurationError(f"unknown click variant {variant!r}", "detector")


def pnrd_parity_probabilities(params: ProtocolParams, sqrt_eta: Optional[float] = None) -> dict:
    """Probabilities of an odd and of an even non-zero photon count."""
    if sqrt_eta is None:
        sqrt_eta = derived_transmissions(params).sqrt_eta
    mu = 2 * sqrt_eta * params.x
    odd = 0.25 * (-math.expm1(-2 * mu))
    even = 0.5 * (0.5 * (1 + math.exp(-2 * mu)) - math.exp(-mu))
    return {"odd": odd, "even": max(0.0, even)}


def conditional_state_pnrd(
    params: ProtocolParams,
    parity: str,
    sqrt_eta: Optional[float] = None,
    model: str = "nominal",
) -> BellMix:
    """Bell mixture heralded by an even or odd photon count.

    ``model="nominal"`` uses the coherence factor exp(-2(1-sqrt_eta)x);
    ``model="exact"`` uses exp(-4(1-sqrt_eta)x), which is what the explicit
    loss-mode overlaps (and the Fock oracle) give.
    """
    if parity not in ("even", "odd"):
        raise ConfigurationError(f"parity must be 'even' or 'odd', got {parity!r}")
    if sqrt_eta is None:
        sqrt_eta = derived_transmissions(params).sqrt_eta
    if model == "nominal":
        coherence = math.exp(-2 * (1 - sqrt_eta) * params.x)
    elif model == "exact":
        coherence = math.exp(-4 * (1 - sqrt_eta) * params.x)
    else:
        raise ConfigurationError(f"unknown PNRD model {model!r}")
    big, small = 0.5 * (1 + coherence), 0.5 * (1 - coherence)
    if parity == "even":
        return BellMix.from_weights([0.0, 0.0, big, small])
    return BellMix.from_weights([0.0, 0.0, small, big])


def complex_erf(z):
    """erf at complex argument, restricted to |Im z| <= 10."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z.imag) > ERF_IMAG_LIMIT):
        raise ConfigurationError(
            f"complex erf argument with |Im| > {ERF_IMAG_LIMIT} is outside the supported range"
        )
    return special.erf(z)


def conditional_state_homodyne(params: ProtocolParams, sqrt_eta: Optional[float] = None) -> ConditionalState:
    """Window-postselected state for p-quadrature / x-quadrature detection.

    Loss enters only through the amplitude inside the error functions,
    alpha -> alpha * eta**(1/4). d1 and d2 are left at zero and flagged.
    """
    if params.homodyne_windows is None:
        raise ConfigurationError("homodyne detection needs acceptance windows", "homodyne_windows")
    dp, dx = params.homodyne_windows
    if dp <= 0 or dx <= 0:
        raise ConfigurationError("window half-widths must be positive", "homodyne_windows")
    if sqrt_eta is None:
        sqrt_eta = derived_transmissions(params).sqrt_eta
    s = math.sin(params.theta)
    shift = 2 * params.alpha * math.sqrt(sqrt_eta) * s
    rp, rx = math.sqrt(2) * dp, math.sqrt(2) * dx
    a = 0.5 * (math.erf(rp - shift) + math.erf(rp + shift))
    b = math.erf(rp)
    c = np.exp(2 * params.alpha**2 * (-1 + np.exp(2j * params.theta))) * b
    ratio = complex_erf(rx + 1j * shift).real / math.erf(rx)
    f = math.exp(-4 * params.alpha**2 * s**2) * b * ratio
    return ConditionalState(a, b, complex(c), 0j, 0j, complex(f), has_coherences=False)


def homodyne_success_probability(params: ProtocolParams, sqrt_eta: Optional[float] = None) -> float:
    state = conditional_state_homodyne(params, sqrt_eta)
    dx = params.homodyne_windows[1]
    return 0.5 * (state.a + state.b) * math.erf(math.sqrt(2) * dx)


def asymmetric_transmissions(params: ProtocolParams):
    """(outer, middle) intensity transmissions to the displaced beam splitter."""
    if params.n != 2:
        raise ConfigurationError("the asymmetric layout is defined for n = 2 only", "n")
    seg = params.L_total / 2
    outer = params.p_det * math.exp(-params.beta_asym * seg / params.L_att)
    middle = params.p_det * math.exp(-(1 - params.beta_asym) * seg / params.L_att)
    return outer, middle


def asymmetric_amplitude_at_splitter(params: ProtocolParams) -> float:
    """Amplitude reaching the beam splitter, fixed to its symmetric value."""
    return params.alpha * math.sqrt(derived_transmissions(params).sqrt_eta)


def asymmetric_round_time(params: ProtocolParams) -> float:
    """Round time set by the memory to beam-splitter round trip, floored by the source limit."""
    seg = params.L_total / 2
    return max(2 * (1 - params.beta_asym) * seg / params.c_fiber, 1.0 / MAX_REP_RATE)


def conditional_state_asymmetric(params: ProtocolParams) -> ConditionalState:
    """Loss-only state for n = 2 with the beam splitter pushed towards the memory.

    Both sides pick their launch amplitude so that the same amplitude arrives
    at the beam splitter.
    """
    if params.dark_noclick_vacuum != 1.0:
        raise ConfigurationError("asymmetric layout is modelled loss-only", "dark_noclick_vacuum")
    outer, middle = asymmetric_transmissions(params)
    amp_bs = asymmetric_amplitude_at_splitter(params)
    y = amp_bs**2 * math.sin(params.theta) ** 2
    lost_outer = amp_bs**2 * (1 / outer - 1)
    lost_middle = amp_bs**2 * (1 / middle - 1)
    b = -math.expm1(-2 * y)
    e2 = np.exp(2j * params.theta)
    f = math.expm1(-2 * y) * math.exp(-2 * y) * np.exp(
        -(lost_middle * (1 - np.conj(e2)) + lost_outer * (1 - e2))
    )
    return ConditionalState(0.0, b, 0j, 0j, 0j, complex(f))


def conditional_state_asymmetric_overlaps(params: ProtocolParams) -> ConditionalState:
    """Same state as above, built from the general overlap machinery."""
    outer, middle = asymmetric_transmissions(params)
    amp_bs = asymmetric_amplitude_at_splitter(params)
    m = segment_state_matrix(
        amp_bs / math.sqrt(outer), amp_bs / math.sqrt(middle), params.theta, outer, middle, params.dark_noclick_vacuum
    )
    return ConditionalState.from_matrix(m)


def _mismatch_matrix(params: ProtocolParams, sqrt_eta: float, phi: float) -> np.ndarray:
    return segment_state_matrix(
        params.alpha, params.alpha * np.exp(1j * phi), params.theta, sqrt_eta, sqrt_eta, params.dark_noclick_vacuum
    )


def phase_mismatch_average(
    params: ProtocolParams,
    quantity: str = "bell_mix",
    conditioned: bool = True,
    sqrt_eta: Optional[float] = None,
    epsabs: float = 1e-10,
):
    """Average over a uniform phase offset on Bob's pulse in (-delta/2, delta/2).

    For ``quantity="state"`` the averaged :class:`ConditionalState` is returned,
    for ``"bell_mix"`` its Bell-diagonal part and for ``"click_prob"`` the mean
    heralding probability. The conditioned average divides the integrated
    unnormalised state by the integrated trace; the plain average first
    normalises the state at every phase.
    """
    from .channels import erase_offdiagonals

    if quantity not in ("bell_mix", "click_prob", "state"):
        raise ConfigurationError(f"unknown quantity {quantity!r}")
    if sqrt_eta is None:
        sqrt_eta = derived_transmissions(params).sqrt_eta
    delta = params.delta_phase
    if delta == 0:
        state = conditional_state_onoff(params, sqrt_eta)
        if quantity == "click_prob":
            return state.trace / 4
        return state if quantity == "state" else erase_offdiagonals(state)

    def integrand(phi):
        m = _mismatch_matrix(params, sqrt_eta, phi)
        if not conditioned:
            m = m / np.trace(m).real
        return np.concatenate([m.real.ravel(), m.imag.ravel()])

    total, err = integrate.quad_vec(integrand, -delta / 2, delta / 2, epsabs=epsabs, epsrel=1e-10, limit=400)
    if not np.isfinite(err) or err > max(epsabs, 1e-8 * np.max(np.abs(total))) * 100:
        raise IntegrationError("phase-mismatch quadrature did not converge", float(err))
    avg = (total[:16] + 1j * total[16:]).reshape(4, 4) / delta
    if quantity == "click_prob":
        if not conditioned:
            raise ConfigurationError("click probability average is always the plain mean")
        return float(np.trace(avg).real) / 4
    state = ConditionalState.from_matrix(avg, atol=1e-8)
    return state if quantity == "state" else erase_offdiagonals(state)
