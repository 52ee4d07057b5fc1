"""Secret-key rates per channel use and per second, plus comparator curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np
from scipy import optimize

from . import channels, optics, waiting
from .core import (
    BellMix,
    ConfigurationError,
    ProtocolParams,
    binary_entropy,
    derived_transmissions,
    secret_key_fraction,
)

__all__ = [
    "RatePoint",
    "secret_key_fraction",
    "loss_only_key_function",
    "optimize_loss_only_x",
    "loss_only_rate",
    "optimize_loss_only_alpha",
    "segment_bell_mix",
    "skr_per_channel_use",
    "skr_per_second",
    "benchmarks",
    "twin_field_comparator",
    "usd_comparator",
    "relay_comparator",
    "ideal_repeater_per_second",
    "asymmetric_gain",
]

TWIN_FIELD_PREFACTOR = 2.0  # two detectors at theta = pi/2 double the raw rate
TWIN_FIELD_CLOCK = 1e9
TWIN_FIELD_DARK = 7e-8
RELAY_CLOCK = 1e6
# large-loss optimum of x (1 - h((1 + exp(-4x))/2)), half of the f-optimum
TWIN_FIELD_X = 0.1145


@dataclass(frozen=True)
class RatePoint:
    L_km: float
    raw_rate: float
    skf: float
    skr_per_use: float
    skr_per_sec: float
    acceptance_fraction: float = 1.0
    benchmarks: Dict[str, float] = field(default_factory=dict)


def loss_only_key_function(x):
    """x (1 - h((1 + exp(-2x)) / 2)); vectorised."""
    x = np.asarray(x, dtype=float)
    out = x * (1 - binary_entropy(0.5 * (1 + np.exp(-2 * x))))
    return float(out) if out.ndim == 0 else out


def optimize_loss_only_x() -> Tuple[float, float]:
    """(argmax, max) of the loss-only key function."""
    res = optimize.minimize_scalar(
        lambda x: -loss_only_key_function(x), bounds=(1e-3, 2.0), method="bounded", options={"xatol": 1e-10}
    )
    return float(res.x), float(-res.fun)


def _require_loss_only(params: ProtocolParams):
    if params.dark_noclick_vacuum != 1.0 or not math.isinf(params.T_coherence) or params.p_depol != 0 \
            or params.delta_phase != 0:
        raise ConfigurationError("loss-only closed form needs no dark counts, T = inf, no depolarisation, no mismatch")


def loss_only_rate(params: ProtocolParams, pnrd_model: str = "nominal") -> float:
    """Closed-form loss-only key rate per channel use (on/off or PNRD)."""
    _require_loss_only(params)
    sqrt_eta = derived_transmissions(params).sqrt_eta
    x = params.x
    p = -0.5 * math.expm1(-2 * sqrt_eta * x)
    if params.detector == "onoff":
        coherence = math.exp(-2 * (2 - sqrt_eta) * x)
    elif params.detector == "pnrd":
        k = 2.0 if pnrd_model == "nominal" else 4.0
        coherence = math.exp(-k * (1 - sqrt_eta) * x)
    else:
        raise ConfigurationError("closed form covers on/off and PNRD only", "detector")
    skf = 1 - binary_entropy(0.5 * (1 + coherence**params.n))
    if p == 0:
        return 0.0
    return waiting.raw_rate(params.n, p, params.effective_scheme) * skf


def optimize_loss_only_alpha(params: ProtocolParams, pnrd_model: str = "nominal") -> Tuple[float, float]:
    """(alpha, rate) maximising the loss-only closed-form rate at fixed theta."""
    _require_loss_only(params)
    s = math.sin(params.theta)

    def neg_rate(x):
        return -loss_only_rate(params.replace(alpha=math.sqrt(x) / s), pnrd_model)

    res = optimize.minimize_scalar(neg_rate, bounds=(1e-4, 3.0), method="bounded", options={"xatol": 1e-9})
    return math.sqrt(float(res.x)) / s, float(-res.fun)


def segment_bell_mix(
    params: ProtocolParams,
    average: str = "conditioned",
    pnrd_model: str = "nominal",
) -> Tuple[BellMix, float, Optional[optics.ConditionalState]]:
    """Bell-diagonal segment state, heralding probability and raw conditional state.

    The conditional state is None for PNRD, whose model is Bell-diagonal
    from the start.
    """
    sqrt_eta = derived_transmissions(params).sqrt_eta
    if params.n == 2 and params.beta_asym != 0.5:
        if params.detector != "onoff":
            raise ConfigurationError("asymmetric layout is modelled with on/off detection", "detector")
        state = optics.conditional_state_asymmetric(params)
        return channels.erase_offdiagonals(state), state.trace / 4, state
    if params.detector == "onoff":
        if params.delta_phase > 0:
            state = optics.phase_mismatch_average(
                params, "state", conditioned=(average == "conditioned"), sqrt_eta=sqrt_eta
            )
            p = optics.phase_mismatch_average(params, "click_prob", sqrt_eta=sqrt_eta)
        else:
            state = optics.conditional_state_onoff(params, sqrt_eta)
            p = optics.click_probability(params, "onoff", sqrt_eta)
        return channels.erase_offdiagonals(state), p, state
    if params.detector == "pnrd":
        if params.delta_phase > 0 or params.dark_noclick_vacuum != 1.0:
            raise ConfigurationError("PNRD model has no dark counts or phase mismatch", "detector")
        # Charlie announces the parity, so odd outcomes are Z-corrected to the even form
        mix = optics.conditional_state_pnrd(params, "even", sqrt_eta, pnrd_model)
        return mix, optics.click_probability(params, "pnrd", sqrt_eta), None
    if params.delta_phase > 0:
        raise ConfigurationError("phase mismatch is modelled for on/off detection only", "delta_phase")
    state = optics.conditional_state_homodyne(params, sqrt_eta)
    return channels.erase_offdiagonals(state), optics.homodyne_success_probability(params, sqrt_eta), state


def round_time(params: ProtocolParams) -> float:
    if params.n == 2 and params.beta_asym != 0.5:
        return optics.asymmetric_round_time(params)
    return derived_transmissions(params).tau


def _end_to_end_mix(params, mix, state, stats, swap_route, permutation_mode):
    n = params.n
    if swap_route == "doubling" and n > 1:
        levels = int(round(math.log2(n)))
        if 2**levels != n:
            raise ConfigurationError("doubling swaps need n = 2^k", "n")
        if state is None or not state.has_coherences:
            raise ConfigurationError("doubling swaps need a full conditional state", "detector")
        chained = channels.erase_offdiagonals(channels.swap_recursion_dark(state, levels))
    elif swap_route in ("teleport", "doubling"):
        chained = channels.pauli_to_bell(channels.compose_pauli_power(channels.bell_to_pauli(mix), n))
    else:
        raise ConfigurationError(f"unknown swap route {swap_route!r}")
    if n == 1:
        return chained
    extra = channels.compose_pauli(
        [
            channels.depolarizing_channel(params.p_depol, n - 1),
            channels.dephasing_from_factor(stats.dephasing_expectation),
        ]
    )
    total = channels.compose_pauli([channels.bell_to_pauli(chained), extra])
    return channels.bell_permutation_optimize(channels.pauli_to_bell(total), permutation_mode, params.f_EC)


def skr_per_channel_use(
    params: ProtocolParams,
    swap_route: str = "teleport",
    permutation_mode: str = "local",
    average: str = "conditioned",
    pnrd_model: str = "nominal",
) -> RatePoint:
    """Full pipeline: segment state, swaps, memory noise, key fraction, raw rate.

    ``skr_per_sec`` is filled with the communication-limited value.
    """
    mix, p, state = segment_bell_mix(params, average, pnrd_model)
    tau = round_time(params)
    scheme = params.effective_scheme
    if params.cutoff_rounds is not None and params.n != 2:
        raise waiting.UnsupportedConfiguration("cutoff policies are only modelled for n = 2", "cutoff_rounds")
    if p <= 0:
        return RatePoint(params.L_total, 0.0, 0.0, 0.0, 0.0, 1.0)
    stats = waiting.waiting_stats(
        params.n, p, tau, params.T_coherence, scheme, params.cutoff_rounds, params.store_ends
    )
    final = _end_to_end_mix(params, mix, state, stats, swap_route, permutation_mode)
    skf = secret_key_fraction(final, params.f_EC)
    raw = waiting.raw_rate(params.n, p, scheme, params.cutoff_rounds)
    per_use = raw * skf * stats.acceptance_fraction
    per_sec = per_use / tau if tau > 0 else math.inf
    return RatePoint(params.L_total, raw, skf, per_use, per_sec, stats.acceptance_fraction)


def skr_per_second(
    params: ProtocolParams,
    clock_model: Union[str, float] = "communication_limited",
    **pipeline,
) -> RatePoint:
    """Rate per second, either limited by the round time or at a fixed clock (Hz)."""
    point = skr_per_channel_use(params, **pipeline)
    if clock_model == "communication_limited":
        return point
    clock = float(clock_model)
    if not clock > 0:
        raise ConfigurationError(f"clock rate must be positive, got {clock_model!r}")
    return RatePoint(
        point.L_km, point.raw_rate, point.skf, point.skr_per_use, point.skr_per_use * clock,
        point.acceptance_fraction, dict(point.benchmarks),
    )


def plob(eta_total):
    """-log2(1 - eta)."""
    eta = np.asarray(eta_total, dtype=float)
    out = -np.log1p(-eta) / math.log(2)
    return float(out) if out.ndim == 0 else out


def benchmarks(eta_total: float, n_list: Iterable[int] = (1, 2)) -> Dict[str, float]:
    """Repeaterless bound, root scalings and the ideal four-segment repeater capacity."""
    if not 0 < eta_total <= 1:
        raise ValueError(f"eta_total must lie in (0, 1], got {eta_total!r}")
    out = {"plob": plob(eta_total) if eta_total < 1 else math.inf}
    for n in n_list:
        out[f"root{2 * n}"] = eta_total ** (1.0 / (2 * n))
    quarter = eta_total**0.25
    out["ideal_repeater_4seg"] = plob(quarter) if quarter < 1 else math.inf
    return out


def ideal_repeater_per_second(L: float, L_att: float = 22.0, c_fiber: float = 2e5) -> float:
    """Four-segment repeater at capacity, clocked by the L/(2c) round trip of a segment pair."""
    eta = math.exp(-L / L_att)
    tau = L / (2 * c_fiber)
    return plob(eta**0.25) / tau


def twin_field_comparator(
    L: float,
    ideal: bool = True,
    p_det: float = 1.0,
    p_dark: float = TWIN_FIELD_DARK,
    L_att: float = 22.0,
    f_EC: float = 1.15,
    x: float = TWIN_FIELD_X,
) -> float:
    """Phase-matching QKD without memories, per channel use.

    Modelled as our single-segment scheme with twice its raw rate and the
    amplitude tuned for large loss. The non-ideal variant adds dark counts.
    """
    theta = 0.01
    params = ProtocolParams(
        n=1,
        alpha=math.sqrt(x) / math.sin(theta),
        theta=theta,
        L_total=L,
        L_att=L_att,
        p_det=p_det,
        dark_noclick_vacuum=1.0 if ideal else 1.0 - p_dark,
        p_depol=0.0,
        f_EC=f_EC,
    )
    point = skr_per_channel_use(params)
    return TWIN_FIELD_PREFACTOR * point.skr_per_use


def _station_count(n: int, scheme: str, mode: str) -> int:
    if mode == "stations":
        return n - 1 if scheme == "ours" else 2 * n - 1
    if mode == "memories":
        return n + 1 if scheme == "ours" else 2 * n + 1
    raise ConfigurationError(f"unknown memory-count mode {mode!r}")


def usd_comparator(
    params: ProtocolParams, count_mode: str = "stations", permutation_mode: str = "local"
) -> Tuple[RatePoint, RatePoint]:
    """(USD hybrid repeater, our scheme), each normalised per memory station.

    The USD repeater sees the full segment transmission, a dephasing factor
    exp(-2(1-eta)x) per segment and a doubled round time. Only loss,
    depolarisation and memory dephasing are modelled for both.
    """
    if params.n < 2 and count_mode == "stations":
        raise ConfigurationError("per-station normalisation needs n >= 2", "n")
    n = params.n
    eta_seg = params.p_det * math.exp(-params.L_total / (n * params.L_att))
    x = params.x
    p = -0.5 * math.expm1(-2 * eta_seg * x)
    tau = 2 * params.L_total / (n * params.c_fiber)
    coherence = math.exp(-2 * (1 - eta_seg) * x)
    mix = BellMix.from_weights([0.5 * (1 + coherence), 0.5 * (1 - coherence), 0, 0])
    scheme = params.effective_scheme
    usd_stations = _station_count(n, "usd", count_mode)
    ours_stations = _station_count(n, "ours", count_mode)
    if p > 0:
        stats = waiting.waiting_stats(n, p, tau, params.T_coherence, scheme, params.cutoff_rounds, params.store_ends)
        final = _end_to_end_mix(params, mix, None, stats, "teleport", permutation_mode)
        skf = secret_key_fraction(final, params.f_EC)
        raw = waiting.raw_rate(n, p, scheme, params.cutoff_rounds)
        per_use = raw * skf * stats.acceptance_fraction
        usd = RatePoint(params.L_total, raw, skf, per_use / usd_stations,
                        per_use / tau / usd_stations, stats.acceptance_fraction)
    else:
        usd = RatePoint(params.L_total, 0.0, 0.0, 0.0, 0.0)
    ours_full = skr_per_channel_use(params, permutation_mode=permutation_mode)
    ours = RatePoint(
        ours_full.L_km, ours_full.raw_rate, ours_full.skf, ours_full.skr_per_use / ours_stations,
        ours_full.skr_per_sec / ours_stations, ours_full.acceptance_fraction,
    )
    return usd, ours


def relay_comparator(
    params: ProtocolParams,
    clock: float = RELAY_CLOCK,
    two_detectors: bool = False,
    permutation_mode: str = "local",
) -> RatePoint:
    """Memoryless two-segment relay: both segments must herald in the same round.

    The middle spins are measured right away, so there is no memory
    dephasing; the imperfect Bell measurement still depolarises.
    """
    relay = params.replace(n=2, cutoff_rounds=None, T_coherence=math.inf, beta_asym=0.5)
    mix, p, _ = segment_bell_mix(relay)
    if two_detectors:
        p = min(1.0, 2 * p)
    raw = p * p
    pair = channels.compose_pauli([channels.bell_to_pauli(mix)] * 2 + [channels.depolarizing_channel(relay.p_depol, 1)])
    final = channels.bell_permutation_optimize(channels.pauli_to_bell(pair), permutation_mode, relay.f_EC)
    skf = secret_key_fraction(final, relay.f_EC)
    per_use = raw * skf
    return RatePoint(relay.L_total, raw, skf, per_use, per_use * clock)


def asymmetric_gain(params: ProtocolParams, betas: Iterable[float]) -> Tuple[float, float]:
    """(beta, gain) of the best rate per second over ``betas`` relative to beta = 1/2.

    Only the per-second rate changes with beta: the shorter memory round trip
    is traded against the extra loss on one arm.
    """
    if params.n != 2:
        raise ConfigurationError("the asymmetric layout is defined for n = 2 only", "n")
    reference = skr_per_channel_use(params.replace(beta_asym=0.5)).skr_per_sec
    if not reference > 0:
        raise ConfigurationError("symmetric reference rate is zero", "L_total")
    best_beta, best = 0.5, reference
    for beta in betas:
        value = skr_per_channel_use(params.replace(beta_asym=float(beta))).skr_per_sec
        if value > best:
            best_beta, best = float(beta), value
    return best_beta, best / reference - 1.0
