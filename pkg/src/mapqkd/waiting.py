"""Waiting-time statistics: raw rates, memory dephasing, cutoffs, Monte Carlo.

All times inside this module are counted in rounds of duration ``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ConfigurationError

EULER_GAMMA = 0.5772156649015329
MAX_SEGMENTS = 10_000
_ALTERNATING_MAX_N = 24


class UnsupportedConfiguration(ConfigurationError):
    """A parameter combination the model deliberately does not cover."""


@dataclass(frozen=True)
class WaitingStats:
    """Waiting-time summary for one configuration.

    ``dephasing_expectation`` already contains the deterministic
    communication-delay factor. The ``*_se`` fields are standard errors and
    are only filled by the Monte Carlo estimator.
    """

    p_round: float
    expected_rounds: float
    dephasing_expectation: float
    acceptance_fraction: float = 1.0
    expected_rounds_se: float = 0.0
    dephasing_expectation_se: float = 0.0
    acceptance_fraction_se: float = 0.0


def _check_p(p: float):
    if not 0 < p <= 1:
        raise ValueError(f"success probability must lie in (0, 1], got {p!r}")


def _one_minus_q_pow(p: float, j) -> np.ndarray:
    """1 - (1-p)**j without cancellation for small p."""
    if p == 1:
        return np.ones_like(np.asarray(j, dtype=float))
    return -np.expm1(np.asarray(j, dtype=float) * math.log1p(-p))


def _decay(tau: float, T: float) -> float:
    """Per-round coherence factor exp(-tau/T)."""
    return 1.0 if math.isinf(T) else math.exp(-tau / T)


def constant_offset_rounds(n: int, store_ends: bool) -> float:
    """Deterministic dephasing from the heralding delay, in rounds.

    Each memory dephases for one round before learning its outcome; with the
    end qubits measured immediately only the 2(n-1) inner memories count.
    """
    if n <= 1:
        return 0.0
    return 2.0 * n if store_ends else 2.0 * (n - 1)


def expected_max_geometric(n: int, p: float) -> float:
    """Exact E[max(X_1, ..., X_n)] for i.i.d. geometric variables on {1, 2, ...}.

    Parameters
    ----------
    n : int
        Number of segments, 1 <= n <= 10**4.
    p : float
        Per-round success probability.

    Returns
    -------
    float
        Expected number of rounds until every segment has succeeded.

    Notes
    -----
    Small ``n`` uses the alternating binomial sum. Larger ``n`` avoids its
    cancellation by summing the tail probabilities directly, or by the
    Euler-Maclaurin form when ``p`` is so small that the tail is too long.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_SEGMENTS:
        raise OverflowError(f"n = {n} exceeds the supported {MAX_SEGMENTS} segments")
    _check_p(p)
    if p == 1:
        return 1.0
    if n <= _ALTERNATING_MAX_N:
        j = np.arange(1, n + 1)
        binom = np.array([math.comb(n, int(k)) for k in j], dtype=float)
        signs = np.where(j % 2 == 1, 1.0, -1.0)
        return float(np.sum(binom * signs / _one_minus_q_pow(p, j)))
    lam = -math.log1p(-p)
    if lam >= 1e-3:
        kmax = int(math.ceil((math.log(n) + 40.0) / lam)) + 1
        k = np.arange(0, kmax)
        cdf = np.exp(n * np.log1p(-np.exp(-lam * k[1:])))
        return float(1.0 + np.sum(1.0 - cdf))
    harmonic = float(np.sum(1.0 / np.arange(1, n + 1)))
    return harmonic / lam + 0.5


def expected_max_approx(n: int, p: float) -> float:
    """(gamma + ln n + 1/(2n)) / p."""
    _check_p(p)
    return (EULER_GAMMA + math.log(n) + 1.0 / (2 * n)) / p


def _n2_difference_moments(p: float, s: float, m: Optional[int]):
    """Pieces of the |X1 - X2| law used by the n = 2 parallel scheme.

    Returns (P(D <= m), E[exp(-s D); D <= m], E[min(D, m)]).
    """
    q = 1.0 - p
    r = q * math.exp(-s)
    one_minus_r = p - q * math.expm1(-s)
    norm = p / (2 - p)
    if m is None:
        accept = 1.0
        weighted = norm * (2 / one_minus_r - 1) if r < 1 else math.inf
        mean_capped = 2 * q / (p * (2 - p))
        return accept, weighted, mean_capped
    qm = q**m
    accept = norm * (1 + 2 * q * (1 - qm) / p) if p > 0 else 0.0
    rm = r**m
    geo = r * (1 - rm) / one_minus_r if r < 1 else float(m)
    weighted = norm * (1 + 2 * geo)
    # sum_{j=1}^m j q^j = q (1 - (m+1) q^m + m q^{m+1}) / p^2
    partial = q * (1 - (m + 1) * qm + m * qm * q) / (p * p)
    mean_capped = 2 * norm * partial + m * 2 * q * qm / (2 - p)
    return accept, weighted, mean_capped


def dephasing_expectation_parallel_n2(
    p: float,
    tau: float,
    T: float,
    cutoff: Optional[int] = None,
    store_ends: bool = False,
) -> WaitingStats:
    """Dephasing and waiting statistics of the two-segment parallel scheme.

    The memory that finished first waits D = |X1 - X2| rounds; when the end
    qubits are stored as well two memories wait, doubling the count. With a
    cutoff ``m`` a round whose wait would exceed ``m`` is aborted after ``m``
    rounds and both segments restart.
    """
    _check_p(p)
    if cutoff is not None and cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    weight = 2.0 if store_ends else 1.0
    s = 0.0 if math.isinf(T) else weight * tau / T
    accept, weighted, mean_capped = _n2_difference_moments(p, s, cutoff)
    offset = _decay(tau, T) ** constant_offset_rounds(2, store_ends)
    q = 1 - p
    mean_min = 1.0 / (p * (2 - p))
    cycle = mean_min + mean_capped
    return WaitingStats(
        p_round=p,
        expected_rounds=cycle / accept,
        dephasing_expectation=min(1.0, weighted / accept) * offset,
        acceptance_fraction=accept,
    )


def n2_cycle_length(p: float, cutoff: Optional[int]) -> float:
    """Mean rounds per attempt cycle (accepted or aborted) for n = 2."""
    _, _, mean_capped = _n2_difference_moments(p, 0.0, cutoff)
    return 1.0 / (p * (2 - p)) + mean_capped


def dephasing_expectation_sequential(
    n: int, p: float, tau: float, T: float, store_ends: bool = False
) -> WaitingStats:
    """Segments generated one after another, swapping as soon as possible.

    Exactly one memory pair (or one memory when the end qubits are measured
    immediately) waits while each later segment is being generated.
    """
    if n < 2:
        raise ValueError("the sequential scheme needs n >= 2")
    _check_p(p)
    weight = 2.0 if store_ends else 1.0
    decay = _decay(weight * tau, T)
    lost = 0.0 if math.isinf(T) else -math.expm1(-weight * tau / T)
    # 1 - (1 - p) decay, written so that T = inf gives exactly 1
    core = (p * decay / (p * decay + lost)) ** (n - 1)
    offset = _decay(tau, T) ** constant_offset_rounds(n, store_ends)
    return WaitingStats(p_round=p, expected_rounds=n / p, dephasing_expectation=core * offset)


def expected_parallel_dephasing_rounds(n: int, p: float, store_ends: bool = False) -> float:
    """E[M] for the all-at-the-end parallel scheme."""
    excess = expected_max_geometric(n, p) - 1.0 / p
    return (2.0 * n if store_ends else 2.0 * (n - 1)) * excess


def jensen_bound_parallel(n: int, p: float, tau: float, T: float, store_ends: bool = False) -> float:
    """exp(-E[M] tau / T), a lower bound on E[exp(-M tau / T)] (no delay offset)."""
    if n < 2:
        raise ValueError("the parallel bound needs n >= 2")
    if math.isinf(T):
        return 1.0
    return math.exp(-expected_parallel_dephasing_rounds(n, p, store_ends) * tau / T)


def raw_rate(n: int, p: float, scheme: str = "parallel", cutoff: Optional[int] = None) -> float:
    """Attempt-cycle rate per channel use.

    Without cutoff every cycle delivers a pair, so this is the pair rate.
    With a cutoff it is the rate of cycles, and the pair rate is this value
    times the acceptance fraction.
    """
    _check_p(p)
    if cutoff is not None:
        if n != 2:
            raise UnsupportedConfiguration("cutoff policies are only modelled for n = 2", "cutoff_rounds")
        return 1.0 / n2_cycle_length(p, cutoff)
    if n == 1:
        return p
    if scheme == "parallel":
        return 1.0 / expected_max_geometric(n, p)
    if scheme == "sequential":
        return p / n
    raise ConfigurationError(f"unknown scheme {scheme!r}", "scheme")


def waiting_stats(
    n: int,
    p: float,
    tau: float,
    T: float,
    scheme: str = "parallel",
    cutoff: Optional[int] = None,
    store_ends: bool = False,
) -> WaitingStats:
    """Analytic statistics for any supported (n, scheme, cutoff)."""
    _check_p(p)
    if cutoff is not None and n != 2:
        raise UnsupportedConfiguration("cutoff policies are only modelled for n = 2", "cutoff_rounds")
    if n == 1:
        return WaitingStats(p_round=p, expected_rounds=1.0 / p, dephasing_expectation=1.0)
    if scheme == "parallel":
        if n == 2:
            return dephasing_expectation_parallel_n2(p, tau, T, cutoff, store_ends)
        offset = _decay(tau, T) ** constant_offset_rounds(n, store_ends)
        return WaitingStats(
            p_round=p,
            expected_rounds=expected_max_geometric(n, p),
            dephasing_expectation=jensen_bound_parallel(n, p, tau, T, store_ends) * offset,
        )
    if scheme == "sequential":
        return dephasing_expectation_sequential(n, p, tau, T, store_ends)
    raise ConfigurationError(f"unknown scheme {scheme!r}", "scheme")


def _mean_se(x: np.ndarray):
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def monte_carlo_waiting(
    n: int,
    p: float,
    tau: float,
    T: float,
    scheme: str = "parallel",
    cutoff: Optional[int] = None,
    trials: int = 100_000,
    seed: int = 0,
    store_ends: bool = False,
    chunks: int = 8,
) -> WaitingStats:
    """Sample the distribution protocol directly and return means with standard errors.

    For the parallel scheme with n > 2 this samples the true all-at-the-end
    dephasing, i.e. the quantity the Jensen bound bounds from below. Trials
    are split over independent PCG64 substreams spawned from ``seed``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    _check_p(p)
    if cutoff is not None and n != 2:
        raise UnsupportedConfiguration("cutoff policies are only modelled for n = 2", "cutoff_rounds")
    weight = 2.0 if store_ends else 1.0
    s = 0.0 if math.isinf(T) else tau / T
    offset = _decay(tau, T) ** constant_offset_rounds(n, store_ends)

    children = np.random.SeedSequence(seed).spawn(max(1, min(chunks, trials)))
    sizes = np.full(len(children), trials // len(children))
    sizes[: trials % len(children)] += 1

    rounds_all, deph_all, accept_all = [], [], []
    for child, size in zip(children, sizes):
        rng = np.random.Generator(np.random.PCG64(child))
        if n == 1:
            x = rng.geometric(p, size)
            rounds_all.append(x.astype(float))
            deph_all.append(np.ones(size))
            accept_all.append(np.ones(size))
            continue
        if scheme == "sequential":
            x = rng.geometric(p, (size, n))
            rounds = x.sum(axis=1).astype(float)
            waited = weight * x[:, 1:].sum(axis=1)
            rounds_all.append(rounds)
            deph_all.append(np.exp(-waited * s) * offset)
            accept_all.append(np.ones(size))
            continue
        if scheme != "parallel":
            raise ConfigurationError(f"unknown scheme {scheme!r}", "scheme")
        if cutoff is None:
            x = rng.geometric(p, (size, n))
            top = x.max(axis=1)
            lag = top[:, None] - x
            if store_ends:
                waited = 2 * lag.sum(axis=1)
            else:
                waited = 2 * lag[:, 1:-1].sum(axis=1) + lag[:, 0] + lag[:, -1]
            rounds_all.append(top.astype(float))
            deph_all.append(np.exp(-waited * s) * offset)
            accept_all.append(np.ones(size))
            continue
        # n = 2 with cutoff: draw attempt cycles until ``size`` successes
        per_success_rounds = np.zeros(size)
        success_deph = np.empty(size)
        cycles = 0
        accepted = 0
        pending = np.arange(size)
        while pending.size:
            x = rng.geometric(p, (pending.size, 2))
            gap = np.abs(x[:, 0] - x[:, 1])
            ok = gap <= cutoff
            cost = np.where(ok, x.max(axis=1), x.min(axis=1) + cutoff)
            per_success_rounds[pending] += cost
            success_deph[pending[ok]] = np.exp(-weight * gap[ok] * s) * offset
            cycles += pending.size
            accepted += int(ok.sum())
            pending = pending[~ok]
        rounds_all.append(per_success_rounds)
        deph_all.append(success_deph)
        acc = np.zeros(cycles)
        acc[:accepted] = 1.0
        accept_all.append(acc)

    rounds = np.concatenate(rounds_all)
    deph = np.concatenate(deph_all)
    acc = np.concatenate(accept_all)
    r_mean, r_se = _mean_se(rounds)
    d_mean, d_se = _mean_se(deph)
    a_mean, a_se = _mean_se(acc)
    return WaitingStats(
        p_round=p,
        expected_rounds=r_mean,
        dephasing_expectation=d_mean,
        acceptance_fraction=a_mean,
        expected_rounds_se=r_se,
        dephasing_expectation_se=d_se,
        acceptance_fraction_se=a_se,
    )
