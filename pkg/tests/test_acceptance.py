"""The twelve acceptance criteria, each with its tolerance and runtime budget.

Every test prints one ``criterion N: PASS/FAIL ...`` line (visible with or
without ``-s``) before asserting. Criteria 6 and 9 are expected to be red;
the README explains why.
"""

import math
import time

import numpy as np
import pytest

from mapqkd import channels, harness, optics, rates, waiting
from mapqkd.core import ProtocolParams, secret_key_fraction

LOSS_ONLY = dict(p_det=1.0, dark_noclick_vacuum=1.0, p_depol=0.0)


@pytest.fixture
def report(capsys):
    def emit(number, passed, detail, elapsed, budget):
        within = elapsed < budget
        status = "PASS" if passed and within else "FAIL"
        with capsys.disabled():
            print(f"\ncriterion {number}: {status} {detail} [{elapsed:.2f} s / {budget:g} s]")
        return passed and within

    return emit


def test_criterion_01_key_function_optimum(report):
    start = time.perf_counter()
    x, f = rates.optimize_loss_only_x()
    elapsed = time.perf_counter() - start
    ok = abs(f - 7.141e-2) <= 2e-4 and abs(x - 0.229) <= 2e-3
    assert report(1, ok, f"x*={x:.6f} f*={f:.7f}", elapsed, 1.0)


def test_criterion_02_loss_only_square_root_scaling(report):
    start = time.perf_counter()
    target = 0.5 * 7.141e-2
    worst = 0.0
    for L in np.linspace(200.0, 600.0, 9):
        params = ProtocolParams(n=1, L_total=float(L), **LOSS_ONLY)
        _, rate = rates.optimize_loss_only_alpha(params)
        ratio = rate / math.sqrt(math.exp(-L / params.L_att)) / target
        worst = max(worst, abs(ratio - 1))
    elapsed = time.perf_counter() - start
    assert report(2, worst <= 0.01, f"max |rate/(sqrt(eta) f*/2) - 1| = {worst:.4%}", elapsed, 1.0)


def test_criterion_03_fock_oracle(report):
    start = time.perf_counter()
    checks = harness.validate_oracle_fock(1e-8)
    elapsed = time.perf_counter() - start
    worst = max(c.observed for c in checks)
    ok = len(checks) == 54 and all(c.passed for c in checks)
    assert report(3, ok, f"{len(checks)} grid points, max entry deviation {worst:.2e}", elapsed, 120.0)


def test_criterion_04_waiting_time_monte_carlo(report):
    start = time.perf_counter()
    checks = harness.validate_oracle_mc(seed=12345, trials=1_000_000)
    elapsed = time.perf_counter() - start
    worst = max(c.observed for c in checks)
    ok = all(c.passed for c in checks)
    assert report(4, ok, f"{len(checks)} checks at 1e6 trials, max |z| = {worst:.2f}", elapsed, 300.0)


def test_criterion_05_harmonic_identity(report):
    start = time.perf_counter()
    bad = [n for n in range(1, 65) if not harness.harmonic_identity_holds(n)]
    elapsed = time.perf_counter() - start
    assert report(5, not bad, f"exact for n = 1..64, failures {bad}", elapsed, 1.0)


def test_criterion_06_crossings(report):
    start = time.perf_counter()
    grid = np.arange(50.0, 800.0 + 1.0, 1.0)
    base = ProtocolParams(alpha=23.9, T_coherence=10.0, **LOSS_ONLY)
    eta = np.exp(-grid / base.L_att)
    plob_x, root_x = {}, {}
    for n in (2, 3, 4):
        skr = [rates.skr_per_channel_use(base.replace(n=n, L_total=float(L))).skr_per_use for L in grid]
        plob_x[n] = harness.first_crossing(grid, skr, rates.plob(eta))
        root_x[n] = harness.first_crossing(grid, skr, np.sqrt(eta))
    elapsed = time.perf_counter() - start
    plob_ok = all(v is not None and abs(v - 140) <= 15 for v in plob_x.values())
    earliest_root = min(v for v in root_x.values() if v is not None)
    root_ok = abs(earliest_root - 350) <= 30
    detail = ("PLOB crossings " + ", ".join(f"n={n}: {v:.1f} km" for n, v in plob_x.items())
              + "; sqrt(eta) crossings " + ", ".join(f"n={n}: {v:.1f} km" for n, v in root_x.items())
              + f"; earliest sqrt(eta) {earliest_root:.1f} km")
    assert report(6, plob_ok and root_ok, detail, elapsed, 30.0)


def test_criterion_07_cutoff_extends_reach(report):
    start = time.perf_counter()
    curves = {c.name: harness.run_sweep(c.spec) for c in harness.figure_recipes("fig2")}
    elapsed = time.perf_counter() - start
    reach = {}
    for name, rows in curves.items():
        positive = [r["L_km"] for r in rows if r["skr_per_use"] > 0]
        reach[name] = max(positive) if positive else 0.0
    beyond = any(v > 700 for k, v in reach.items() if k.startswith("cutoff"))
    below_plob = all(r["skr_per_use"] <= r["plob"] for r in curves["no_cutoff"])
    detail = "last positive grid point " + ", ".join(f"{k}: {v:.0f} km" for k, v in reach.items()) \
        + f"; no-cutoff curve below PLOB everywhere: {below_plob}"
    assert report(7, beyond and below_plob, detail, elapsed, 60.0)


def _jensen_gap(multiple):
    p = 1e-4
    expected_m = waiting.expected_parallel_dephasing_rounds(2, p)
    T = multiple * expected_m
    exact = waiting.dephasing_expectation_parallel_n2(p, 1.0, T).dephasing_expectation
    exact /= math.exp(-waiting.constant_offset_rounds(2, False) / T)
    bound = waiting.jensen_bound_parallel(2, p, 1.0, T)
    params = ProtocolParams(n=1, alpha=23.9, **LOSS_ONLY)
    segment = channels.bell_to_pauli(channels.erase_offdiagonals(optics.conditional_state_onoff(params, 1e-6)))
    pair = channels.compose_pauli_power(segment, 2)

    def skf(factor):
        mix = channels.pauli_to_bell(channels.compose_pauli([pair, channels.dephasing_from_factor(factor)]))
        return secret_key_fraction(channels.bell_permutation_optimize(mix, "local"))

    return skf(exact) / skf(bound) - 1


def test_criterion_08_jensen_gap(report):
    start = time.perf_counter()
    gap10, gap1 = _jensen_gap(10.0), _jensen_gap(1.0)
    elapsed = time.perf_counter() - start
    ok = abs(gap10 - 0.01) <= 0.005 and abs(gap1 - 0.86) <= 0.05
    assert report(8, ok, f"gap {gap10:.3%} at T=10E(M)tau, {gap1:.2%} at T=E(M)tau", elapsed, 10.0)


def test_criterion_09_asymmetric_gains(report):
    start = time.perf_counter()
    betas = np.linspace(0.5, 0.9, 801)
    gains = {}
    for L in (200.0, 400.0):
        params = ProtocolParams(n=2, L_total=L, alpha=23.9, T_coherence=math.inf, **LOSS_ONLY)
        gains[L] = rates.asymmetric_gain(params, betas)
    elapsed = time.perf_counter() - start
    ok = abs(gains[200.0][1] - 0.046) <= 0.005 and abs(gains[400.0][1] - 0.011) <= 0.003
    detail = ", ".join(f"L={L:.0f} km: gain {g:.2%} at beta={b:.4f}" for L, (b, g) in gains.items()) \
        + " (targets 4.6% +- 0.5 pp, 1.1% +- 0.3 pp)"
    assert report(9, ok, detail, elapsed, 60.0)


def test_criterion_10_homodyne_negative_result(report):
    start = time.perf_counter()
    windows = np.geomspace(1e-3, 10.0, 20)
    best = 0.0
    for dp in windows:
        for dx in windows:
            params = ProtocolParams(n=1, alpha=23.9, theta=0.01, detector="homodyne",
                                    homodyne_windows=(float(dp), float(dx)), **LOSS_ONLY)
            mix = channels.erase_offdiagonals(optics.conditional_state_homodyne(params, 0.7))
            best = max(best, secret_key_fraction(channels.bell_permutation_optimize(mix, "all")))
    elapsed = time.perf_counter() - start
    assert report(10, best == 0.0, f"largest skf over 400 windows at sqrt(eta)=0.7: {best:g}", elapsed, 30.0)


def test_criterion_11_phase_mismatch(report):
    start = time.perf_counter()
    grid = harness.make_grid(1.0, 600.0, harness.DEFAULT_POINTS)
    base = ProtocolParams(n=2, theta=0.01)
    worst_small, largest_big = 0.0, 0.0
    for L in grid:
        ref = rates.skr_per_channel_use(base.replace(L_total=L)).skf
        small = rates.skr_per_channel_use(base.replace(L_total=L, delta_phase=1e-4)).skf
        big = rates.skr_per_channel_use(base.replace(L_total=L, delta_phase=1e-2)).skf
        if ref > 0:
            worst_small = max(worst_small, abs(small / ref - 1))
        largest_big = max(largest_big, big)
    elapsed = time.perf_counter() - start
    ok = worst_small <= 0.01 and largest_big == 0.0
    detail = f"delta=1e-4: max relative skf change {worst_small:.3%}; delta=theta: largest skf {largest_big:g}"
    assert report(11, ok, detail, elapsed, 120.0)


def test_criterion_12_pnrd_factor(report):
    start = time.perf_counter()
    worst = 0.0
    for eta in (1e-6, 1e-8, 1e-10, 1e-12):
        params = ProtocolParams(n=1, L_total=-22.0 * math.log(eta), **LOSS_ONLY)
        _, pnrd = rates.optimize_loss_only_alpha(params.replace(detector="pnrd"))
        _, onoff = rates.optimize_loss_only_alpha(params)
        worst = max(worst, abs(pnrd / onoff / 2 - 1))
    elapsed = time.perf_counter() - start
    assert report(12, worst <= 0.01, f"max |ratio/2 - 1| for eta_total in [1e-12, 1e-6]: {worst:.2e}", elapsed, 1.0)
