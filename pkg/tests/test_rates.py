import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mapqkd import rates, waiting
from mapqkd.core import ConfigurationError, ProtocolParams, binary_entropy

LOSS_ONLY = dict(p_det=1.0, dark_noclick_vacuum=1.0, p_depol=0.0)


def _loss_only(**kw):
    return ProtocolParams(**{**LOSS_ONLY, **kw})


def test_loss_only_key_function_optimum():
    x, f = rates.optimize_loss_only_x()
    assert x == pytest.approx(0.229154, abs=1e-5)
    assert f == pytest.approx(0.0714111, abs=1e-6)
    grid = np.linspace(0.01, 2, 2001)
    assert rates.loss_only_key_function(grid).max() <= f + 1e-12


@given(st.sampled_from([1, 2, 4]), st.floats(1.0, 600.0), st.floats(0.5, 40.0))
def test_pipeline_equals_loss_only_closed_form(n, L, alpha):
    params = _loss_only(n=n, L_total=L, alpha=alpha)
    full = rates.skr_per_channel_use(params).skr_per_use
    closed = rates.loss_only_rate(params)
    assert full == pytest.approx(closed, rel=1e-10, abs=1e-300)


def test_loss_only_rate_by_hand_for_one_segment():
    params = _loss_only(n=1, L_total=100.0)
    se = math.exp(-100.0 / 44.0)
    x = params.x
    p = 0.5 * (1 - math.exp(-2 * se * x))
    skf = 1 - binary_entropy(0.5 * (1 + math.exp(-2 * (2 - se) * x)))
    assert rates.loss_only_rate(params) == pytest.approx(p * skf, rel=1e-12)


def test_loss_only_closed_form_refuses_noisy_parameters():
    with pytest.raises(ConfigurationError):
        rates.loss_only_rate(ProtocolParams())


@given(st.sampled_from([1, 2, 3, 4]), st.floats(1.0, 1000.0))
def test_rate_never_beats_the_root_scaling(n, L):
    params = _loss_only(n=n, L_total=L)
    eta = math.exp(-L / 22.0)
    assert rates.skr_per_channel_use(params).skr_per_use <= eta ** (1 / (2 * n))


@pytest.mark.parametrize("n", [1, 2, 4])
def test_rate_falls_with_distance(n):
    Ls = np.linspace(10, 500, 25)
    vals = [rates.skr_per_channel_use(ProtocolParams(n=n, L_total=L)).skr_per_use for L in Ls]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))


def test_finite_memory_and_depolarisation_only_cost_key():
    base = rates.skr_per_channel_use(_loss_only(n=2, L_total=200.0)).skr_per_use
    assert rates.skr_per_channel_use(_loss_only(n=2, L_total=200.0, T_coherence=1.0)).skr_per_use < base
    assert rates.skr_per_channel_use(_loss_only(n=2, L_total=200.0, p_depol=0.01)).skr_per_use < base


def test_per_second_divides_by_the_round_time():
    params = ProtocolParams(n=2, L_total=200.0)
    point = rates.skr_per_channel_use(params)
    tau = 200.0 / 2 / 2e5
    assert point.skr_per_sec == pytest.approx(point.skr_per_use / tau)
    fixed = rates.skr_per_second(params, 1e6)
    assert fixed.skr_per_sec == pytest.approx(point.skr_per_use * 1e6)
    with pytest.raises(ConfigurationError):
        rates.skr_per_second(params, -1.0)


def test_cutoff_rate_includes_the_acceptance_fraction():
    params = ProtocolParams(n=2, L_total=300.0, T_coherence=0.1, cutoff_rounds=10)
    point = rates.skr_per_channel_use(params)
    assert 0 < point.acceptance_fraction < 1
    assert point.skr_per_use == pytest.approx(point.raw_rate * point.skf * point.acceptance_fraction)


def test_cutoff_with_more_than_two_segments_is_rejected():
    with pytest.raises(waiting.UnsupportedConfiguration):
        rates.skr_per_channel_use(ProtocolParams(n=3, cutoff_rounds=10))


# --- PNRD ----------------------------------------------------------------------

def test_optimised_pnrd_over_onoff_approaches_two():
    ratios = []
    for L in (200.0, 400.0, 600.0):
        _, pnrd = rates.optimize_loss_only_alpha(_loss_only(n=1, L_total=L, detector="pnrd"))
        _, onoff = rates.optimize_loss_only_alpha(_loss_only(n=1, L_total=L))
        ratios.append(pnrd / onoff)
    assert all(1.5 < r < 2.01 for r in ratios)
    assert abs(ratios[-1] - 2) < abs(ratios[0] - 2) + 1e-12


def test_pnrd_pipeline_matches_closed_form():
    params = _loss_only(n=2, L_total=300.0, detector="pnrd")
    assert rates.skr_per_channel_use(params).skr_per_use == pytest.approx(rates.loss_only_rate(params), rel=1e-10)


def test_optimised_alpha_beats_the_default():
    params = _loss_only(n=1, L_total=300.0)
    alpha, rate = rates.optimize_loss_only_alpha(params)
    assert rate >= rates.loss_only_rate(params) * (1 - 1e-12)
    assert rate == pytest.approx(rates.loss_only_rate(params.replace(alpha=alpha)), rel=1e-12)


# --- comparators ---------------------------------------------------------------

def test_benchmarks_values():
    eta = 1e-4
    b = rates.benchmarks(eta, (1, 2))
    assert b["plob"] == pytest.approx(-math.log2(1 - eta))
    assert b["root2"] == pytest.approx(1e-2)
    assert b["root4"] == pytest.approx(1e-1)
    assert b["ideal_repeater_4seg"] == pytest.approx(-math.log2(0.9))
    assert rates.plob(0.5) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        rates.benchmarks(0.0)


def test_ideal_repeater_per_second():
    L = 400.0
    expected = rates.plob(math.exp(-L / 88.0)) / (L / 4e5)
    assert rates.ideal_repeater_per_second(L) == pytest.approx(expected)


def test_twin_field_is_twice_the_single_segment_rate():
    L = 300.0
    x = rates.TWIN_FIELD_X
    params = _loss_only(n=1, L_total=L, alpha=math.sqrt(x) / math.sin(0.01), theta=0.01)
    assert rates.twin_field_comparator(L) == pytest.approx(2 * rates.loss_only_rate(params), rel=1e-10)
    assert rates.twin_field_comparator(L, ideal=False) < rates.twin_field_comparator(L)


def test_twin_field_with_dark_counts_dies_at_long_range():
    assert rates.twin_field_comparator(1500.0, ideal=False) == 0.0


def test_relay_needs_both_segments_in_one_round():
    params = ProtocolParams(n=2, L_total=200.0)
    point = rates.relay_comparator(params)
    _, p, _ = rates.segment_bell_mix(params)
    assert point.raw_rate == pytest.approx(p * p)
    assert point.skr_per_sec == pytest.approx(point.skr_per_use * rates.RELAY_CLOCK)
    doubled = rates.relay_comparator(params, two_detectors=True)
    assert doubled.raw_rate == pytest.approx(4 * p * p)


def test_usd_comparator_normalises_per_station():
    params = ProtocolParams(n=3, L_total=300.0, T_coherence=10.0, p_depol=1e-3)
    usd, ours = rates.usd_comparator(params)
    full = rates.skr_per_channel_use(params)
    assert ours.skr_per_use == pytest.approx(full.skr_per_use / 2)
    assert usd.skr_per_sec >= 0
    usd_mem, ours_mem = rates.usd_comparator(params, count_mode="memories")
    assert ours_mem.skr_per_use == pytest.approx(full.skr_per_use / 4)
    assert usd_mem.skr_per_use == pytest.approx(usd.skr_per_use * 5 / 7)
    with pytest.raises(ConfigurationError):
        rates.usd_comparator(params, count_mode="rooms")


# --- asymmetric layout --------------------------------------------------------------

def test_asymmetric_gain_is_non_negative_and_symmetric_point_is_neutral():
    params = _loss_only(n=2, L_total=200.0, T_coherence=math.inf)
    beta, gain = rates.asymmetric_gain(params, [0.5])
    assert (beta, gain) == (0.5, 0.0)
    beta, gain = rates.asymmetric_gain(params, np.linspace(0.5, 0.9, 9))
    assert gain >= 0 and 0.5 <= beta <= 0.9


def test_asymmetric_gain_needs_two_segments():
    with pytest.raises(ConfigurationError):
        rates.asymmetric_gain(_loss_only(n=3), [0.6])


def test_doubling_route_matches_teleport_route_for_bell_diagonal_limit():
    params = _loss_only(n=2, L_total=200.0)
    tele = rates.skr_per_channel_use(params, swap_route="teleport").skf
    doub = rates.skr_per_channel_use(params, swap_route="doubling").skf
    assert doub == pytest.approx(tele, rel=1e-9)
    with pytest.raises(ConfigurationError):
        rates.skr_per_channel_use(params.replace(n=3), swap_route="doubling")
