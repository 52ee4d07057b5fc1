import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mapqkd import channels, optics
from mapqkd.core import ConfigurationError, ProtocolParams

alphas = st.floats(0.05, 3.0)
thetas = st.floats(0.01, math.pi / 2)
transmissions = st.floats(0.01, 1.0)
dark = st.floats(0.5, 1.0)


def _params(alpha=1.0, theta=0.7, d0=1.0, **kw):
    return ProtocolParams(n=1, alpha=alpha, theta=theta, dark_noclick_vacuum=d0, **kw)


# Frozen from oracles.fock_segment_matrix (truncation 40):
# alpha=1, theta=0.7, sqrt_eta=0.6, D(0)=0.9.
FOCK_ONOFF = {
    (0, 0): 0.09999999999999999,
    (2, 2): 0.45304034159888423,
    (0, 1): -0.007405680097498793 - 0.01751104531055396j,
    (2, 3): -0.0914344138044225,
    (0, 2): 0.024090421821358135 - 0.036344414058846065j,
}


def test_onoff_closed_form_matches_frozen_fock_values():
    m = optics.conditional_state_onoff(_params(1.0, 0.7, 0.9), 0.6).matrix()
    for idx, ref in FOCK_ONOFF.items():
        assert abs(m[idx] - ref) < 1e-12, idx


@given(alphas, thetas, transmissions, dark)
def test_closed_form_equals_overlap_machinery(alpha, theta, sqrt_eta, d0):
    closed = optics.conditional_state_onoff(_params(alpha, theta, d0), sqrt_eta).matrix()
    general = optics.segment_state_matrix(alpha, alpha, theta, sqrt_eta, sqrt_eta, d0)
    assert np.max(np.abs(closed - general)) < 1e-12


@given(alphas, thetas, transmissions, dark)
def test_conditional_state_is_hermitian_and_psd(alpha, theta, sqrt_eta, d0):
    m = optics.conditional_state_onoff(_params(alpha, theta, d0), sqrt_eta).matrix()
    assert np.allclose(m, m.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(m).min() >= -1e-9


@given(alphas, thetas, transmissions, dark)
def test_click_and_no_click_probabilities_sum_to_one(alpha, theta, sqrt_eta, d0):
    params = _params(alpha, theta, d0)
    click = optics.click_probability(params, "onoff", sqrt_eta)
    no_click = d0 * 0.5 * (1 + math.exp(-2 * sqrt_eta * params.x))
    assert click + no_click == pytest.approx(1.0, abs=1e-15)
    assert click == pytest.approx(optics.conditional_state_onoff(params, sqrt_eta).trace / 4, rel=1e-12)


@given(alphas, thetas, transmissions)
def test_loss_only_state_is_a_two_bell_mixture(alpha, theta, sqrt_eta):
    params = _params(alpha, theta)
    mix = channels.erase_offdiagonals(optics.conditional_state_onoff(params, sqrt_eta))
    coherence = math.exp(-2 * (2 - sqrt_eta) * params.x)
    assert mix.pPhiPlus == 0 and mix.pPhiMinus == 0
    assert mix.pPsiMinus == pytest.approx(0.5 * (1 + coherence), abs=1e-12)


def test_long_link_click_probability_keeps_relative_precision():
    params = _params(1.0, 0.5)
    tiny = 1e-12
    exact = -0.5 * math.expm1(-2 * tiny * params.x)
    assert optics.click_probability(params, "onoff", tiny) == pytest.approx(exact, rel=1e-12)


# --- photon-number-resolving detectors ------------------------------------

def test_pnrd_nominal_model_zero_transmission_example():
    params = _params(alpha=math.sqrt(0.229) / math.sin(0.3), theta=0.3)
    mix = optics.conditional_state_pnrd(params, "even", 0.0, "nominal")
    assert mix.pPsiPlus == pytest.approx(0.5 * (1 + math.exp(-0.458)), abs=1e-12)
    assert mix.pPsiPlus == pytest.approx(0.8163, abs=5e-5)


def test_pnrd_exact_model_matches_frozen_fock_weights():
    # Frozen from oracles.fock_segment_matrix(kind="even"/"odd"), alpha=1.2, theta=0.4, sqrt_eta=0.6.
    params = _params(1.2, 0.4)
    even = optics.conditional_state_pnrd(params, "even", 0.6, "exact")
    odd = optics.conditional_state_pnrd(params, "odd", 0.6, "exact")
    assert even.as_array() == pytest.approx([0, 0, 0.8525576755994644, 0.14744232440053517], abs=1e-12)
    assert odd.as_array() == pytest.approx([0, 0, 0.1474423244005352, 0.8525576755994648], abs=1e-12)


def test_pnrd_parity_probabilities_match_frozen_fock_traces():
    probs = optics.pnrd_parity_probabilities(_params(1.2, 0.4), 0.6)
    assert probs["even"] == pytest.approx(0.013285318697323611, rel=1e-10)
    assert probs["odd"] == pytest.approx(0.10197663815455195, rel=1e-10)


@given(alphas, thetas, transmissions)
def test_pnrd_parities_add_up_to_the_click_probability(alpha, theta, sqrt_eta):
    params = _params(alpha, theta)
    probs = optics.pnrd_parity_probabilities(params, sqrt_eta)
    total = 0.5 * -math.expm1(-2 * sqrt_eta * params.x)
    assert probs["even"] + probs["odd"] == pytest.approx(total, rel=1e-9, abs=1e-15)


def test_pnrd_lossless_state_is_pure():
    mix = optics.conditional_state_pnrd(_params(1.0, 0.5), "even", 1.0, "nominal")
    assert mix.pPsiPlus == pytest.approx(1.0)


def test_pnrd_rejects_unknown_parity_and_model():
    with pytest.raises(ConfigurationError):
        optics.conditional_state_pnrd(_params(), "none", 0.5)
    with pytest.raises(ConfigurationError):
        optics.conditional_state_pnrd(_params(), "even", 0.5, model="guess")


# --- homodyne --------------------------------------------------------------

def _homodyne(alpha=1.0, theta=0.5, dp=0.1, dx=0.5):
    return ProtocolParams(n=1, alpha=alpha, theta=theta, detector="homodyne", homodyne_windows=(dp, dx))


def test_homodyne_ratios_match_frozen_window_integration():
    # Frozen from oracles.homodyne_window_matrix(1.0, 0.5, 0.1, 0.5), lossless.
    a_ref, b_ref, f_ref = 0.043681752652807396, 0.10821954156782844, 0.08165802003534511
    c_ref = -0.004829353997242875 - 0.04288255156834149j
    state = optics.conditional_state_homodyne(_homodyne(), 1.0)
    assert state.a / state.b == pytest.approx(a_ref / b_ref, rel=1e-9)
    assert state.f.real / state.b == pytest.approx(f_ref / b_ref, rel=1e-9)
    assert abs(np.conj(state.c) / state.a - c_ref / a_ref) < 1e-9
    # the window on the dark port only rescales the state
    assert b_ref / state.b == pytest.approx(math.erf(math.sqrt(2) * 0.5), rel=1e-9)


def test_homodyne_wide_windows_lossless_limit():
    state = optics.conditional_state_homodyne(_homodyne(1.0, 0.5, 50.0, 50.0), 1.0)
    assert state.b == pytest.approx(1.0)
    assert state.f.real == pytest.approx(math.exp(-4 * math.sin(0.5) ** 2), rel=1e-9)


def test_homodyne_leaves_outer_coherences_unset():
    state = optics.conditional_state_homodyne(_homodyne(), 0.8)
    assert not state.has_coherences
    assert state.d1 == 0 and state.d2 == 0


def test_homodyne_success_probability_counts_both_windows():
    params = _homodyne()
    state = optics.conditional_state_homodyne(params, 1.0)
    expected = 0.5 * (state.a + state.b) * math.erf(math.sqrt(2) * 0.5)
    assert optics.homodyne_success_probability(params, 1.0) == pytest.approx(expected)


def test_complex_erf_guard():
    from scipy.special import erf

    assert optics.complex_erf(0.3 + 0.2j) == pytest.approx(complex(erf(0.3 + 0.2j)), abs=1e-12)
    with pytest.raises(ConfigurationError):
        optics.complex_erf(1 + 20j)


# --- asymmetric layout -------------------------------------------------------

def _asym(beta, L=300.0):
    return ProtocolParams(n=2, L_total=L, p_det=1.0, dark_noclick_vacuum=1.0, beta_asym=beta)


def test_asymmetric_state_reduces_to_symmetric_one():
    a = optics.conditional_state_asymmetric(_asym(0.5)).matrix()
    b = optics.conditional_state_onoff(_asym(0.5)).matrix()
    assert np.max(np.abs(a - b)) < 1e-12


@pytest.mark.parametrize("beta", [0.55, 0.7, 0.9])
def test_asymmetric_closed_form_matches_overlaps(beta):
    closed = optics.conditional_state_asymmetric(_asym(beta)).matrix()
    general = optics.conditional_state_asymmetric_overlaps(_asym(beta)).matrix()
    assert np.max(np.abs(closed - general)) < 1e-12


def test_asymmetric_state_develops_imaginary_coherence():
    state = optics.conditional_state_asymmetric(_asym(0.7))
    assert abs(state.f.imag) > 1e-3 * abs(state.f)


def test_asymmetric_round_time_shrinks_with_beta_and_floors_at_source_limit():
    assert optics.asymmetric_round_time(_asym(0.75)) == pytest.approx(0.5 * optics.asymmetric_round_time(_asym(0.5)))
    assert optics.asymmetric_round_time(_asym(0.9999999)) == pytest.approx(1e-7)


def test_asymmetric_layout_needs_dark_count_free_detectors():
    with pytest.raises(ConfigurationError):
        optics.conditional_state_asymmetric(_asym(0.6).replace(dark_noclick_vacuum=0.99))


# --- phase mismatch ---------------------------------------------------------

def _mismatch(delta, L=200.0):
    return ProtocolParams(n=2, L_total=L, delta_phase=delta)


def test_zero_mismatch_is_the_plain_state():
    avg = optics.phase_mismatch_average(_mismatch(0.0), "state")
    plain = optics.conditional_state_onoff(_mismatch(0.0))
    assert avg == plain


def test_mismatch_average_keeps_psi_coherence_real():
    state = optics.phase_mismatch_average(_mismatch(5e-3), "state")
    assert abs(state.f.imag) < 1e-9 * abs(state.f)


def test_tiny_mismatch_barely_changes_the_state():
    avg = optics.phase_mismatch_average(_mismatch(1e-6), "bell_mix")
    plain = channels.erase_offdiagonals(optics.conditional_state_onoff(_mismatch(0.0)))
    assert avg.as_array() == pytest.approx(plain.as_array(), abs=1e-8)


def test_mismatch_lowers_the_psi_coherence():
    params = _mismatch(5e-3)
    avg = optics.phase_mismatch_average(params, "state")
    plain = optics.conditional_state_onoff(params)
    assert abs(avg.f) / avg.b < abs(plain.f) / plain.b


def test_conditioned_and_plain_averages_nearly_agree_for_small_mismatch():
    cond = optics.phase_mismatch_average(_mismatch(1e-3), "bell_mix", conditioned=True)
    plain = optics.phase_mismatch_average(_mismatch(1e-3), "bell_mix", conditioned=False)
    assert cond.as_array() == pytest.approx(plain.as_array(), abs=1e-6)


def test_mismatch_rejects_unknown_quantity():
    with pytest.raises(ConfigurationError):
        optics.phase_mismatch_average(_mismatch(1e-3), "entropy")
