import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionwalk import lattice


def three_step_state(step_size=1.0):
    return lattice.run_walk(lattice.WalkSpec(3, step_size))


def test_coin_identity_at_zero_angle():
    state = lattice.initial_state(1.0)
    rotated = lattice.apply_coin(state, 0.0, 0.4)
    assert np.allclose(rotated.c_t, state.c_t)
    assert np.allclose(rotated.c_h, state.c_h)


def test_coin_half_angle_from_tails():
    state = lattice.initial_state(1.0, "T")
    rotated = lattice.apply_coin(state, math.pi / 2.0, 0.0)
    c_t, c_h = rotated.coeff(0)
    assert c_h == pytest.approx(1.0 / math.sqrt(2.0))
    assert c_t == pytest.approx(1.0 / math.sqrt(2.0))


def test_double_pi_coin_is_minus_identity():
    state = lattice.apply_coin(lattice.initial_state(1.0), math.pi / 2, 0.3)
    twice = lattice.apply_coin(lattice.apply_coin(state, math.pi, 0.0), math.pi, 0.0)
    assert np.allclose(twice.c_t, -state.c_t)
    assert np.allclose(twice.c_h, -state.c_h)


def test_shift_moves_tails_up():
    state = lattice.apply_shift(lattice.initial_state(1.0, "T"))
    c_t, _ = state.coeff(1)
    assert c_t == pytest.approx(1.0)


def test_three_step_amplitudes():
    state = three_step_state()
    inv8 = 1.0 / math.sqrt(8.0)
    expected = {
        1: (-2 * inv8, inv8),
        3: (inv8, 0.0),
        -1: (-inv8, 0.0),
        -3: (0.0, inv8),
    }
    for k, (e_t, e_h) in expected.items():
        c_t, c_h = state.coeff(k)
        assert c_t == pytest.approx(e_t, abs=1e-12)
        assert c_h == pytest.approx(e_h, abs=1e-12)


def test_norm_preserved_over_hundred_steps():
    state = lattice.run_walk(lattice.WalkSpec(100, 2.0))
    assert state.lattice_norm() == pytest.approx(1.0, abs=1e-12)


def test_shift_inverse_is_identity():
    state = three_step_state(1.5)
    back = lattice.apply_shift(lattice.apply_shift(state), -1)
    for k in range(-3, 4):
        orig_t, orig_h = state.coeff(k)
        new_t, new_h = back.coeff(k)
        assert new_t == pytest.approx(orig_t, abs=1e-15)
        assert new_h == pytest.approx(orig_h, abs=1e-15)


def test_coin_state_ratio_matches_closed_form():
    state = three_step_state(1.0)
    p_t, p_h = lattice.coin_probabilities(state)
    expected = (1.0 + math.exp(-8.0)) / (3.0 - math.exp(-8.0))
    assert p_h / p_t == pytest.approx(expected, abs=1e-10)


def test_coin_state_ratio_orthogonal_limit():
    state = three_step_state(4.0)
    p_t, p_h = lattice.coin_probabilities(state)
    assert p_h / p_t == pytest.approx(1.0 / 3.0, abs=1e-6)


def test_orthogonal_limit_probabilities_match_coefficients():
    state = three_step_state(4.5)
    ks, probs = lattice.position_probabilities(state, normalize=False)
    for k, p in zip(ks, probs):
        c_t, c_h = state.coeff(int(k))
        assert p == pytest.approx(abs(c_t) ** 2 + abs(c_h) ** 2, abs=1e-6)


def test_odd_positions_suppressed_at_wide_spacing():
    # residual odd-site weight comes from neighboring-state overlap and
    # shrinks with the spacing; at |step| = 4 it is numerically gone
    state = lattice.run_walk(lattice.WalkSpec(100, 2.0))
    ks, probs = lattice.position_probabilities(state)
    odd = probs[ks % 2 != 0]
    even_peak = probs[ks % 2 == 0].max()
    assert odd.max() < 2e-3
    assert odd.max() < 0.05 * even_peak

    state4 = lattice.run_walk(lattice.WalkSpec(100, 4.0))
    ks4, probs4 = lattice.position_probabilities(state4)
    assert probs4[ks4 % 2 != 0].max() < 1e-6


def test_std_dev_trivial_cases():
    # at spacing 2 the neighbor overlap e^{-4} still contributes ~0.19 of
    # index spread; it is numerically gone by spacing 4
    assert lattice.std_dev(lattice.initial_state(2.0)) < 0.2
    assert lattice.std_dev(lattice.initial_state(4.0)) < 0.05
    one = lattice.run_walk(lattice.WalkSpec(1, 4.0))
    assert lattice.std_dev(one) == pytest.approx(1.0, abs=1e-3)


def test_small_spacing_spread_and_late_linearity():
    sigmas = lattice.sigma_series(0.1, 100)
    assert sigmas[0] > 0.5  # initial state already spread over many sites
    late = sigmas[60:]
    n = np.arange(60, 101)
    slope, intercept = np.polyfit(n, late, 1)
    fit = slope * n + intercept
    assert np.max(np.abs(fit - late)) / late.mean() < 0.01


def test_scaling_factor_reference_values():
    v4 = lattice.scaling_factor(4.0, 100)
    v2 = lattice.scaling_factor(2.0, 100)
    v1 = lattice.scaling_factor(1.0, 100)
    assert v4 == pytest.approx(0.457, abs=0.005)
    assert v1 == pytest.approx(0.89 * 0.457, abs=0.01)
    assert v2 / v4 >= 0.99


def test_scaling_factor_requires_enough_steps():
    with pytest.raises(ValueError):
        lattice.scaling_factor(2.0, 30)


def test_symmetric_walk_is_symmetric():
    state = lattice.run_walk(lattice.WalkSpec(15, 2.0, phi=0.7, symmetric=True))
    _, probs = lattice.position_probabilities(state)
    assert np.max(np.abs(probs - probs[::-1])) < 1e-9


@settings(max_examples=30, deadline=None)
@given(
    st.integers(1, 6),
    st.floats(0.4, 4.0),
    st.floats(0.0, 2 * math.pi),
    st.floats(0.1, math.pi),
)
def test_walk_preserves_lattice_norm(n_steps, step_size, phi, theta):
    state = lattice.initial_state(step_size)
    for _ in range(n_steps):
        state = lattice.apply_shift(lattice.apply_coin(state, theta, phi))
    assert state.lattice_norm() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.floats(0.5, 3.0))
def test_unnormalized_probabilities_bounded_by_one(n_steps, step_size):
    state = lattice.run_walk(lattice.WalkSpec(n_steps, step_size))
    _, probs = lattice.position_probabilities(state, normalize=False)
    assert np.all(probs <= 1.0 + 1e-9)
    assert np.all(probs >= 0.0)
