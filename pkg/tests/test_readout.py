import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionwalk import fock, readout
from ionwalk.errors import IllConditioned

ETA = 0.31


@pytest.fixture(scope="module")
def cfg():
    return readout.default_config(ETA, n_max=7)


def random_distribution(rng, support, n_levels):
    p = np.zeros(n_levels)
    p[:support] = rng.random(support)
    return p / p.sum()


class TestSignal:
    def test_ground_state_single_cosine(self, cfg):
        p = np.zeros(8)
        p[0] = 1.0
        signal = readout.bsb_signal(p, cfg, ETA)
        omega = readout.rabi_frequencies(ETA, 0, cfg.base_rabi)[0]
        expected = 0.5 * (1.0 + np.cos(omega * cfg.t_grid))
        assert np.max(np.abs(signal - expected)) < 1e-12

    def test_unity_at_time_zero(self, cfg):
        rng = np.random.default_rng(1)
        p = random_distribution(rng, 6, 8)
        assert readout.bsb_signal(p, cfg, ETA)[0] == pytest.approx(1.0, abs=1e-12)

    def test_damping_flattens_toward_half(self):
        omega = readout.rabi_frequencies(ETA, 0, 2 * math.pi * 1e5)[0]
        cfg = readout.default_config(ETA, n_max=7, gamma=omega / 4.0)
        rng = np.random.default_rng(2)
        p = random_distribution(rng, 8, 8)
        signal = readout.bsb_signal(p, cfg, ETA)
        assert np.max(np.abs(signal[-20:] - 0.5)) < 0.05

    def test_rejects_unnormalized_input(self, cfg):
        with pytest.raises(ValueError):
            readout.bsb_signal(np.ones(4), cfg, ETA)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6), st.floats(0.1, 0.9))
    def test_signal_linear_in_distribution(self, seed, weight):
        cfg = readout.default_config(ETA, n_max=7)
        rng = np.random.default_rng(seed)
        p1 = random_distribution(rng, 8, 8)
        p2 = random_distribution(rng, 8, 8)
        mixed = weight * p1 + (1.0 - weight) * p2
        lhs = readout.bsb_signal(mixed, cfg, ETA)
        rhs = weight * readout.bsb_signal(p1, cfg, ETA) + (1.0 - weight) * readout.bsb_signal(p2, cfg, ETA)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


class TestInversion:
    def test_noiseless_roundtrip(self, cfg):
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = random_distribution(rng, 6, 8)
            rec = readout.invert_bsb(readout.bsb_signal(p, cfg, ETA), cfg, ETA)
            assert np.max(np.abs(rec - p)) < 1e-3
            assert np.all(rec >= 0.0)
            assert rec.sum() == pytest.approx(1.0, abs=1e-6)

    def test_noisy_roundtrip(self, cfg):
        rng = np.random.default_rng(4)
        for _ in range(30):
            p = random_distribution(rng, 6, 8)
            noisy = readout.bsb_signal(p, cfg, ETA) + rng.normal(0.0, 0.02, cfg.t_grid.size)
            rec = readout.invert_bsb(noisy, cfg, ETA)
            assert np.max(np.abs(rec - p)) < 0.05

    def test_prior_seeded_roundtrip(self, cfg):
        rng = np.random.default_rng(5)
        p = random_distribution(rng, 6, 8)
        signal = readout.bsb_signal(p, cfg, ETA)
        rec = readout.invert_bsb(signal, cfg, ETA, prior=p)
        assert np.max(np.abs(rec - p)) < 1e-3

    def test_short_grid_rejected(self):
        cfg = readout.ReadoutConfig(t_grid=np.linspace(0.0, 1e-6, 16), n_max=3)
        with pytest.raises(ValueError):
            readout.invert_bsb(np.ones(16), cfg, ETA)

    def test_degenerate_dictionary_rejected(self):
        # frequencies nearly repeat on both sides of the coupling peak, so a
        # wide level range is numerically singular even on a long grid
        omega = readout.rabi_frequencies(ETA, 16, 2 * math.pi * 1e5)
        t = np.linspace(0.0, 4 * 2 * math.pi / omega[omega > 0].min(), 120)
        cfg = readout.ReadoutConfig(t_grid=t, n_max=16)
        with pytest.raises(IllConditioned):
            readout.invert_bsb(np.full(120, 0.5), cfg, ETA)


class TestDisambiguation:
    @pytest.fixture(scope="class")
    @staticmethod
    def profiles():
        return {k: fock.coherent_state(1.24 * k, 64).fock_probs() for k in range(5)}

    @staticmethod
    def mixture(profiles, weights, shift):
        q = np.zeros(64)
        for k, w in weights.items():
            prof = profiles[abs(k + shift)]
            q += w * np.pad(prof, (0, 64 - prof.size))
        return q

    def test_planted_walk_distribution_recovered(self, profiles):
        weights = {1: 4.0 / 6.0, 3: 1.0 / 6.0, -1: 1.0 / 6.0, -3: 0.0}
        k_values = sorted(weights)
        rec, residual = readout.disambiguate_positions(
            self.mixture(profiles, weights, 0),
            self.mixture(profiles, weights, 1),
            self.mixture(profiles, weights, -1),
            profiles,
            k_values,
            shift_sign=1,
        )
        assert residual < 1e-3
        for k in k_values:
            assert rec[k] == pytest.approx(weights[k], abs=0.03)
        assert rec[1] > rec[-1]
        assert rec[1] / max(rec[-1], 1e-12) > 2.0

    def test_symmetric_state_recovers_equal_weights(self, profiles):
        weights = {2: 0.5, -2: 0.5, 0: 0.0}
        rec, _ = readout.disambiguate_positions(
            self.mixture(profiles, weights, 0),
            self.mixture(profiles, weights, 1),
            self.mixture(profiles, weights, -1),
            profiles,
            [-2, 0, 2],
            shift_sign=1,
        )
        assert rec[2] == pytest.approx(0.5, abs=0.02)
        assert rec[-2] == pytest.approx(0.5, abs=0.02)

    def test_single_position_is_a_delta(self, profiles):
        weights = {3: 1.0, 1: 0.0, -1: 0.0, -3: 0.0}
        rec, _ = readout.disambiguate_positions(
            self.mixture(profiles, weights, 0),
            self.mixture(profiles, weights, 1),
            self.mixture(profiles, weights, -1),
            profiles,
            sorted(weights),
            shift_sign=1,
        )
        assert rec[3] == pytest.approx(1.0, abs=0.02)
        for k in (-3, -1, 1):
            assert rec[k] < 0.02

    def test_opposite_branch_shift_sign(self, profiles):
        # an H-type branch moves down under the shift; same planted weights
        weights = {1: 0.5, -3: 0.5, -1: 0.0, 3: 0.0}
        rec, residual = readout.disambiguate_positions(
            self.mixture(profiles, weights, 0),
            self.mixture(profiles, weights, -1),
            self.mixture(profiles, weights, 1),
            profiles,
            sorted(weights),
            shift_sign=-1,
        )
        assert residual < 1e-3
        assert rec[1] == pytest.approx(0.5, abs=0.02)
        assert rec[-3] == pytest.approx(0.5, abs=0.02)


def test_config_validation():
    with pytest.raises(ValueError):
        readout.ReadoutConfig(t_grid=np.array([0.0]), n_max=3)
    with pytest.raises(ValueError):
        readout.ReadoutConfig(t_grid=np.array([0.0, -1.0]), n_max=3)
    with pytest.raises(ValueError):
        readout.ReadoutConfig(t_grid=np.array([0.0, 1.0]), n_max=3, gamma=-1.0)
