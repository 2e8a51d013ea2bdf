import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize, stats

from kfda import (
    CalibrationMethod,
    InvalidInputError,
    KernelSpec,
    MixtureSpec,
    TwoSample,
    build_bundle,
    calibrate,
    mixture_quantile,
    resample_critical_value,
)
from kfda.calibration import (
    block_bootstrap_indices,
    calibrate_mixture,
    chi2_combinations,
    default_block_length,
    empirical_p_value,
    empirical_quantile,
    normal_p_value,
    normal_quantile,
)
from kfda.statistics import kfda_from_bundle

GAUSS = KernelSpec.gaussian(1.0)


def erfc_quantile(alpha):
    """Root of 0.5 erfc(z / sqrt 2) = alpha."""
    return optimize.brentq(lambda z: 0.5 * math.erfc(z / math.sqrt(2)) - alpha, -10, 10, xtol=1e-14)


class TestMixture:
    @pytest.mark.parametrize("w", [0.3, 1.0])
    def test_single_weight_quantile(self, w):
        expected = (stats.chi2.ppf(0.95, 1) - 1) / math.sqrt(2)
        got = mixture_quantile(MixtureSpec([w], w), 0.05, 100_000, seed=1)
        assert got == pytest.approx(expected, abs=0.03)
        assert expected == pytest.approx(2.0092, abs=1e-4)

    def test_single_weight_median(self):
        expected = (stats.chi2.ppf(0.5, 1) - 1) / math.sqrt(2)
        got = mixture_quantile(MixtureSpec([0.5], 0.5), 0.5, 100_000, seed=2)
        assert got == pytest.approx(expected, abs=0.02)
        assert expected == pytest.approx(-0.3854, abs=1e-4)

    def test_two_equal_weights(self):
        w = 0.4
        expected = (stats.chi2.ppf(0.95, 2) - 2) / 2
        got = mixture_quantile(MixtureSpec([w, w], w * math.sqrt(2)), 0.05, 100_000, seed=3)
        assert got == pytest.approx(expected, abs=0.03)
        assert expected == pytest.approx(1.9957, abs=1e-4)

    def test_from_spectrum(self):
        mix = MixtureSpec.from_spectrum([1.0, 3.0], 1.0)
        np.testing.assert_allclose(mix.weights, [0.75, 0.5])
        assert mix.d1 == pytest.approx(1.25)
        assert mix.d2 == pytest.approx(math.sqrt(0.75**2 + 0.25))

    @pytest.mark.parametrize("weights", [[0.5, 0.7], [1.5], [0.0]])
    def test_invalid_weights(self, weights):
        with pytest.raises(InvalidInputError):
            MixtureSpec(weights, 1.0)

    def test_minimum_draws(self):
        with pytest.raises(InvalidInputError):
            mixture_quantile(MixtureSpec([0.5], 0.5), 0.05, 5000)

    def test_below_all_draws(self):
        res = calibrate_mixture(-1e9, MixtureSpec([0.5], 0.5), 0.05, 10_000, seed=0)
        assert res.p_value == 1.0
        assert not res.rejects()

    def test_shared_draws(self):
        W = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        out = chi2_combinations(W, 1000, np.random.default_rng(0))
        np.testing.assert_allclose(out[2], out[0] + out[1])

    def test_seed_determinism(self):
        mix = MixtureSpec([0.9, 0.5, 0.1], 1.0)
        a = calibrate_mixture(1.3, mix, 0.05, 20_000, seed=11)
        b = calibrate_mixture(1.3, mix, 0.05, 20_000, seed=11)
        assert a == b


class TestNormal:
    @pytest.mark.parametrize("alpha", [0.5, 0.05, 0.025, 0.001])
    def test_quantile(self, alpha):
        assert normal_quantile(alpha) == pytest.approx(erfc_quantile(alpha), abs=1e-9)

    def test_known_values(self):
        assert normal_quantile(0.5) == 0.0
        assert normal_quantile(0.05) == pytest.approx(1.6449, abs=1e-4)
        assert normal_quantile(0.025) == pytest.approx(1.9600, abs=1e-4)

    def test_p_values(self):
        assert normal_p_value(0.0) == 0.5
        assert normal_p_value(1.6449) == pytest.approx(0.05, abs=1e-4)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
    def test_alpha_domain(self, alpha):
        with pytest.raises(InvalidInputError):
            normal_quantile(alpha)


class TestEmpirical:
    def test_type1_quantile(self, rng):
        draws = rng.normal(size=200)
        assert empirical_quantile(draws, 0.05) == np.sort(draws)[189]

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=50), st.floats(-10, 10))
    def test_p_value_range(self, draws, t):
        p = empirical_p_value(t, draws)
        assert 1 / (len(draws) + 1) <= p <= 1.0


class TestBlockBootstrap:
    def test_default_length(self):
        assert default_block_length(1000, 27) == 3
        assert default_block_length(8, 8) == 2

    @given(st.integers(2, 40), st.integers(2, 40), st.integers(0, 2**32 - 1), st.data())
    def test_blocks_are_contiguous(self, n1, n2, seed, data):
        L = data.draw(st.integers(1, min(n1, n2)))
        idx = block_bootstrap_indices(n1, n2, L, np.random.default_rng(seed))
        assert idx.size == n1 + n2
        assert idx.min() >= 0 and idx.max() < n1 + n2
        for part in (idx[:n1], idx[n1:]):
            for start in range(0, part.size, L):
                block = part[start : start + L]
                assert np.all(np.diff(block) == 1)
                # no block straddles the two sequences
                assert (block[0] < n1) == (block[-1] < n1)

    def test_length_bound(self, toy_sample):
        with pytest.raises(InvalidInputError):
            resample_critical_value(
                toy_sample, GAUSS, 0.1, CalibrationMethod.BLOCK_BOOTSTRAP, block_length=3,
                replicates=200,
            )


class TestResampling:
    def test_minimum_replicates(self, toy_sample):
        with pytest.raises(InvalidInputError):
            resample_critical_value(toy_sample, GAUSS, 0.1, CalibrationMethod.PERMUTATION, replicates=100)

    def test_identical_samples_accept(self):
        large = 0
        for seed in range(100):
            x = np.random.default_rng(seed).normal(size=10)
            res = resample_critical_value(
                TwoSample.from_samples(x, x), GAUSS, 0.1, CalibrationMethod.PERMUTATION,
                replicates=200, seed=seed,
            )
            large += res.p_value >= 0.5
        assert large >= 90

    def test_far_clusters(self, rng):
        s = TwoSample.from_samples(rng.normal(size=100), rng.normal(size=100) + 20)
        res = resample_critical_value(s, GAUSS, 0.1, CalibrationMethod.PERMUTATION, replicates=200)
        assert res.p_value == pytest.approx(1 / 201)
        assert res.rejects()

    @pytest.mark.parametrize(
        "method",
        [CalibrationMethod.PERMUTATION, CalibrationMethod.BOOTSTRAP, CalibrationMethod.BLOCK_BOOTSTRAP],
    )
    def test_deterministic(self, method, rng):
        s = TwoSample.from_samples(rng.normal(size=15), rng.normal(size=12))
        a = resample_critical_value(s, GAUSS, 0.1, method, replicates=200, seed=4)
        b = resample_critical_value(s, GAUSS, 0.1, method, replicates=200, seed=4)
        assert a == b
        assert 0 < a.p_value <= 1
        assert a.p_value * 201 == pytest.approx(round(a.p_value * 201))

    def test_worker_count_does_not_change_result(self, rng, monkeypatch):
        s = TwoSample.from_samples(rng.normal(size=15), rng.normal(size=12))
        a = resample_critical_value(s, GAUSS, 0.1, CalibrationMethod.BOOTSTRAP, replicates=200, seed=9)
        monkeypatch.setenv("KFDA_THREADS", "2")
        b = resample_critical_value(s, GAUSS, 0.1, CalibrationMethod.BOOTSTRAP, replicates=200, seed=9)
        assert a == b


class TestDispatcher:
    @pytest.mark.parametrize("method", list(CalibrationMethod))
    def test_every_method(self, method, rng):
        s = TwoSample.from_samples(rng.normal(size=20), rng.normal(size=20) + 3)
        b = build_bundle(s, GAUSS)
        value = kfda_from_bundle(b, 0.1)
        reps = 10_000 if method is CalibrationMethod.MIXTURE else 200
        res = calibrate(b, value, 0.1, method, 0.05, reps, seed=1)
        assert res.method is method
        assert res.rejects() == (res.p_value <= 0.05)
        assert res.rejects()
