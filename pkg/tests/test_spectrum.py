import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from kfda import (
    GammaSweep,
    GramBundle,
    InvalidInputError,
    KernelSpec,
    TwoSample,
    build_bundle,
    d_r,
    pooled_spectrum,
)
from kfda.spectrum import regularized_quadratic, truncate_spectrum


def feature_quadratic(sample, gamma):
    """(n1 n2 / n) delta' (S_W + gamma I)^-1 delta with explicit coordinates."""
    x1, x2 = sample.sample1, sample.sample2
    c1, c2 = x1 - x1.mean(0), x2 - x2.mean(0)
    S = (c1.T @ c1 + c2.T @ c2) / sample.n
    delta = x2.mean(0) - x1.mean(0)
    A = S + gamma * np.eye(S.shape[0])
    return sample.n1 * sample.n2 / sample.n * delta @ np.linalg.solve(A, delta)


def random_sample(rng, d, n1, n2, shift=0.3):
    return TwoSample.from_samples(rng.normal(size=(n1, d)), rng.normal(size=(n2, d)) + shift)


class TestBundle:
    def test_linear_toy_gram(self, toy_sample):
        K = build_bundle(toy_sample, KernelSpec.linear()).K
        np.testing.assert_array_equal(
            K, [[0, 0, 0, 0], [0, 4, 2, 6], [0, 2, 1, 3], [0, 6, 3, 9]]
        )

    def test_needs_two_points_per_sample(self):
        with pytest.raises(InvalidInputError):
            TwoSample.from_samples([[0.0]], [[1.0], [2.0]])

    def test_identical_points_gaussian(self):
        s = TwoSample.from_samples(np.zeros((3, 2)), np.zeros((2, 2)))
        np.testing.assert_array_equal(build_bundle(s, KernelSpec.gaussian(1.0)).K, np.ones((5, 5)))

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            TwoSample.from_samples(np.zeros((3, 2)), np.zeros((3, 1)))

    def test_centering_matches_dense(self, rng):
        b = build_bundle(random_sample(rng, 2, 7, 11), KernelSpec.gaussian(1.0))
        N = b.centering_matrix()
        np.testing.assert_allclose(b.centered, N @ b.K @ N, atol=1e-13)
        np.testing.assert_allclose(N @ N, N, atol=1e-14)


class TestSpectrum:
    def test_linear_toy(self, toy_sample):
        lam = pooled_spectrum(build_bundle(toy_sample, KernelSpec.linear()))
        np.testing.assert_allclose(lam, [1.0], rtol=1e-12)

    def test_constant_kernel_is_empty(self):
        b = GramBundle(np.ones((6, 6)), 3, 3)
        assert pooled_spectrum(b).size == 0

    @pytest.mark.parametrize("d", [1, 2, 4])
    def test_linear_matches_coordinate_covariance(self, d, rng):
        s = random_sample(rng, d, 30, 45)
        x1, x2 = s.sample1, s.sample2
        c1, c2 = x1 - x1.mean(0), x2 - x2.mean(0)
        S = (c1.T @ c1 + c2.T @ c2) / s.n
        expected = np.sort(np.linalg.eigvalsh(S))[::-1]
        got = pooled_spectrum(build_bundle(s, KernelSpec.linear()))
        np.testing.assert_allclose(got, expected, atol=1e-8)

    def test_spline_leading_pairs(self, rng):
        s = TwoSample.from_samples(rng.random(100), rng.random(100))
        lam = pooled_spectrum(build_bundle(s, KernelSpec.spline(2)))
        for ell in (1, 2):
            target = (2 * np.pi * ell) ** -4
            np.testing.assert_allclose(lam[2 * ell - 2 : 2 * ell], target, rtol=0.2)

    def test_truncation(self):
        lam = truncate_spectrum([1e-13, 0.5, -1e-15, 2.0])
        np.testing.assert_array_equal(lam, [2.0, 0.5])


class TestDr:
    @pytest.mark.parametrize("r", [1, 2])
    def test_single_unit_eigenvalue(self, r):
        assert d_r([1.0], 1.0, r) == pytest.approx(0.5)

    def test_rejects_bad_gamma(self):
        with pytest.raises(InvalidInputError):
            d_r([1.0], 0.0, 1)

    def test_harmonic_spectrum_asymptotics(self):
        gamma = 1e-6
        lam = np.arange(1, 1_000_001, dtype=float) ** -2
        target, _ = integrate.quad(lambda v: 1 / (1 + v * v), 0, np.inf)
        assert d_r(lam, gamma, 1) == pytest.approx(target / math.sqrt(gamma), rel=0.05)
        assert abs(d_r(lam, gamma, 1) - 1570.8) < 0.05 * 1570.8

    @given(
        st.lists(st.floats(1e-6, 10.0), min_size=1, max_size=30),
        st.floats(1e-6, 10.0),
        st.floats(1.01, 100.0),
        st.floats(1e-6, 10.0),
    )
    def test_monotone(self, lam, gamma, factor, extra):
        for r in (1, 2):
            assert d_r(lam, gamma * factor, r) <= d_r(lam, gamma, r) + 1e-12
            assert d_r(lam + [extra], gamma, r) >= d_r(lam, gamma, r) - 1e-12

    @pytest.mark.parametrize("gamma", [10.0**-k for k in range(1, 9)])
    def test_summable_bound(self, gamma):
        lam = np.arange(1, 10_001, dtype=float) ** -2
        lhs = math.sqrt(gamma) * np.sum(lam / (lam + gamma))
        assert lhs <= 2 * np.sum(np.sqrt(lam))


class TestRegularizedQuadratic:
    def test_linear_toy(self, toy_sample):
        b = build_bundle(toy_sample, KernelSpec.linear())
        assert regularized_quadratic(b, 1.0) == pytest.approx(0.5, rel=1e-12)
        assert regularized_quadratic(b, 1e-10) == pytest.approx(1.0, rel=1e-6)

    def test_identical_samples_zero(self, rng):
        x = rng.normal(size=(10, 2))
        b = build_bundle(TwoSample.from_samples(x, x), KernelSpec.gaussian(1.0))
        assert abs(regularized_quadratic(b, 0.1)) < 1e-12

    @pytest.mark.parametrize("gamma", [1e-6, 1e-2, 1.0])
    @pytest.mark.parametrize("d", [1, 3, 5])
    def test_matches_feature_space(self, gamma, d, rng):
        s = random_sample(rng, d, 40, 60)
        got = regularized_quadratic(build_bundle(s, KernelSpec.linear()), gamma)
        assert got == pytest.approx(feature_quadratic(s, gamma), rel=1e-8)

    def test_nonpositive_gamma(self, toy_sample):
        b = build_bundle(toy_sample, KernelSpec.linear())
        with pytest.raises(InvalidInputError):
            regularized_quadratic(b, 0.0)

    @given(st.integers(0, 2**32 - 1))
    def test_within_sample_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        s = TwoSample.from_samples(rng.random(12), rng.random(9))
        b = build_bundle(s, KernelSpec.spline(2))
        idx = np.concatenate([rng.permutation(12), 12 + rng.permutation(9)])
        base = regularized_quadratic(b, 1e-3)
        assert regularized_quadratic(b.permuted(idx), 1e-3) == pytest.approx(base, rel=1e-10)


class TestGammaSweep:
    @pytest.mark.parametrize(
        "spec", [KernelSpec.gaussian(1.0), KernelSpec.spline(2), KernelSpec.linear()], ids=str
    )
    def test_agrees_with_direct_route(self, spec, rng):
        s = TwoSample.from_samples(rng.random((50, 1)), rng.random((40, 1)) ** 1.3)
        b = build_bundle(s, spec)
        sweep = GammaSweep(b)
        np.testing.assert_allclose(sweep.spectrum, pooled_spectrum(b), rtol=1e-8, atol=1e-14)
        for g in (1.0, 1e-2, 1e-5, 1e-9):
            assert sweep.quadratic(g) == pytest.approx(regularized_quadratic(b, g), rel=1e-6)
