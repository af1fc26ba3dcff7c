"""Kernels, Gram matrices, jittered Cholesky, and GP sampling statistics."""

import numpy as np
import pytest

from opvae.errors import NumericalError
from opvae.fields import Grid1d, Grid2d
from opvae.gp import (JITTER_LADDER, Kernel1d, Kernel2d, MeanFunction, cholesky_jitter,
                      cross_matrix, gram_matrix, kernel_eval_1d, kernel_eval_2d, sample_gp)


class TestKernel1d:
    def test_diagonal_is_sigma_squared(self):
        k = Kernel1d(0.7, 0.2)
        assert kernel_eval_1d(k, 0.3, 0.3) == pytest.approx(0.49, rel=1e-15)

    def test_symmetry(self):
        k = Kernel1d(1.3, 0.5)
        assert kernel_eval_1d(k, 0.1, 0.9) == kernel_eval_1d(k, 0.9, 0.1)

    def test_hand_value(self):
        # sigma=0.5, l=0.1, |dx|=0.1 -> 0.25 * e^{-1} = 0.09196986...
        k = Kernel1d(0.5, 0.1)
        assert kernel_eval_1d(k, 0.0, 0.1) == pytest.approx(0.25 * np.exp(-1.0), rel=1e-14)
        assert kernel_eval_1d(k, 0.0, 0.1) == pytest.approx(0.0919698602928606, rel=1e-12)


class TestKernel2d:
    def test_self_covariance_is_one(self):
        k = Kernel2d(0.1, 0.2)
        assert kernel_eval_2d(k, (0.4, 0.6), (0.4, 0.6)) == 1.0

    def test_hand_value(self):
        # l1=l2=0.1, offset (0.1, 0) -> e^{-0.5} = 0.60653065...
        k = Kernel2d(0.1, 0.1)
        assert kernel_eval_2d(k, (0.0, 0.0), (0.1, 0.0)) == pytest.approx(np.exp(-0.5), rel=1e-14)
        assert kernel_eval_2d(k, (0.0, 0.0), (0.1, 0.0)) == pytest.approx(0.6065306597126334, rel=1e-12)

    def test_separable_product_form(self):
        k = Kernel2d(0.15, 0.25)
        full = kernel_eval_2d(k, (0.0, 0.0), (0.07, 0.11))
        vx = kernel_eval_2d(k, (0.0, 0.0), (0.07, 0.0))
        vy = kernel_eval_2d(k, (0.0, 0.0), (0.0, 0.11))
        assert full == pytest.approx(vx * vy, rel=1e-14)


class TestGramMatrix:
    def test_single_point(self):
        K = gram_matrix(np.array([0.2]), Kernel1d(0.5, 0.1))
        np.testing.assert_allclose(K, [[0.25]], rtol=1e-15)

    def test_duplicated_point_rank_deficient(self):
        K = gram_matrix(np.array([0.2, 0.2]), Kernel1d(1.0, 0.1))
        assert K[0, 0] == K[0, 1] == K[1, 0] == K[1, 1] == 1.0

    def test_entrywise_against_kernel_eval(self):
        pts = np.array([0.0, 0.5, 1.0])
        k = Kernel1d(1.0, 1.0)
        K = gram_matrix(pts, k)
        for i in range(3):
            for j in range(3):
                assert K[i, j] == pytest.approx(kernel_eval_1d(k, pts[i], pts[j]), rel=1e-15)

    def test_bitwise_symmetry(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(-1, 1, 50)
        K = gram_matrix(pts, Kernel1d(0.5, 0.1))
        assert np.array_equal(K, K.T)
        pts2 = rng.uniform(0, 1, (40, 2))
        K2 = gram_matrix(pts2, Kernel2d(0.1, 0.1))
        assert np.array_equal(K2, K2.T)

    def test_cross_matrix_block(self):
        a = np.array([0.0, 0.3])
        b = np.array([0.1, 0.2, 0.9])
        k = Kernel1d(1.0, 0.4)
        C = cross_matrix(a, b, k)
        assert C.shape == (2, 3)
        assert C[1, 2] == pytest.approx(kernel_eval_1d(k, 0.3, 0.9), rel=1e-15)


class TestCholeskyJitter:
    def test_identity(self):
        np.testing.assert_array_equal(cholesky_jitter(np.eye(4)), np.eye(4))

    def test_hand_cholesky(self):
        L = cholesky_jitter(np.array([[4.0, 2.0], [2.0, 3.0]]))
        np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], rtol=1e-15)

    def test_rank_one_succeeds_with_jitter(self):
        K = np.ones((3, 3))
        L = cholesky_jitter(K)
        resid = np.abs(L @ L.T - K).max()
        assert resid <= JITTER_LADDER[-1] + 1e-12

    def test_zero_matrix_factors_to_zero(self):
        np.testing.assert_array_equal(cholesky_jitter(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_hopeless_matrix_raises(self):
        with pytest.raises(NumericalError, match="3x3"):
            cholesky_jitter(np.array([[1.0, 0, 0], [0, -5.0, 0], [0, 0, 1.0]]))

    def test_reconstruction_residual_experiment_kernels(self):
        # l = 0.05 on a 401-point grid is the worst-conditioned case used.
        pts = np.linspace(-1, 1, 401)
        for length in (0.05, 0.1):
            K = gram_matrix(pts, Kernel1d(0.5, length))
            L = cholesky_jitter(K)
            resid = np.abs(L @ L.T - K).max()
            assert resid < 1e-9 + JITTER_LADDER[-1]


class TestMeanFunction:
    def test_forms(self):
        x = np.array([0.25])
        assert MeanFunction("zero")(x)[0] == 0.0
        assert MeanFunction("sine")(x)[0] == pytest.approx(np.sin(2 * np.pi * 0.25), rel=1e-15)
        m = MeanFunction("sine", freq=np.pi, phase=1.0)
        assert m(x)[0] == pytest.approx(np.sin(np.pi * 0.25 + 1.0), rel=1e-15)
        m2 = MeanFunction("sine2d", amplitude=4.0)
        pt = np.array([[0.25, 0.5]])
        assert m2(pt)[0] == pytest.approx(4 * (np.sin(np.pi / 2) + np.sin(np.pi)), abs=1e-12)


class TestSampleGp:
    def test_zero_amplitude_returns_mean_exactly(self):
        grid = Grid1d(-1.0, 1.0, 33)
        samples = sample_gp(MeanFunction("sine"), Kernel1d(0.0, 0.1), grid, 3, seed=5)
        mu = MeanFunction("sine")(grid.points())
        for s in samples:
            np.testing.assert_array_equal(s.values, mu)

    def test_seed_determinism_and_prefix_stability(self):
        grid = Grid1d(-1.0, 1.0, 17)
        a = sample_gp(MeanFunction("zero"), Kernel1d(1.0, 0.3), grid, 4, seed=9)
        b = sample_gp(MeanFunction("zero"), Kernel1d(1.0, 0.3), grid, 4, seed=9)
        c = sample_gp(MeanFunction("zero"), Kernel1d(1.0, 0.3), grid, 2, seed=9)
        for x, y in zip(a, b):
            assert np.array_equal(x.values, y.values)
        for i in range(2):   # sample i is the same regardless of n
            assert np.array_equal(a[i].values, c[i].values)

    def test_monte_carlo_covariance_two_points(self):
        grid = Grid1d(0.0, 1.0, 2)
        kernel = Kernel1d(0.8, 0.7)
        samples = sample_gp(MeanFunction("zero"), kernel, grid, 10000, seed=21)
        data = np.array([s.values for s in samples])
        emp = np.cov(data.T)
        expected = gram_matrix(grid.points(), kernel)
        assert np.abs(emp - expected).max() / expected.max() < 0.05

    def test_monte_carlo_mean_within_three_standard_errors(self):
        grid = Grid1d(-1.0, 1.0, 11)
        kernel = Kernel1d(0.5, 0.4)
        samples = sample_gp(MeanFunction("sine"), kernel, grid, 10000, seed=13)
        data = np.array([s.values for s in samples])
        mu = MeanFunction("sine")(grid.points())
        se = data.std(axis=0, ddof=1) / np.sqrt(data.shape[0])
        assert np.all(np.abs(data.mean(axis=0) - mu) < 3.0 * se + 1e-12)

    def test_2d_sampler_matches_kernel_covariance(self):
        grid = Grid2d(0.0, 1.0, 0.0, 1.0, 3, 3)
        kernel = Kernel2d(0.4, 0.3)
        samples = sample_gp(MeanFunction("zero"), kernel, grid, 8000, seed=3)
        data = np.array([s.values for s in samples])
        emp = np.cov(data.T)
        expected = gram_matrix(grid.coords(), kernel)
        assert np.abs(emp - expected).max() < 0.06

    def test_log_field_positive(self):
        grid = Grid1d(-1.0, 1.0, 51)
        samples = sample_gp(MeanFunction("sine"), Kernel1d(0.5, 0.1), grid, 5, seed=1)
        for s in samples:
            assert np.all(np.exp(s.values) > 0)
