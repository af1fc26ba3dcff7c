"""Solver correctness via manufactured solutions and structural invariants.

Each manufactured case picks an exact u*, derives the forcing by hand,
and measures the discretization error against u*; refining the grid must
shrink the error at second order.
"""

import numpy as np
import pytest

from opvae.errors import DomainError, ShapeError
from opvae.fields import FieldSample, Grid1d, Grid2d
from opvae.pde import (diffusion_matrix_1d, solve_diffusion_1d, solve_elliptic_2d,
                       solve_poisson_2d)


def grid1(n):
    return Grid1d(-1.0, 1.0, n)


def grid2(n):
    return Grid2d(0.0, 1.0, 0.0, 1.0, n, n)


def max_error_diffusion(n, k_fn, u_fn, f_fn):
    g = grid1(n)
    x = g.points()
    u = solve_diffusion_1d(FieldSample(g, k_fn(x)), FieldSample(g, f_fn(x)))
    return np.abs(u.values - u_fn(x)).max()


class TestDiffusion1d:
    def test_zero_source_zero_solution(self):
        g = grid1(41)
        u = solve_diffusion_1d(FieldSample(g, np.ones(41)), FieldSample(g, np.zeros(41)))
        np.testing.assert_array_equal(u.values, np.zeros(41))

    def test_manufactured_constant_k(self):
        # k = 1, u* = sin(pi x)  ->  f = (pi^2 / 10) sin(pi x)
        u_fn = lambda x: np.sin(np.pi * x)
        f_fn = lambda x: (np.pi**2 / 10.0) * np.sin(np.pi * x)
        err = max_error_diffusion(401, np.ones_like, u_fn, f_fn)
        assert err < 5e-5
        coarse = max_error_diffusion(201, np.ones_like, u_fn, f_fn)
        fine = max_error_diffusion(401, np.ones_like, u_fn, f_fn)
        assert 3.0 < coarse / fine < 5.0   # halving h shrinks error ~4x

    def test_manufactured_variable_k(self):
        # k = e^x, u* = 1 - x^2  ->  f = -(1/10)(e^x (-2x))' = 0.2 e^x (x + 1)
        k_fn = np.exp
        u_fn = lambda x: 1.0 - x * x
        f_fn = lambda x: 0.2 * np.exp(x) * (x + 1.0)
        coarse = max_error_diffusion(101, k_fn, u_fn, f_fn)
        fine = max_error_diffusion(201, k_fn, u_fn, f_fn)
        assert coarse < 1e-3
        order = np.log2(coarse / fine)
        assert 1.8 <= order <= 2.2

    def test_nonpositive_k_rejected(self):
        g = grid1(11)
        k = np.ones(11)
        k[5] = 0.0
        with pytest.raises(DomainError):
            solve_diffusion_1d(FieldSample(g, k), FieldSample(g, np.ones(11)))

    def test_grid_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            solve_diffusion_1d(FieldSample(grid1(11), np.ones(11)),
                               FieldSample(grid1(21), np.ones(21)))

    def test_matrix_symmetric_diagonally_dominant(self):
        rng = np.random.default_rng(4)
        g = grid1(41)
        k = FieldSample(g, np.exp(rng.normal(0, 0.5, 41)))
        sub, diag, sup = diffusion_matrix_1d(k)
        # symmetry: sub[i] (coupling to the left) equals sup[i-1]
        np.testing.assert_allclose(sub[1:], sup[:-1], rtol=1e-15)
        # diagonal dominance: |diag| >= |sub| + |sup| row-wise (equality interior)
        assert np.all(np.abs(diag) >= np.abs(sub) + np.abs(sup) - 1e-12)

    def test_linearity_in_f(self):
        rng = np.random.default_rng(7)
        g = grid1(101)
        k = FieldSample(g, np.exp(rng.normal(0, 0.3, 101)))
        f1 = FieldSample(g, rng.normal(size=101))
        f2 = FieldSample(g, rng.normal(size=101))
        lhs = solve_diffusion_1d(k, FieldSample(g, 2.0 * f1.values - 3.0 * f2.values))
        rhs = 2.0 * solve_diffusion_1d(k, f1).values - 3.0 * solve_diffusion_1d(k, f2).values
        np.testing.assert_allclose(lhs.values, rhs, atol=1e-10)


class TestPoisson2d:
    @staticmethod
    def manufactured_error(n):
        # u* = sin(pi x) sin(pi y)  ->  f = (pi^2 / 5) sin(pi x) sin(pi y)
        g = grid2(n)
        pts = g.coords()
        f = (np.pi**2 / 5.0) * np.sin(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])
        u_exact = np.sin(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])
        u = solve_poisson_2d(FieldSample(g, f))
        return np.abs(u.values - u_exact).max()

    def test_zero_source(self):
        g = grid2(17)
        u = solve_poisson_2d(FieldSample(g, np.zeros(g.size)))
        np.testing.assert_array_equal(u.values, np.zeros(g.size))

    def test_manufactured_second_order(self):
        e26 = self.manufactured_error(26)
        e51 = self.manufactured_error(51)
        e101 = self.manufactured_error(101)
        order1 = np.log(e26 / e51) / np.log((51 - 1) / (26 - 1))
        order2 = np.log(e51 / e101) / np.log((101 - 1) / (51 - 1))
        assert 1.8 <= order1 <= 2.2
        assert 1.8 <= order2 <= 2.2

    def test_sign_flip(self):
        rng = np.random.default_rng(2)
        g = grid2(21)
        f = rng.normal(size=g.size)
        up = solve_poisson_2d(FieldSample(g, f))
        un = solve_poisson_2d(FieldSample(g, -f))
        np.testing.assert_allclose(up.values, -un.values, atol=1e-10)

    def test_boundary_exactly_zero(self):
        rng = np.random.default_rng(3)
        g = grid2(15)
        u = solve_poisson_2d(FieldSample(g, rng.normal(size=g.size))).as_matrix()
        assert np.all(u[0, :] == 0) and np.all(u[-1, :] == 0)
        assert np.all(u[:, 0] == 0) and np.all(u[:, -1] == 0)


class TestElliptic2d:
    @staticmethod
    def manufactured_error(n):
        # k = 1 + x^2 y^2, u* = sin(pi x) sin(pi y)
        # f = 2 pi^2 k u* - 2 pi x y^2 cos(pi x) sin(pi y) - 2 pi x^2 y sin(pi x) cos(pi y)
        g = grid2(n)
        pts = g.coords()
        x, y = pts[:, 0], pts[:, 1]
        sx, sy = np.sin(np.pi * x), np.sin(np.pi * y)
        cx, cy = np.cos(np.pi * x), np.cos(np.pi * y)
        k = 1.0 + x**2 * y**2
        f = 2 * np.pi**2 * k * sx * sy - 2 * np.pi * x * y**2 * cx * sy \
            - 2 * np.pi * x**2 * y * sx * cy
        u = solve_elliptic_2d(FieldSample(g, k), FieldSample(g, f))
        return np.abs(u.values - sx * sy).max()

    def test_manufactured_second_order(self):
        e26 = self.manufactured_error(26)
        e51 = self.manufactured_error(51)
        e101 = self.manufactured_error(101)
        order1 = np.log(e26 / e51) / np.log((51 - 1) / (26 - 1))
        order2 = np.log(e51 / e101) / np.log((101 - 1) / (51 - 1))
        assert 1.8 <= order1 <= 2.2
        assert 1.8 <= order2 <= 2.2

    def test_unit_k_matches_poisson_scaled(self):
        # -div(grad u) = f  vs  -(1/10) lap u = f: the latter solution is 10x.
        rng = np.random.default_rng(11)
        g = grid2(26)
        f = FieldSample(g, rng.normal(size=g.size))
        ue = solve_elliptic_2d(FieldSample(g, np.ones(g.size)), f)
        up = solve_poisson_2d(f)
        np.testing.assert_allclose(up.values, 10.0 * ue.values, rtol=1e-7, atol=1e-10)

    def test_zero_source(self):
        g = grid2(13)
        u = solve_elliptic_2d(FieldSample(g, np.ones(g.size)),
                              FieldSample(g, np.zeros(g.size)))
        np.testing.assert_array_equal(u.values, np.zeros(g.size))

    def test_nonpositive_k_rejected(self):
        g = grid2(9)
        k = np.ones(g.size)
        k[12] = -0.5
        with pytest.raises(DomainError):
            solve_elliptic_2d(FieldSample(g, k), FieldSample(g, np.ones(g.size)))

    def test_linearity_in_f(self):
        rng = np.random.default_rng(12)
        g = grid2(17)
        k = FieldSample(g, np.exp(rng.normal(0, 0.3, g.size)))
        f1, f2 = rng.normal(size=g.size), rng.normal(size=g.size)
        lhs = solve_elliptic_2d(k, FieldSample(g, 0.5 * f1 + 2.0 * f2))
        rhs = 0.5 * solve_elliptic_2d(k, FieldSample(g, f1)).values \
            + 2.0 * solve_elliptic_2d(k, FieldSample(g, f2)).values
        np.testing.assert_allclose(lhs.values, rhs, atol=1e-9)
