"""Second-order finite-difference solvers for the elliptic benchmark problems.

* 1-d diffusion:  -(1/10) d/dx(k du/dx) = f on [a, b], u = 0 at both ends.
  Conservative 3-point scheme with arithmetic half-node coefficients,
  solved by the Thomas algorithm.
* 2-d Poisson:    -(1/10) Lap(u) = f on the unit square, zero Dirichlet.
* 2-d elliptic:   -div(k grad u) = f (no 1/10 factor), zero Dirichlet.
  Both 2-d problems use the 5-point stencil in flux form and a matrix-free
  conjugate gradient solve to relative residual 1e-10.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, NumericalError, ShapeError
from .fields import FieldSample, Grid1d, Grid2d

__all__ = ["solve_diffusion_1d", "solve_poisson_2d", "solve_elliptic_2d",
           "diffusion_matrix_1d", "CG_RTOL"]

CG_RTOL = 1e-10


def diffusion_matrix_1d(k: FieldSample) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tridiagonal bands (sub, diag, sup) of the interior 1-d diffusion operator.

    sub[0] and sup[-1] are structural zeros (boundary rows are eliminated).
    For positive k the matrix is symmetric and diagonally dominant.
    """
    g = k.grid
    kv = k.values
    scale = 0.1 / (g.h * g.h)
    k_half = 0.5 * (kv[:-1] + kv[1:])
    kw = k_half[:-1]
    ke = k_half[1:]
    diag = scale * (kw + ke)
    sub = np.concatenate([[0.0], -scale * kw[1:]])
    sup = np.concatenate([-scale * ke[:-1], [0.0]])
    return sub, diag, sup


def _thomas(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Tridiagonal solve; sub[0] and sup[-1] are ignored."""
    n = diag.size
    c = np.empty(n)
    d = np.empty(n)
    if diag[0] == 0.0:
        raise NumericalError("singular tridiagonal system (zero pivot at row 0)")
    c[0] = sup[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - sub[i] * c[i - 1]
        if denom == 0.0:
            raise NumericalError(f"singular tridiagonal system (zero pivot at row {i})")
        c[i] = sup[i] / denom
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom
    x = np.empty(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def solve_diffusion_1d(k: FieldSample, f: FieldSample) -> FieldSample:
    """Solve -(1/10) (k u')' = f with homogeneous Dirichlet conditions.

    k and f must share a 1-d grid and k must be strictly positive.  The
    assembled tridiagonal system is symmetric and diagonally dominant.
    """
    if not isinstance(k.grid, Grid1d) or k.grid != f.grid:
        raise ShapeError("k and f must share a 1-d grid")
    if np.any(k.values <= 0.0):
        raise DomainError("diffusion coefficient must be strictly positive on the grid")
    g = k.grid
    sub, diag, sup = diffusion_matrix_1d(k)
    u_int = _thomas(sub, diag, sup, f.values[1:-1])
    u = np.zeros(g.n)
    u[1:-1] = u_int
    return FieldSample(g, u)


def _cg(apply_a, b: np.ndarray, rtol: float, max_iter: int) -> np.ndarray:
    """Plain conjugate gradient from x0 = 0 for an SPD operator."""
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rr = float(r @ r)
    bnorm = np.sqrt(float(b @ b))
    if bnorm == 0.0:
        return x
    threshold = rtol * bnorm
    for _ in range(max_iter):
        if np.sqrt(rr) <= threshold:
            return x
        ap = apply_a(p)
        alpha = rr / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    if np.sqrt(rr) <= threshold:
        return x
    raise NumericalError(
        f"conjugate gradient did not reach relative residual {rtol:g} in {max_iter} iterations"
    )


def _check_square_unit_grid(grid) -> Grid2d:
    if not isinstance(grid, Grid2d):
        raise ShapeError("2-d solvers need a Grid2d")
    if grid.nx != grid.ny or abs(grid.hx - grid.hy) > 1e-12 * max(grid.hx, grid.hy):
        raise ShapeError(f"2-d solvers need a square grid with equal spacing, got {grid.nx}x{grid.ny}")
    return grid


def solve_poisson_2d(f: FieldSample) -> FieldSample:
    """Solve -(1/10) Lap(u) = f on a square grid with zero boundary values."""
    g = _check_square_unit_grid(f.grid)
    n = g.nx
    h = g.hx
    ni = n - 2
    scale = 0.1 / (h * h)
    fi = f.values.reshape(n, n)[1:-1, 1:-1]

    def apply_a(v: np.ndarray) -> np.ndarray:
        u = np.zeros((n, n))
        u[1:-1, 1:-1] = v.reshape(ni, ni)
        out = 4.0 * u[1:-1, 1:-1] - u[:-2, 1:-1] - u[2:, 1:-1] - u[1:-1, :-2] - u[1:-1, 2:]
        return (scale * out).reshape(-1)

    u_int = _cg(apply_a, fi.reshape(-1), CG_RTOL, 10 * ni * ni)
    u = np.zeros((n, n))
    u[1:-1, 1:-1] = u_int.reshape(ni, ni)
    return FieldSample(g, u.reshape(-1))


def solve_elliptic_2d(k: FieldSample, f: FieldSample) -> FieldSample:
    """Solve -div(k grad u) = f on a square grid with zero boundary values.

    Half-node coefficients use the arithmetic mean of adjacent k values,
    which keeps the operator symmetric positive definite for k > 0.
    """
    g = _check_square_unit_grid(f.grid)
    if k.grid != f.grid:
        raise ShapeError("k and f must share the grid")
    if np.any(k.values <= 0.0):
        raise DomainError("diffusion coefficient must be strictly positive on the grid")
    n = g.nx
    h = g.hx
    ni = n - 2
    kv = k.values.reshape(n, n)
    # Half-node coefficients on the four faces of each interior cell.
    kw = 0.5 * (kv[1:-1, 1:-1] + kv[:-2, 1:-1])
    ke = 0.5 * (kv[1:-1, 1:-1] + kv[2:, 1:-1])
    ks = 0.5 * (kv[1:-1, 1:-1] + kv[1:-1, :-2])
    kn = 0.5 * (kv[1:-1, 1:-1] + kv[1:-1, 2:])
    inv_h2 = 1.0 / (h * h)
    fi = f.values.reshape(n, n)[1:-1, 1:-1]

    def apply_a(v: np.ndarray) -> np.ndarray:
        u = np.zeros((n, n))
        u[1:-1, 1:-1] = v.reshape(ni, ni)
        c = u[1:-1, 1:-1]
        out = (kw * (c - u[:-2, 1:-1]) + ke * (c - u[2:, 1:-1])
               + ks * (c - u[1:-1, :-2]) + kn * (c - u[1:-1, 2:]))
        return (inv_h2 * out).reshape(-1)

    u_int = _cg(apply_a, fi.reshape(-1), CG_RTOL, 10 * ni * ni)
    u = np.zeros((n, n))
    u[1:-1, 1:-1] = u_int.reshape(ni, ni)
    return FieldSample(g, u.reshape(-1))
