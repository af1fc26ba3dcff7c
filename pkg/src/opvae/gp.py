"""Gaussian process sampling of random input fields.

Squared-exponential kernels in one and two dimensions, with the exact
parameterizations used by the experiment configurations:

* 1-d: sigma^2 * exp(-(x - x')^2 / l^2)           (no factor 2 in the denominator)
* 2-d: exp(-(x - x')^2 / (2 l1^2) - (y - y')^2 / (2 l2^2))   (unit amplitude)

The two forms are intentionally not unified; each experiment family uses
its own convention.  2-d sampling exploits the kernel's tensor-product
structure: chol(Kx (x) Ky) = chol(Kx) (x) chol(Ky), so a field sample is
mu + Lx @ Xi @ Ly^T with Xi an iid standard-normal matrix, which avoids
ever forming the full grid covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .errors import ConfigError, ContractError, NumericalError
from .fields import FieldSample, Grid1d, Grid2d

__all__ = [
    "Kernel1d", "Kernel2d", "MeanFunction",
    "kernel_eval_1d", "kernel_eval_2d", "gram_matrix", "cross_matrix",
    "cholesky_jitter", "sample_gp", "JITTER_LADDER",
]

# Escalation ladder for indefinite covariance factorizations: decades from
# 1e-12 to 1e-6, preceded by a jitter-free attempt.
JITTER_LADDER = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


@dataclass(frozen=True)
class Kernel1d:
    """Squared-exponential kernel sigma^2 exp(-(x-x')^2 / l^2)."""

    sigma: float
    length: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError(f"kernel amplitude must be >= 0, got {self.sigma}")
        if self.length <= 0:
            raise ConfigError(f"correlation length must be > 0, got {self.length}")

    def __call__(self, x, xp) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        xp = np.asarray(xp, dtype=np.float64)
        d = x - xp
        return self.sigma**2 * np.exp(-(d * d) / self.length**2)


@dataclass(frozen=True)
class Kernel2d:
    """Separable kernel exp(-(dx)^2/(2 l1^2) - (dy)^2/(2 l2^2)), unit amplitude."""

    l1: float
    l2: float

    def __post_init__(self):
        if self.l1 <= 0 or self.l2 <= 0:
            raise ConfigError(f"correlation lengths must be > 0, got ({self.l1}, {self.l2})")

    def __call__(self, p, pp) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64)
        pp = np.asarray(pp, dtype=np.float64)
        dx = p[..., 0] - pp[..., 0]
        dy = p[..., 1] - pp[..., 1]
        return np.exp(-(dx * dx) / (2.0 * self.l1**2) - (dy * dy) / (2.0 * self.l2**2))

    def axis_kernels(self) -> tuple[Kernel1d, Kernel1d]:
        """Per-axis factors (unit amplitude, effective length sqrt(2) l)."""
        return (Kernel1d(1.0, np.sqrt(2.0) * self.l1), Kernel1d(1.0, np.sqrt(2.0) * self.l2))


def kernel_eval_1d(kernel: Kernel1d, x: float, xp: float) -> float:
    """Covariance between two scalar locations."""
    return float(kernel(x, xp))


def kernel_eval_2d(kernel: Kernel2d, p, pp) -> float:
    """Covariance between two planar locations (x, y)."""
    return float(kernel(np.asarray(p, dtype=np.float64), np.asarray(pp, dtype=np.float64)))


@dataclass(frozen=True)
class MeanFunction:
    """Closed-form mean functions used by the experiment configurations.

    * "zero":   0
    * "sine":   amplitude * sin(freq * x + phase) + offset          (1-d)
    * "sine2d": amplitude * (sin(freq * x) + sin(freq * y)) + offset (2-d)
    """

    tag: str
    amplitude: float = 1.0
    freq: float = 2.0 * np.pi
    phase: float = 0.0
    offset: float = 0.0

    _TAGS = ("zero", "sine", "sine2d")

    def __post_init__(self):
        if self.tag not in self._TAGS:
            raise ConfigError(f"unknown mean function tag {self.tag!r}; expected one of {self._TAGS}")

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        if self.tag == "zero":
            base = points[..., 0] if points.ndim > 1 else points
            return np.zeros_like(base)
        if self.tag == "sine":
            x = points[..., 0] if points.ndim > 1 else points
            return self.amplitude * np.sin(self.freq * x + self.phase) + self.offset
        x = points[..., 0]
        y = points[..., 1]
        return self.amplitude * (np.sin(self.freq * x) + np.sin(self.freq * y)) + self.offset

    def to_dict(self) -> dict:
        return {"tag": self.tag, "amplitude": self.amplitude, "freq": self.freq,
                "phase": self.phase, "offset": self.offset}

    @staticmethod
    def from_dict(d: dict) -> "MeanFunction":
        return MeanFunction(d["tag"], float(d.get("amplitude", 1.0)), float(d.get("freq", 2.0 * np.pi)),
                            float(d.get("phase", 0.0)), float(d.get("offset", 0.0)))


def gram_matrix(points: np.ndarray, kernel) -> np.ndarray:
    """K[i, j] = kernel(points[i], points[j]); exactly symmetric.

    Symmetry is bit-exact because entries depend on coordinate differences
    only through their squares.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        raise ContractError("gram_matrix needs at least one point")
    if points.ndim == 1:
        points = points[:, None]
    if isinstance(kernel, Kernel1d):
        return kernel(points[:, None, 0], points[None, :, 0])
    return kernel(points[:, None, :], points[None, :, :])


def cross_matrix(points_a: np.ndarray, points_b: np.ndarray, kernel) -> np.ndarray:
    """Rectangular covariance block K[i, j] = kernel(points_a[i], points_b[j])."""
    a = np.asarray(points_a, dtype=np.float64)
    b = np.asarray(points_b, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if isinstance(kernel, Kernel1d):
        return kernel(a[:, None, 0], b[None, :, 0])
    return kernel(a[:, None, :], b[None, :, :])


def cholesky_jitter(K: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L L^T = K + jitter * I.

    Tries jitter 0 first, then escalates 1e-12 -> 1e-6 by decades.  An
    all-zero matrix factors to zero exactly (the degenerate sigma = 0
    kernel).  Raises if the matrix is still not positive definite at the
    largest jitter.
    """
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    if not np.any(K):
        return np.zeros_like(K)
    for jitter in JITTER_LADDER:
        try:
            return np.linalg.cholesky(K + jitter * np.eye(n) if jitter else K)
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(
        f"{n}x{n} matrix is not positive semi-definite even at jitter {JITTER_LADDER[-1]:g}"
    )


def sample_gp(mean: MeanFunction, kernel, grid, n: int, seed: int) -> list[FieldSample]:
    """Draw n field realizations mu + L xi on the grid.

    Each sample uses its own generator derived from (seed, index), so the
    i-th sample is the same no matter how many are requested and sampling
    can be partitioned without changing results.
    """
    if isinstance(grid, Grid1d):
        pts = grid.points()
        mu = mean(pts)
        L = cholesky_jitter(gram_matrix(pts, kernel))
        out = []
        for i in range(n):
            xi = rngmod.normals(rngmod.derive(seed, "gp-sample", i), grid.n)
            out.append(FieldSample(grid, mu + L @ xi))
        return out
    if not isinstance(kernel, Kernel2d):
        raise ConfigError("2-d grids require a Kernel2d")
    mu = mean(grid.coords())
    kx, ky = kernel.axis_kernels()
    Lx = cholesky_jitter(gram_matrix(grid.xs(), kx))
    Ly = cholesky_jitter(gram_matrix(grid.ys(), ky))
    out = []
    for i in range(n):
        xi = rngmod.normals(rngmod.derive(seed, "gp-sample", i), (grid.nx, grid.ny))
        fluct = Lx @ xi @ Ly.T
        out.append(FieldSample(grid, mu + fluct.reshape(-1)))
    return out
