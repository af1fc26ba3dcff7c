"""Grids, gridded function samples, and sensor observation sets.

Conventions used package-wide: 1-d grids are equispaced and include both
endpoints; 2-d grids are tensor products of equispaced axes stored
row-major with y fastest, so flat index = ix * ny + iy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, ShapeError

__all__ = ["Grid1d", "Grid2d", "FieldSample", "SensorSet", "grid_from_dict"]


@dataclass(frozen=True)
class Grid1d:
    """n equispaced points on [a, b], endpoints included."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"Grid1d needs at least 2 points, got {self.n}")
        if not self.b > self.a:
            raise ConfigError(f"Grid1d needs b > a, got [{self.a}, {self.b}]")

    @property
    def size(self) -> int:
        return self.n

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n)

    def coords(self) -> np.ndarray:
        """Points as an (n, 1) coordinate array."""
        return self.points()[:, None]

    def to_dict(self) -> dict:
        return {"kind": "grid1d", "a": self.a, "b": self.b, "n": self.n}


@dataclass(frozen=True)
class Grid2d:
    """nx-by-ny tensor grid on [x0, x1] x [y0, y1], row-major, y fastest."""

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ConfigError(f"Grid2d needs at least 2 points per axis, got {self.nx}x{self.ny}")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ConfigError("Grid2d needs x1 > x0 and y1 > y0")

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    def xs(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    def ys(self) -> np.ndarray:
        return np.linspace(self.y0, self.y1, self.ny)

    def coords(self) -> np.ndarray:
        """All grid points as an (nx*ny, 2) array in flat-index order."""
        xx, yy = np.meshgrid(self.xs(), self.ys(), indexing="ij")
        return np.column_stack([xx.reshape(-1), yy.reshape(-1)])

    def to_dict(self) -> dict:
        return {"kind": "grid2d", "x0": self.x0, "x1": self.x1, "y0": self.y0,
                "y1": self.y1, "nx": self.nx, "ny": self.ny}


def grid_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "grid1d":
        return Grid1d(float(d["a"]), float(d["b"]), int(d["n"]))
    if kind == "grid2d":
        return Grid2d(float(d["x0"]), float(d["x1"]), float(d["y0"]), float(d["y1"]),
                      int(d["nx"]), int(d["ny"]))
    raise ConfigError(f"unknown grid kind {kind!r}")


@dataclass
class FieldSample:
    """Function values on a grid, flat in the package-wide ordering."""

    grid: Grid1d | Grid2d
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if self.values.size != self.grid.size:
            raise ShapeError(
                f"field has {self.values.size} values for a grid of size {self.grid.size}"
            )

    def as_matrix(self) -> np.ndarray:
        """2-d fields reshaped to (nx, ny)."""
        if not isinstance(self.grid, Grid2d):
            raise ShapeError("as_matrix is only defined for 2-d fields")
        return self.values.reshape(self.grid.nx, self.grid.ny)

    def interp(self, locations: np.ndarray) -> np.ndarray:
        """Linear (1-d) or bilinear (2-d) interpolation at arbitrary points.

        `locations` is (m,) or (m, 1) for 1-d grids and (m, 2) for 2-d.
        Points are clamped to the grid's bounding box.
        """
        if isinstance(self.grid, Grid1d):
            x = np.asarray(locations, dtype=np.float64).reshape(-1)
            return np.interp(x, self.grid.points(), self.values)
        pts = np.asarray(locations, dtype=np.float64).reshape(-1, 2)
        g = self.grid
        fx = np.clip((pts[:, 0] - g.x0) / g.hx, 0.0, g.nx - 1.0)
        fy = np.clip((pts[:, 1] - g.y0) / g.hy, 0.0, g.ny - 1.0)
        ix = np.minimum(fx.astype(int), g.nx - 2)
        iy = np.minimum(fy.astype(int), g.ny - 2)
        tx = fx - ix
        ty = fy - iy
        v = self.values.reshape(g.nx, g.ny)
        return ((1 - tx) * (1 - ty) * v[ix, iy]
                + tx * (1 - ty) * v[ix + 1, iy]
                + (1 - tx) * ty * v[ix, iy + 1]
                + tx * ty * v[ix + 1, iy + 1])


class SensorSet:
    """Observation set of an input function: (location, value) pairs.

    Locations are (m, d) with d = 1 or 2; values are (m,).  Iteration
    order is not meaningful -- consumers that need a canonical order sort
    by location then value.
    """

    def __init__(self, locations: np.ndarray, values: np.ndarray):
        self.locations = np.asarray(locations, dtype=np.float64)
        if self.locations.ndim == 1:
            self.locations = self.locations[:, None]
        self.values = np.asarray(values, dtype=np.float64).reshape(-1)
        if self.locations.shape[0] != self.values.shape[0]:
            raise ShapeError(
                f"{self.locations.shape[0]} locations but {self.values.shape[0]} values"
            )
        if self.values.shape[0] < 1:
            raise ContractError("an observation set needs at least one sensor")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.locations.shape[1]

    def canonical_order(self) -> np.ndarray:
        """Index permutation sorting sensors by location (lexicographic), then value."""
        keys = [self.values] + [self.locations[:, d] for d in range(self.dim - 1, -1, -1)]
        return np.lexsort(keys)

    def sorted(self) -> "SensorSet":
        idx = self.canonical_order()
        return SensorSet(self.locations[idx], self.values[idx])
