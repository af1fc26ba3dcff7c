"""Grid conventions, field interpolation, and sensor-set invariants."""

import numpy as np
import pytest

from opvae.errors import ConfigError, ContractError, ShapeError
from opvae.fields import FieldSample, Grid1d, Grid2d, SensorSet, grid_from_dict


class TestGrids:
    def test_1d_includes_endpoints(self):
        g = Grid1d(-1.0, 1.0, 5)
        np.testing.assert_allclose(g.points(), [-1.0, -0.5, 0.0, 0.5, 1.0])
        assert g.h == 0.5

    def test_2d_row_major_y_fastest(self):
        g = Grid2d(0.0, 1.0, 0.0, 2.0, 2, 3)
        pts = g.coords()
        # index = ix * ny + iy
        np.testing.assert_allclose(pts[0], [0.0, 0.0])
        np.testing.assert_allclose(pts[1], [0.0, 1.0])
        np.testing.assert_allclose(pts[2], [0.0, 2.0])
        np.testing.assert_allclose(pts[3], [1.0, 0.0])

    def test_invalid_grids(self):
        with pytest.raises(ConfigError):
            Grid1d(0.0, 1.0, 1)
        with pytest.raises(ConfigError):
            Grid1d(1.0, 0.0, 5)
        with pytest.raises(ConfigError):
            Grid2d(0.0, 1.0, 0.0, 1.0, 1, 5)

    def test_dict_round_trip(self):
        for g in (Grid1d(-1.0, 1.0, 7), Grid2d(0.0, 1.0, 0.0, 1.0, 4, 6)):
            assert grid_from_dict(g.to_dict()) == g


class TestFieldSample:
    def test_size_mismatch(self):
        with pytest.raises(ShapeError):
            FieldSample(Grid1d(0.0, 1.0, 4), np.zeros(5))

    def test_interp_1d_exact_on_linear_field(self):
        g = Grid1d(0.0, 1.0, 11)
        f = FieldSample(g, 2.0 * g.points() + 1.0)
        q = np.array([0.05, 0.333, 0.97])
        np.testing.assert_allclose(f.interp(q), 2.0 * q + 1.0, rtol=1e-14)

    def test_interp_1d_hits_grid_points(self):
        g = Grid1d(-1.0, 1.0, 9)
        vals = np.random.default_rng(0).normal(size=9)
        f = FieldSample(g, vals)
        np.testing.assert_allclose(f.interp(g.points()), vals, rtol=1e-14)

    def test_interp_2d_exact_on_bilinear_field(self):
        g = Grid2d(0.0, 1.0, 0.0, 1.0, 6, 6)
        pts = g.coords()
        vals = 3.0 * pts[:, 0] - 2.0 * pts[:, 1] + pts[:, 0] * pts[:, 1]
        f = FieldSample(g, vals)
        rng = np.random.default_rng(1)
        q = rng.uniform(0, 1, (20, 2))
        expected = 3.0 * q[:, 0] - 2.0 * q[:, 1] + q[:, 0] * q[:, 1]
        np.testing.assert_allclose(f.interp(q), expected, rtol=1e-12)

    def test_interp_2d_grid_points_exact(self):
        g = Grid2d(0.0, 1.0, 0.0, 1.0, 4, 5)
        vals = np.random.default_rng(2).normal(size=g.size)
        f = FieldSample(g, vals)
        np.testing.assert_allclose(f.interp(g.coords()), vals, rtol=1e-14)


class TestSensorSet:
    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            SensorSet(np.zeros((0, 1)), np.zeros(0))

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            SensorSet(np.zeros((3, 1)), np.zeros(2))

    def test_canonical_sort_by_location_then_value(self):
        locs = np.array([[0.5], [0.1], [0.5]])
        vals = np.array([2.0, 9.0, 1.0])
        s = SensorSet(locs, vals).sorted()
        np.testing.assert_array_equal(s.locations[:, 0], [0.1, 0.5, 0.5])
        np.testing.assert_array_equal(s.values, [9.0, 1.0, 2.0])

    def test_2d_lexicographic(self):
        locs = np.array([[0.5, 0.9], [0.5, 0.1], [0.2, 0.8]])
        s = SensorSet(locs, np.array([1.0, 2.0, 3.0])).sorted()
        np.testing.assert_array_equal(s.locations,
                                      [[0.2, 0.8], [0.5, 0.1], [0.5, 0.9]])
