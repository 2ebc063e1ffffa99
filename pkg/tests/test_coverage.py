import math
from dataclasses import replace

import numpy as np
import pytest

from sensorfield.coverage import (
    BoundarySweepRow,
    boundary_mismatches,
    boundary_sweep,
    build_grid,
    point_coverage_degree,
)
from sensorfield.geometry import SensorFieldConfig, covered_with_degree, min_range

from conftest import fig_params


def make_cfg(omega, alpha, r=100.0, d_sr=0.5, d_pyl=50.0, d_road=14.0):
    return SensorFieldConfig(r, omega, alpha, d_sr, d_pyl, d_road)


class TestPointDegree:
    def test_boresight_point(self):
        cfg = make_cfg(math.pi, 0.0, r=10.0)
        assert point_coverage_degree((0.0, 0.5), cfg) >= 1

    def test_beyond_reach(self):
        cfg = make_cfg(math.pi, 0.0, r=10.0, d_road=5.0)
        assert point_coverage_degree((0.0, 30.0), cfg) == 0

    def test_matches_analytic_predicate(self, fig_config):
        cfg = fig_params(math.radians(60), 40.0)
        grid = build_grid(cfg, 0.25)
        assert (grid.min_degree >= 1) == covered_with_degree(cfg, 1)

    def test_periodicity(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            omega = rng.uniform(0.1, math.pi)
            cfg = make_cfg(omega, rng.uniform(-1, 1) * 0.5 * (math.pi - omega),
                           r=rng.uniform(5, 150))
            x = rng.uniform(-300.0, 300.0)
            y = rng.uniform(0.5, 14.5)
            d1 = point_coverage_degree((x, y), cfg)
            d2 = point_coverage_degree((x + cfg.sensor_spacing_dpyl, y), cfg)
            assert d1 == d2


class TestBuildGrid:
    def test_fig_shape(self, fig_config):
        grid = build_grid(fig_params(math.radians(60), 40.0), 0.25)
        assert grid.degrees.shape == (200, 56)

    def test_single_row(self):
        cfg = make_cfg(math.pi / 2, 0.0)
        grid = build_grid(cfg, cfg.road_width_droad)
        assert grid.degrees.shape[1] == 1

    def test_zero_range_all_zero(self):
        grid = build_grid(make_cfg(math.pi / 2, 0.0, r=0.0), 0.5)
        assert grid.min_degree == 0
        assert grid.degrees.max() == 0

    def test_cell_size_too_large(self):
        with pytest.raises(ValueError, match="road width"):
            build_grid(make_cfg(math.pi / 2, 0.0), 15.0)

    def test_cell_size_positive(self):
        with pytest.raises(ValueError):
            build_grid(make_cfg(math.pi / 2, 0.0), 0.0)

    def test_degrees_match_point_oracle(self):
        cfg = make_cfg(math.radians(100), 0.2, r=35.0)
        grid = build_grid(cfg, 1.0)
        xs, ys = grid.x_centers(), grid.y_centers()
        rng = np.random.default_rng(23)
        for _ in range(50):
            i = rng.integers(len(xs))
            j = rng.integers(len(ys))
            assert grid.degrees[i, j] == point_coverage_degree((xs[i], ys[j]), cfg)


class TestBoundarySweep:
    def test_rows_match_direct_calls(self, fig_config):
        pts = [(math.radians(60), 40.0), (math.radians(180), 30.0)]
        rows = boundary_sweep(pts, fig_params(1.0, 10.0), n_max=2)
        assert len(rows) == 2
        for (omega, r), row in zip(pts, rows):
            cfg = fig_params(omega, r)
            assert row.analytic == tuple(covered_with_degree(cfg, n) for n in (1, 2))
            assert row.numeric_min_degree == build_grid(cfg).min_degree

    def test_region_tip_near_min_range(self, fig_config):
        # half-disk sensors: coverage begins just above the minimum range
        base = fig_params(1.0, 10.0)
        r_min = min_range(base)
        rows = boundary_sweep([(math.pi, r_min + 0.5)], base, n_max=1)
        assert rows[0].analytic == (True,)

    def test_below_min_range_false(self, fig_config):
        rows = boundary_sweep([(math.radians(90), 20.0)], fig_params(1.0, 10.0))
        assert rows[0].analytic == (False, False, False)
        assert rows[0].numeric_min_degree == 0

    def test_three_analytic_columns(self, fig_config):
        rows = boundary_sweep([(math.radians(120), 100.0)], fig_params(1.0, 10.0), n_max=3)
        assert len(rows[0].analytic) == 3

    def test_mismatches_only_near_boundary(self, fig_config):
        base = fig_params(1.0, 10.0)
        pts = [(math.radians(wd), float(r)) for wd in (40, 90, 140) for r in range(10, 110, 20)]
        rows = boundary_sweep(pts, base)
        for mm in boundary_mismatches(rows, base):
            assert mm.boundary_distance <= 0.25 * math.sqrt(2.0)

    def test_analytic_true_implies_numeric(self, fig_config):
        # away from the threshold, analytic coverage guarantees every cell center
        base = fig_params(1.0, 10.0)
        pts = [(math.radians(wd), float(r)) for wd in (80, 160) for r in (40, 70, 100)]
        for row in boundary_sweep(pts, base):
            for n_idx, analytic in enumerate(row.analytic, start=1):
                if analytic:
                    assert row.numeric_min_degree >= n_idx
