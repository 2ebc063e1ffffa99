import math
from dataclasses import replace

import numpy as np
import pytest

from sensorfield.geometry import (
    ANGLE_EPS,
    EdgeAngles,
    IntersectionKind,
    IntersectionResult,
    InvalidConfigError,
    SensorFieldConfig,
    covered_with_degree,
    coverage_threshold_range,
    edge_angles,
    lower_line_line,
    lower_requirement,
    lower_upper_line_arc,
    max_rotation_alpha,
    min_range,
    sector_pair_intersections,
    upper_arc_arc,
    upper_requirement,
)

import oracles
from conftest import fig_params


def make_cfg(omega, alpha, r=100.0, d_sr=0.5, d_pyl=50.0, d_road=14.0):
    return SensorFieldConfig(
        range_r=r,
        opening_omega=omega,
        rotation_alpha=alpha,
        sensor_to_road_dsr=d_sr,
        sensor_spacing_dpyl=d_pyl,
        road_width_droad=d_road,
    )


def random_cfg(rng, omega_lo=0.05, omega_hi=math.pi - 1e-3, alpha_scale=0.995):
    omega = rng.uniform(omega_lo, omega_hi)
    alpha = rng.uniform(-alpha_scale, alpha_scale) * max_rotation_alpha(omega)
    return make_cfg(
        omega,
        alpha,
        r=rng.uniform(1.0, 200.0),
        d_sr=rng.uniform(0.0, 3.0),
        d_pyl=rng.uniform(5.0, 120.0),
        d_road=rng.uniform(3.0, 25.0),
    )


class TestConfig:
    def test_valid(self):
        make_cfg(math.pi / 2, 0.0).validate()

    def test_rotation_bound_rejected(self):
        cfg = make_cfg(math.pi / 3, math.pi / 2)
        with pytest.raises(InvalidConfigError):
            cfg.validate()
        assert any("rotation_alpha" in v for v in cfg.violations())

    def test_omega_bounds(self):
        assert any("opening_omega" in v for v in make_cfg(3.5, 0.0).violations())
        assert any("opening_omega" in v for v in make_cfg(-0.1, 0.0).violations())

    def test_zero_range_allowed(self):
        # degenerate but usable: produces an all-zero coverage grid
        make_cfg(math.pi / 2, 0.0, r=0.0).validate()

    def test_negative_spacing_rejected(self):
        assert make_cfg(1.0, 0.0, d_pyl=-1.0).violations()


class TestEdgeAngles:
    def test_symmetric(self):
        ang = edge_angles(make_cfg(math.pi / 2, 0.0))
        assert ang == EdgeAngles(math.pi / 4, math.pi / 4)

    def test_max_rotation(self):
        ang = edge_angles(make_cfg(math.pi / 3, math.pi / 3))
        assert ang.beta == pytest.approx(math.pi / 2, abs=1e-15)
        assert ang.gamma == pytest.approx(-math.pi / 6, abs=1e-15)

    def test_direct_evaluation(self):
        ang = edge_angles(make_cfg(math.pi / 3, math.pi / 6))
        assert ang.beta == pytest.approx(math.pi / 3, abs=1e-15)
        assert ang.gamma == pytest.approx(0.0, abs=1e-15)

    def test_invalid_config_raises(self):
        with pytest.raises(InvalidConfigError):
            edge_angles(make_cfg(math.pi / 3, math.pi / 2))


class TestLowerLineLine:
    def test_symmetric_case(self):
        assert lower_line_line(make_cfg(math.pi / 2, 0.0), 50.0) == pytest.approx(25.0)

    def test_edge_parallel_limit(self):
        assert lower_line_line(make_cfg(math.pi / 3, math.pi / 3), 50.0) == 0.0

    def test_tilted(self):
        # 50/tan(pi/3), cross-checked by the 2-line oracle
        y = lower_line_line(make_cfg(math.pi / 3, math.pi / 6), 50.0)
        assert y == pytest.approx(28.867513459481298, abs=1e-12)
        assert y == pytest.approx(oracles.line_line_height(math.pi / 3, 0.0, 50.0), abs=1e-9)

    def test_limit_at_max_rotation(self):
        # the crossing height drops to 0 exactly at alpha = (pi - omega)/2
        rng = np.random.default_rng(7)
        for _ in range(50):
            omega = rng.uniform(0.05, math.pi)
            cfg = make_cfg(omega, max_rotation_alpha(omega))
            assert lower_line_line(cfg) < 1e-6

    def test_finite_positive_for_interior_angles(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            cfg = random_cfg(rng)
            y = lower_line_line(cfg)
            assert y >= 0.0
            assert math.isfinite(y)


class TestLineArc:
    def test_straight_edge_collapses_to_chord(self):
        # theta = 0: solutions are +-sqrt(r^2 - spacing^2)
        sol = lower_upper_line_arc(make_cfg(math.pi / 3, math.pi / 6, r=60.0), 50.0)
        assert sol is not None
        assert sol[0] == pytest.approx(-33.166247903554, abs=1e-9)
        assert sol[1] == pytest.approx(33.166247903554, abs=1e-9)

    def test_tilted_line(self):
        # theta = pi/6 via omega = pi/3, alpha = 0
        sol = lower_upper_line_arc(make_cfg(math.pi / 3, 0.0, r=45.0), 50.0)
        assert sol is not None
        assert sol[0] == pytest.approx(11.04403337681276, abs=1e-9)
        assert sol[1] == pytest.approx(32.257236812409175, abs=1e-9)
        numeric = oracles.line_arc_heights(math.pi / 6, 50.0, 45.0)
        assert sol[0] == pytest.approx(numeric[0], abs=1e-9)
        assert sol[1] == pytest.approx(numeric[1], abs=1e-9)

    def test_no_crossing(self):
        # 50*cos(pi/6) ~ 43.3 > 40
        assert lower_upper_line_arc(make_cfg(math.pi / 3, 0.0, r=40.0), 50.0) is None


class TestArcArc:
    def test_half_disks(self):
        y = upper_arc_arc(make_cfg(math.pi, 0.0, r=30.0), 50.0)
        assert y == pytest.approx(16.583123951777, abs=1e-9)
        assert y == pytest.approx(oracles.circle_circle_upper_height(30.0, 50.0), abs=1e-9)

    def test_tangent_circles(self):
        assert upper_arc_arc(make_cfg(math.pi, 0.0, r=25.0), 50.0) == pytest.approx(0.0, abs=1e-9)

    def test_out_of_reach(self):
        assert upper_arc_arc(make_cfg(math.pi, 0.0, r=20.0), 50.0) is None

    def test_narrow_opening_clipped(self):
        # edges clip the crossing before the arcs meet
        assert upper_arc_arc(make_cfg(math.radians(30), 0.0, r=40.0), 50.0) is None


class TestRequirements:
    def test_max_rotation_band(self, fig_config):
        # crossing height 0 in the max-rotation regime, within reach at r=100
        assert lower_requirement(fig_config(math.radians(60), 100.0), 50.0)

    def test_uncovered_strip_near_sensors(self):
        # y_min = 25 > 0.5 and the edge-arc branch is not applicable at r=100
        assert not lower_requirement(make_cfg(math.pi / 2, 0.0, r=100.0), 50.0)

    def test_boundary_inclusive(self):
        cfg = make_cfg(math.pi / 2, 0.0, r=100.0, d_sr=25.0, d_road=5.0)
        y_min = lower_line_line(cfg, 50.0)
        assert y_min == pytest.approx(25.0)
        cfg = replace(cfg, sensor_to_road_dsr=y_min)  # d_sr equals y_min exactly
        assert lower_requirement(cfg, 50.0)

    def test_upper_arc_arc_branch(self):
        cfg = make_cfg(math.pi, 0.0, r=30.0, d_sr=0.5, d_road=14.0)
        assert upper_arc_arc(cfg, 50.0) == pytest.approx(16.583123951777)
        assert upper_requirement(cfg, 50.0)
        assert not upper_requirement(replace(cfg, range_r=25.0), 50.0)

    def test_upper_no_intersection(self):
        cfg = make_cfg(math.radians(30), 0.0, r=20.0)
        assert lower_upper_line_arc(cfg, 50.0) is None
        assert not upper_requirement(cfg, 50.0)


class TestCoverage:
    def test_fig_region_point(self, fig_config):
        assert covered_with_degree(fig_config(math.radians(120), 100.0), 1)

    def test_below_min_range(self, fig_config):
        rng = np.random.default_rng(3)
        for _ in range(100):
            omega = rng.uniform(0.05, math.pi)
            cfg = fig_params(omega, rng.uniform(1.0, 28.9))
            assert cfg.range_r < min_range(cfg)
            assert not covered_with_degree(cfg, 1)

    def test_monotone_in_degree(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            cfg = random_cfg(rng)
            states = [covered_with_degree(cfg, n) for n in (1, 2, 3, 4)]
            for a, b in zip(states, states[1:]):
                assert a or not b  # covered at n+1 implies covered at n

    def test_monotone_in_range(self):
        rng = np.random.default_rng(6)
        for _ in range(300):
            cfg = random_cfg(rng)
            r_small, r_big = sorted(rng.uniform(1.0, 200.0, size=2))
            small = covered_with_degree(replace(cfg, range_r=r_small), 1)
            big = covered_with_degree(replace(cfg, range_r=r_big), 1)
            assert big or not small  # growing the sector never destroys coverage

    def test_threshold_range_consistent(self, fig_config):
        for omega_deg in (60, 120, 180):
            cfg = fig_params(math.radians(omega_deg), 10.0)
            r_star = coverage_threshold_range(cfg, 1)
            assert not covered_with_degree(replace(cfg, range_r=r_star - 1e-6), 1)
            assert covered_with_degree(replace(cfg, range_r=r_star + 1e-6), 1)


class TestMinRange:
    def test_fig_value(self, fig_config):
        assert min_range(fig_params(1.0, 10.0)) == pytest.approx(28.90069203323685, abs=1e-9)

    def test_degenerate_spacing(self):
        cfg = make_cfg(1.0, 0.0, d_pyl=1e-9, d_sr=0.5, d_road=14.0)
        assert min_range(cfg) == pytest.approx(14.5, abs=1e-6)

    def test_zero_width_limit(self):
        cfg = make_cfg(1.0, 0.0, d_pyl=50.0, d_sr=0.0, d_road=1e-12)
        assert min_range(cfg) == pytest.approx(25.0, abs=1e-9)

    def test_no_coverage_below(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            cfg = random_cfg(rng)
            below = replace(cfg, range_r=min_range(cfg) * rng.uniform(0.0, 0.999))
            assert not covered_with_degree(below, 1)


class TestIntersectionResults:
    def test_kinds(self):
        cfg = make_cfg(math.pi / 3, 0.0, r=45.0)
        kinds = {res.kind for res in sector_pair_intersections(cfg, 50.0)}
        assert IntersectionKind.LINE_LINE in kinds
        assert IntersectionKind.LINE_ARC in kinds

    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            IntersectionResult(IntersectionKind.LINE_ARC, y_lower=2.0, y_upper=1.0)

    def test_line_arc_ordering_holds(self):
        rng = np.random.default_rng(13)
        for _ in range(300):
            cfg = random_cfg(rng)
            for res in sector_pair_intersections(cfg):
                if res.y_lower is not None and res.y_upper is not None:
                    assert res.y_lower <= res.y_upper


class TestNumericOracleAgreement:
    def test_all_intersections_within_1e9(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(2000):
            cfg = random_cfg(rng)
            spacing = cfg.sensor_spacing_dpyl
            ang = edge_angles(cfg)
            if max(ang.beta, ang.gamma) < 0.5 * math.pi - 1e-6:
                y = lower_line_line(cfg, spacing)
                y_ref = oracles.line_line_height(ang.beta, ang.gamma, spacing)
                worst = max(worst, abs(y - y_ref))
            sol = lower_upper_line_arc(cfg, spacing)
            if sol is not None and cfg.range_r > spacing * math.cos(
                0.5 * cfg.opening_omega - abs(cfg.rotation_alpha)
            ) + 1e-6:
                theta = 0.5 * cfg.opening_omega - abs(cfg.rotation_alpha)
                ref = oracles.line_arc_heights(theta, spacing, cfg.range_r)
                worst = max(worst, abs(sol[0] - ref[0]), abs(sol[1] - ref[1]))
            y_max = upper_arc_arc(cfg, spacing)
            if y_max is not None and cfg.range_r > 0.5 * spacing + 1e-6:
                ref = oracles.circle_circle_upper_height(cfg.range_r, spacing)
                worst = max(worst, abs(y_max - ref))
        assert worst < 1e-9
