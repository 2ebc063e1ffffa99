"""Closed-form sector-overlap geometry for a periodic roadside sensor array.

Identical sensors sit at (k * sensor_spacing_dpyl, 0) for integer k, each
observing a circular sector of radius ``range_r`` and opening angle
``opening_omega``, rotated by ``rotation_alpha`` (positive = anti-clockwise).
The road is the band  sensor_to_road_dsr <= y <= sensor_to_road_dsr +
road_width_droad.  A sector spans boresight angles -gamma .. +beta measured
from the +y axis toward +x, with beta = omega/2 + alpha and gamma =
omega/2 - alpha, so its straight edges are x = y*tan(beta) and
x = -y*tan(gamma).

Because the array is periodic, the road band is fully covered exactly when
two neighboring sectors overlap across it.  The overlap of two convex
sectors is convex, so the covered heights form one interval whose bottom is
an edge-edge or edge-arc crossing and whose top is an edge-arc or arc-arc
crossing.  The predicates below decide coverage by locating those crossings
in closed form; n-fold coverage follows by stretching the spacing to
n * sensor_spacing_dpyl.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

# Tolerance for the degenerate branch where a sector edge is parallel to the
# road (tan diverges): at or beyond it the edge-edge crossing height is the
# analytic limit 0.
ANGLE_EPS = 1e-12


class InvalidConfigError(ValueError):
    """Sensor-field parameters violate their constraints."""


def max_rotation_alpha(opening_omega: float) -> float:
    """Largest admissible rotation for a given opening angle."""
    return 0.5 * (math.pi - opening_omega)


@dataclass(frozen=True)
class SensorFieldConfig:
    """The six tunable parameters of the sensor array topology."""

    range_r: float
    opening_omega: float
    rotation_alpha: float
    sensor_to_road_dsr: float
    sensor_spacing_dpyl: float
    road_width_droad: float

    def violations(self) -> list[str]:
        """All violated parameter constraints, as human-readable messages."""
        out = []
        vals = [self.range_r, self.opening_omega, self.rotation_alpha,
                self.sensor_to_road_dsr, self.sensor_spacing_dpyl,
                self.road_width_droad]
        if not all(math.isfinite(v) for v in vals):
            out.append("all parameters must be finite numbers")
            return out
        if not 0.0 <= self.opening_omega <= math.pi:
            out.append("opening_omega: must satisfy 0 <= omega <= pi")
        else:
            limit = max_rotation_alpha(self.opening_omega)
            if abs(self.rotation_alpha) > limit + ANGLE_EPS:
                out.append("rotation_alpha: |alpha| must be <= (pi - omega)/2")
        if self.range_r < 0.0:
            out.append("range_r: must be >= 0")
        if self.sensor_spacing_dpyl <= 0.0:
            out.append("sensor_spacing_dpyl: must be > 0")
        if self.road_width_droad <= 0.0:
            out.append("road_width_droad: must be > 0")
        if self.sensor_to_road_dsr < 0.0:
            out.append("sensor_to_road_dsr: must be >= 0")
        return out

    def validate(self) -> "SensorFieldConfig":
        bad = self.violations()
        if bad:
            raise InvalidConfigError("; ".join(bad))
        return self

    @property
    def road_band(self) -> tuple[float, float]:
        lo = self.sensor_to_road_dsr
        return lo, lo + self.road_width_droad

    def with_max_rotation(self) -> "SensorFieldConfig":
        return replace(self, rotation_alpha=max_rotation_alpha(self.opening_omega))


@dataclass(frozen=True)
class EdgeAngles:
    """Angles of the two straight sector edges relative to the road normal."""

    beta: float
    gamma: float


class IntersectionKind(Enum):
    LINE_LINE = "line_line"
    LINE_ARC = "line_arc"
    ARC_ARC = "arc_arc"
    NONE = "none"


@dataclass(frozen=True)
class IntersectionResult:
    """Crossing heights of one pair of neighboring-sector boundary curves."""

    kind: IntersectionKind
    y_lower: float | None = None
    y_upper: float | None = None

    def __post_init__(self):
        if self.y_lower is not None and self.y_upper is not None:
            if self.y_lower > self.y_upper:
                raise ValueError("y_lower must not exceed y_upper")


def edge_angles(cfg: SensorFieldConfig) -> EdgeAngles:
    """Edge angles beta = omega/2 + alpha and gamma = omega/2 - alpha."""
    cfg.validate()
    half = 0.5 * cfg.opening_omega
    return EdgeAngles(beta=half + cfg.rotation_alpha, gamma=half - cfg.rotation_alpha)


def lower_line_line(cfg: SensorFieldConfig, spacing: float | None = None) -> float:
    """Height where the facing straight edges of two neighboring sectors cross.

    Returns spacing / (tan(beta) + tan(gamma)).  When either edge is parallel
    to the road (beta or gamma at pi/2 within ANGLE_EPS) the crossing height
    degenerates to its limit 0; with omega = 0 the edges are parallel and the
    result is +inf.
    """
    if spacing is None:
        spacing = cfg.sensor_spacing_dpyl
    ang = edge_angles(cfg)
    if max(ang.beta, ang.gamma) >= 0.5 * math.pi - ANGLE_EPS:
        return 0.0
    denom = math.tan(ang.beta) + math.tan(ang.gamma)
    if denom <= 0.0:
        return math.inf
    return spacing / denom


def _line_line_reach(cfg: SensorFieldConfig, spacing: float) -> float:
    """Distance from the farther sensor to the edge-edge crossing point.

    Algebraically equal to lower_line_line / cos(omega/2 + |alpha|), rewritten
    as spacing * cos(omega/2 - |alpha|) / sin(omega) so it stays finite when
    the steeper edge reaches pi/2.  At omega = pi both edges lie on the
    baseline and the overlap starts at y = 0 exactly when the arcs meet,
    i.e. at reach spacing/2; at omega = 0 the edges never cross.
    """
    w = cfg.opening_omega
    if w >= math.pi - ANGLE_EPS:
        return 0.5 * spacing
    if w <= ANGLE_EPS:
        return math.inf
    half_diff = 0.5 * w - abs(cfg.rotation_alpha)
    return spacing * math.cos(half_diff) / math.sin(w)


def _line_arc_parts(cfg: SensorFieldConfig, spacing: float):
    """Shared pieces of the edge-arc crossing: (theta, along_lo, along_hi).

    ``along_lo``/``along_hi`` are the crossing distances measured along the
    edge line, i.e. y_-/cos(theta) and y_+/cos(theta) in a form that has no
    0/0 at theta = pi/2.  Returns None when the arc misses the line
    (r < spacing * cos(theta)).
    """
    theta = 0.5 * cfg.opening_omega - abs(cfg.rotation_alpha)
    c = math.cos(theta)
    disc = cfg.range_r * cfg.range_r - spacing * spacing * c * c
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    base = spacing * math.sin(theta)
    return theta, base - root, base + root


def lower_upper_line_arc(
    cfg: SensorFieldConfig, spacing: float | None = None
) -> tuple[float, float] | None:
    """Both heights where one sector's range arc crosses the neighbor's edge.

    With theta = omega/2 - |alpha| the solutions are
    y_± = cos(theta) * (spacing*sin(theta) ± sqrt(r^2 - spacing^2*cos^2(theta)));
    returns None when r < spacing*cos(theta) and no crossing exists.
    """
    if spacing is None:
        spacing = cfg.sensor_spacing_dpyl
    parts = _line_arc_parts(cfg, spacing)
    if parts is None:
        return None
    theta, along_lo, along_hi = parts
    c = math.cos(theta)
    return c * along_lo, c * along_hi


def _arc_arc_applicable(cfg: SensorFieldConfig, spacing: float) -> bool:
    """Whether the range arcs of neighboring sectors cross inside both sectors.

    Needs the arcs to reach each other (r >= spacing/2) and the opening to be
    wide enough that neither straight edge clips the crossing.  The crossing
    sits midway between the sensors at distance r from each, i.e. at angle
    arcsin(spacing/(2r)) off the road normal, so the clipping condition on
    the flatter edge is omega/2 - |alpha| >= arcsin(spacing/(2r)).
    """
    r = cfg.range_r
    if r < 0.5 * spacing:
        return False
    theta = 0.5 * cfg.opening_omega - abs(cfg.rotation_alpha)
    return theta >= math.asin(min(1.0, 0.5 * spacing / r))


def upper_arc_arc(cfg: SensorFieldConfig, spacing: float | None = None) -> float | None:
    """Height where the range arcs of two neighboring sectors cross.

    Returns sqrt(r^2 - (spacing/2)^2) when the crossing exists and lies
    inside both sectors' angular spans; None otherwise.
    """
    if spacing is None:
        spacing = cfg.sensor_spacing_dpyl
    if not _arc_arc_applicable(cfg, spacing):
        return None
    r = cfg.range_r
    return math.sqrt(r * r - 0.25 * spacing * spacing)


def _clamped_acos(value: float) -> float:
    return math.acos(min(1.0, max(-1.0, value)))


def lower_requirement(cfg: SensorFieldConfig, spacing: float | None = None) -> bool:
    """True when the overlap corridor of neighboring sectors reaches down to
    the near road boundary.

    Edge-edge branch: y_min <= d_sr, provided the crossing is within range of
    both sensors.  Otherwise edge-arc branch: y_- <= d_sr, provided the
    crossing lies on both sectors' boundaries
    (omega/2 + |alpha| >= arccos(y_-/r) and
    r >= max(y_-/cos(omega/2-|alpha|), spacing*cos(omega/2-|alpha|))).
    """
    if spacing is None:
        spacing = cfg.sensor_spacing_dpyl
    d_sr = cfg.sensor_to_road_dsr
    r = cfg.range_r
    if r >= _line_line_reach(cfg, spacing):
        return lower_line_line(cfg, spacing) <= d_sr
    parts = _line_arc_parts(cfg, spacing)
    if parts is None:
        return False
    theta, along_lo, _ = parts
    y_lo = math.cos(theta) * along_lo
    if y_lo > d_sr:
        return False
    if r < max(along_lo, spacing * math.cos(theta)):
        return False
    if r <= 0.0:
        return False
    steep_edge = 0.5 * cfg.opening_omega + abs(cfg.rotation_alpha)
    return steep_edge >= _clamped_acos(y_lo / r)


def upper_requirement(cfg: SensorFieldConfig, spacing: float | None = None) -> bool:
    """True when the overlap corridor of neighboring sectors reaches up to
    the far road boundary.

    Arc-arc branch: y_max >= d_sr + d_road when the arcs cross unclipped by
    the edges; otherwise edge-arc branch: y_+ >= d_sr + d_road with the same
    reach conditions as the lower edge-arc branch, applied to y_+.
    """
    if spacing is None:
        spacing = cfg.sensor_spacing_dpyl
    target = cfg.sensor_to_road_dsr + cfg.road_width_droad
    r = cfg.range_r
    theta = 0.5 * cfg.opening_omega - abs(cfg.rotation_alpha)
    if _arc_arc_applicable(cfg, spacing):
        return math.sqrt(r * r - 0.25 * spacing * spacing) >= target
    parts = _line_arc_parts(cfg, spacing)
    if parts is None:
        return False
    _, _, along_hi = parts
    y_hi = math.cos(theta) * along_hi
    if y_hi < target:
        return False
    if r < max(along_hi, spacing * math.cos(theta)):
        return False
    steep_edge = 0.5 * cfg.opening_omega + abs(cfg.rotation_alpha)
    return steep_edge >= _clamped_acos(y_hi / r)


def covered_with_degree(cfg: SensorFieldConfig, n: int = 1) -> bool:
    """True when every road point lies in the sector of at least n sensors.

    Equivalent to full coverage by sensors that are n-th nearest neighbors,
    i.e. the pair requirements evaluated at spacing n * sensor_spacing_dpyl.
    """
    if n < 1:
        raise ValueError("coverage degree n must be a positive integer")
    spacing = n * cfg.sensor_spacing_dpyl
    return lower_requirement(cfg, spacing) and upper_requirement(cfg, spacing)


def min_range(cfg: SensorFieldConfig) -> float:
    """Smallest range that can possibly give full coverage at this spacing.

    The road point farthest from any sensor sits midway between two sensors
    on the far boundary: r_min = sqrt((d_pyl/2)^2 + (d_sr + d_road)^2).
    """
    half = 0.5 * cfg.sensor_spacing_dpyl
    far = cfg.sensor_to_road_dsr + cfg.road_width_droad
    return math.hypot(half, far)


def coverage_threshold_range(
    cfg: SensorFieldConfig, n: int = 1, r_max: float = 1000.0, tol: float = 1e-9
) -> float:
    """Boundary range r*(omega, n): coverage of degree n holds iff r >= r*.

    Coverage is monotone in r (a larger sector contains the smaller one), so
    the threshold is found by bisection.  Returns +inf when even ``r_max``
    does not cover.
    """
    hi = r_max
    if not covered_with_degree(replace(cfg, range_r=hi), n):
        return math.inf
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if covered_with_degree(replace(cfg, range_r=mid), n):
            hi = mid
        else:
            lo = mid
    return hi


def line_line_result(cfg: SensorFieldConfig, spacing: float | None = None) -> IntersectionResult:
    y = lower_line_line(cfg, spacing)
    if not math.isfinite(y):
        return IntersectionResult(IntersectionKind.NONE)
    return IntersectionResult(IntersectionKind.LINE_LINE, y_lower=y)


def line_arc_result(cfg: SensorFieldConfig, spacing: float | None = None) -> IntersectionResult:
    sol = lower_upper_line_arc(cfg, spacing)
    if sol is None:
        return IntersectionResult(IntersectionKind.NONE)
    return IntersectionResult(IntersectionKind.LINE_ARC, y_lower=sol[0], y_upper=sol[1])


def arc_arc_result(cfg: SensorFieldConfig, spacing: float | None = None) -> IntersectionResult:
    y = upper_arc_arc(cfg, spacing)
    if y is None:
        return IntersectionResult(IntersectionKind.NONE)
    return IntersectionResult(IntersectionKind.ARC_ARC, y_upper=y)


def sector_pair_intersections(
    cfg: SensorFieldConfig, spacing: float | None = None
) -> list[IntersectionResult]:
    """All boundary-curve crossings of a neighboring sector pair, classified."""
    return [
        line_line_result(cfg, spacing),
        line_arc_result(cfg, spacing),
        arc_arc_result(cfg, spacing),
    ]
