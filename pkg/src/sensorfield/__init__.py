"""Roadside sensor array design and evaluation.

Analytic full/n-fold road-coverage thresholds for a periodic array of
sector-shaped sensors, a brute-force grid coverage oracle, and a seeded
traffic/occlusion simulator measuring detection completeness for vision,
radar, and radar+tracking pipelines.
"""

from .geometry import (
    SensorFieldConfig,
    EdgeAngles,
    IntersectionKind,
    IntersectionResult,
    InvalidConfigError,
    edge_angles,
    lower_line_line,
    lower_upper_line_arc,
    upper_arc_arc,
    lower_requirement,
    upper_requirement,
    covered_with_degree,
    min_range,
    max_rotation_alpha,
    coverage_threshold_range,
)

__version__ = "0.1.0"
