"""Brute-force grid oracle for road coverage and (omega, r) boundary sweeps.

Counts, at sampled cell centers, how many sensors of the periodic array see
each point.  One period cell in x suffices because the array repeats every
``sensor_spacing_dpyl`` meters.  Serves as the numerical cross-check for the
closed-form predicates in :mod:`sensorfield.geometry`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    SensorFieldConfig,
    coverage_threshold_range,
    covered_with_degree,
    edge_angles,
    max_rotation_alpha,
)

DEFAULT_CELL_SIZE = 0.25

ALPHA_RULES = ("fixed", "max_rotation")


def _resolve_alpha(cfg_base: SensorFieldConfig, omega: float, rule: str) -> float:
    if rule == "max_rotation":
        return max_rotation_alpha(omega)
    if rule == "fixed":
        return cfg_base.rotation_alpha
    raise ValueError(f"unknown alpha rule {rule!r}; expected one of {ALPHA_RULES}")


def _degrees_at(px: np.ndarray, py: np.ndarray, cfg: SensorFieldConfig) -> np.ndarray:
    """Coverage degree at arbitrary points, vectorized.

    The sensor window is centered on each point's nearest sensor index and
    extends ceil(r/d_pyl)+1 either way, so truncation cannot drop a sensor
    that could reach the point.
    """
    d = cfg.sensor_spacing_dpyl
    ang = edge_angles(cfg)
    m = int(math.ceil(cfg.range_r / d)) + 1
    k0 = np.floor(px / d + 0.5).astype(np.int64)
    ks = k0[:, None] + np.arange(-m, m + 1)[None, :]
    dx = px[:, None] - ks * d
    py_col = py[:, None]
    inside = dx * dx + py_col * py_col <= cfg.range_r * cfg.range_r
    phi = np.arctan2(dx, py_col)
    inside &= (phi >= -ang.gamma) & (phi <= ang.beta)
    return inside.sum(axis=1).astype(np.int64)


def point_coverage_degree(point: Sequence[float], cfg: SensorFieldConfig) -> int:
    """Number of sensors whose sector contains the given point."""
    px = np.asarray([point[0]], dtype=float)
    py = np.asarray([point[1]], dtype=float)
    if not (np.isfinite(px).all() and np.isfinite(py).all()):
        raise ValueError("point must be finite")
    return int(_degrees_at(px, py, cfg)[0])


@dataclass(frozen=True)
class CoverageGrid:
    """Coverage degree sampled at cell centers of one spatial period.

    ``degrees[i, j]`` is the degree at x = origin[0] + (i+0.5)*cell_size,
    y = origin[1] + (j+0.5)*cell_size; x spans [0, d_pyl), y spans the road
    band.
    """

    cell_size: float
    origin: tuple[float, float]
    degrees: np.ndarray

    @property
    def min_degree(self) -> int:
        return int(self.degrees.min())

    def x_centers(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.degrees.shape[0]) + 0.5) * self.cell_size

    def y_centers(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.degrees.shape[1]) + 0.5) * self.cell_size


def build_grid(cfg: SensorFieldConfig, cell_size: float = DEFAULT_CELL_SIZE) -> CoverageGrid:
    """Fill one period cell of the road band with coverage degrees."""
    cfg.validate()
    if cell_size <= 0.0:
        raise ValueError("cell_size must be > 0")
    if cell_size > cfg.road_width_droad:
        raise ValueError("cell_size larger than road width")
    nx = int(math.ceil(cfg.sensor_spacing_dpyl / cell_size - 1e-9))
    ny = int(math.ceil(cfg.road_width_droad / cell_size - 1e-9))
    xs = (np.arange(nx) + 0.5) * cell_size
    ys = cfg.sensor_to_road_dsr + (np.arange(ny) + 0.5) * cell_size
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    deg = _degrees_at(xx.ravel(), yy.ravel(), cfg).reshape(nx, ny)
    return CoverageGrid(cell_size=cell_size, origin=(0.0, cfg.sensor_to_road_dsr), degrees=deg)


@dataclass(frozen=True)
class BoundarySweepRow:
    """One (omega, r) sample: analytic coverage per degree vs grid minimum."""

    omega: float
    r: float
    alpha: float
    analytic: tuple[bool, ...]
    numeric_min_degree: int


def boundary_sweep(
    param_grid: Iterable[tuple[float, float]],
    cfg_base: SensorFieldConfig,
    n_max: int = 3,
    cell_size: float = DEFAULT_CELL_SIZE,
    alpha_rule: str = "max_rotation",
) -> list[BoundarySweepRow]:
    """Analytic predicates and grid-oracle minimum degree over (omega, r) samples."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    rows = []
    for omega, r in param_grid:
        cfg = replace(
            cfg_base,
            opening_omega=omega,
            range_r=r,
            rotation_alpha=_resolve_alpha(cfg_base, omega, alpha_rule),
        ).validate()
        analytic = tuple(covered_with_degree(cfg, n) for n in range(1, n_max + 1))
        numeric = build_grid(cfg, cell_size).min_degree
        rows.append(BoundarySweepRow(omega, r, cfg.rotation_alpha, analytic, numeric))
    return rows


@dataclass(frozen=True)
class BoundaryMismatch:
    omega: float
    r: float
    degree: int
    analytic: bool
    numeric: bool
    boundary_distance: float


def boundary_mismatches(
    rows: Iterable[BoundarySweepRow],
    cfg_base: SensorFieldConfig,
    alpha_rule: str = "max_rotation",
    r_max: float = 1000.0,
) -> list[BoundaryMismatch]:
    """Analytic/numeric disagreements with their distance to the analytic
    threshold range r*(omega, n)."""
    out = []
    threshold_cache: dict[tuple[float, int], float] = {}
    for row in rows:
        for n_idx, analytic in enumerate(row.analytic, start=1):
            numeric = row.numeric_min_degree >= n_idx
            if analytic == numeric:
                continue
            key = (row.omega, n_idx)
            if key not in threshold_cache:
                cfg = replace(
                    cfg_base,
                    opening_omega=row.omega,
                    rotation_alpha=_resolve_alpha(cfg_base, row.omega, alpha_rule),
                )
                threshold_cache[key] = coverage_threshold_range(cfg, n_idx, r_max=r_max)
            dist = abs(row.r - threshold_cache[key])
            out.append(BoundaryMismatch(row.omega, row.r, n_idx, analytic, numeric, dist))
    return out
