"""Line-of-sight occlusion engine and generic radar detection generator.

Visibility model: a vehicle's bounding rectangle is sampled along its
perimeter at ``cell_size`` spacing; the vehicle is visible to a sensor when
at least one cell center lies inside the sensor sector and the open segment
from sensor to cell center crosses no vehicle interior (including the
target's own body, which shadows its far side).

Radar model: one point detection per resolved object.  Reference points of
unoccluded vehicles that fall into the same polar resolution bin (1 m range
by omega/12 azimuth) merge into a single detection kept at the nearest
member; detections get polar Gaussian noise of half a resolution in each
coordinate, and false alarms arrive as a Poisson stream over the resolution
cells, uniformly placed in the sector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .geometry import SensorFieldConfig, edge_angles

AZIMUTH_BIN_COUNT = 12  # fixed antenna count; azimuth resolution is omega/12

_EPS = 1e-9


@dataclass(frozen=True)
class LosModel:
    """Perimeter sampling resolution of the visibility test."""

    cell_size: float = 0.05

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell_size must be > 0")


@dataclass(frozen=True)
class RadarModel:
    """Resolution and noise parameters of the generic radar generator.

    ``rcs`` is carried as the constant per-vehicle reflectivity; detection is
    deterministic given visibility, so it does not influence the outcome.
    A ``false_alarm_rate`` of 0 disables false alarms; ``noise_enabled``
    False freezes detections at their reference points.
    """

    azimuth_resolution: float
    radial_resolution: float = 1.0
    false_alarm_rate: float = 1e-6
    rcs: float = 1.0
    noise_enabled: bool = True

    def __post_init__(self):
        if self.azimuth_resolution <= 0 or self.radial_resolution <= 0:
            raise ValueError("resolutions must be > 0")
        if self.false_alarm_rate < 0:
            raise ValueError("false_alarm_rate must be >= 0")

    @classmethod
    def for_field(cls, cfg: SensorFieldConfig, **kwargs) -> "RadarModel":
        return cls(azimuth_resolution=cfg.opening_omega / AZIMUTH_BIN_COUNT, **kwargs)

    @property
    def range_sigma(self) -> float:
        return 0.5 * self.radial_resolution

    @property
    def azimuth_sigma(self) -> float:
        return 0.5 * self.azimuth_resolution


@dataclass(frozen=True)
class Detection:
    """One sensor's point measurement at one instant."""

    sensor_index: int
    time: float
    x: float
    y: float
    source_ids: frozenset[int]
    is_false_alarm: bool = False
    anchor_id: int | None = None  # vehicle whose reference point was kept

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class RoadsideSensor:
    """One array element: position on the baseline plus the shared field shape."""

    index: int
    x: float
    field: SensorFieldConfig

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, 0.0)


def make_sensor_array(cfg: SensorFieldConfig, segment_length: float) -> list[RoadsideSensor]:
    count = int(math.floor(segment_length / cfg.sensor_spacing_dpyl + 1e-9)) + 1
    return [RoadsideSensor(i, i * cfg.sensor_spacing_dpyl, cfg) for i in range(count)]


_OFFSETS_CACHE: dict = {}


def _perimeter_offsets(length: float, width: float, cell: float):
    """Cell-center offsets (relative to the rectangle's min corner) for each
    edge: bottom, top, left, right."""
    key = (length, width, cell)
    cached = _OFFSETS_CACHE.get(key)
    if cached is not None:
        return cached
    nl = max(1, int(round(length / cell)))
    nw = max(1, int(round(width / cell)))
    along_l = (np.arange(nl) + 0.5) * (length / nl)
    along_w = (np.arange(nw) + 0.5) * (width / nw)
    bottom = np.column_stack([along_l, np.zeros(nl)])
    top = np.column_stack([along_l, np.full(nl, width)])
    left = np.column_stack([np.zeros(nw), along_w])
    right = np.column_stack([np.full(nw, length), along_w])
    cached = (bottom, top, left, right)
    _OFFSETS_CACHE[key] = cached
    return cached


def _facing_cells(sensor_x: float, rect, cell: float) -> np.ndarray:
    """Perimeter cell centers on sensor-facing edges (the rest are shadowed
    by the vehicle's own body; the sensor sits below the road at y = 0)."""
    x0, x1, y0, y1 = rect
    bottom, top, left, right = _perimeter_offsets(x1 - x0, y1 - y0, cell)
    parts = [bottom]
    if sensor_x < x0:
        parts.append(left)
    elif sensor_x > x1:
        parts.append(right)
    cells = np.vstack(parts)
    return cells + np.array([x0, y0])


def _segment_blocked(sensor: tuple[float, float], cells: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Whether the open segment sensor->cell crosses any box interior.

    Slab test on every (cell, box) pair; a crossing counts only with strictly
    positive interior length inside the open parameter interval (0, 1), so a
    segment that merely touches a boundary (the cell's own edge) is free.
    """
    if not len(boxes) or not len(cells):
        return np.zeros(len(cells), dtype=bool)
    sx, sy = sensor
    d = cells - np.array([sx, sy])
    d = np.where(np.abs(d) < 1e-12, 1e-12, d)
    t1x = (boxes[None, :, 0] - sx) / d[:, None, 0]
    t2x = (boxes[None, :, 1] - sx) / d[:, None, 0]
    t1y = (boxes[None, :, 2] - sy) / d[:, None, 1]
    t2y = (boxes[None, :, 3] - sy) / d[:, None, 1]
    enter = np.maximum(np.minimum(t1x, t2x), np.minimum(t1y, t2y))
    exit_ = np.minimum(np.maximum(t1x, t2x), np.maximum(t1y, t2y))
    lo = np.maximum(enter, 0.0)
    hi = np.minimum(exit_, 1.0)
    return (hi - lo > _EPS).any(axis=1)


def _sector_mask(sensor: RoadsideSensor, cells: np.ndarray) -> np.ndarray:
    ang = edge_angles(sensor.field)
    dx = cells[:, 0] - sensor.x
    dy = cells[:, 1]
    phi = np.arctan2(dx, dy)
    r2 = dx * dx + dy * dy
    return (
        (r2 <= sensor.field.range_r ** 2)
        & (phi >= -ang.gamma)
        & (phi <= ang.beta)
    )


def _box_angular_extent(sensor: RoadsideSensor, rects: np.ndarray):
    """Angular interval, nearest and farthest corner distance of each box."""
    sx = sensor.x
    xs = rects[:, (0, 1, 0, 1)] - sx
    ys = rects[:, (2, 2, 3, 3)]
    ang = np.arctan2(xs, ys)
    dist = np.hypot(xs, ys)
    near_x = np.maximum(0.0, np.maximum(rects[:, 0] - sx, sx - rects[:, 1]))
    d_min = np.hypot(near_x, rects[:, 2])
    return ang.min(axis=1), ang.max(axis=1), d_min, dist.max(axis=1)


def _intervals_cover(intervals: list[tuple[float, float]], lo: float, hi: float) -> bool:
    cursor = lo
    for a, b in sorted(intervals):
        if a > cursor + 1e-12:
            return False
        cursor = max(cursor, b)
        if cursor >= hi - 1e-12:
            return True
    return cursor >= hi - 1e-12


def frame_visibility(
    sensor: RoadsideSensor, vehicles: Sequence, los: LosModel = LosModel()
) -> dict[int, np.ndarray]:
    """Visible perimeter cells of every vehicle, for one sensor and frame.

    Returns vehicle id -> (K, 2) array of visible cell centers; vehicles
    without visible cells are omitted.  Exact per-cell segment tests run only
    where cheap angular-interval prefilters cannot already decide a vehicle
    as fully hidden or fully clear.
    """
    r = sensor.field.range_r
    sx = sensor.x
    in_reach = [
        v for v in vehicles
        if v.rect[0] <= sx + r and v.rect[1] >= sx - r and v.rect[2] <= r
    ]
    if not in_reach:
        return {}
    rects = np.asarray([v.rect for v in in_reach])
    a_lo, a_hi, d_min, d_max = _box_angular_extent(sensor, rects)
    out: dict[int, np.ndarray] = {}
    for i, veh in enumerate(in_reach):
        overlap = (a_lo < a_hi[i] - 1e-12) & (a_hi > a_lo[i] + 1e-12) & (d_min < d_max[i])
        overlap[i] = False
        candidates = np.flatnonzero(overlap)
        if len(candidates):
            strictly_nearer = candidates[d_max[candidates] <= d_min[i]]
            if len(strictly_nearer) and _intervals_cover(
                [(a_lo[j], a_hi[j]) for j in strictly_nearer], a_lo[i], a_hi[i]
            ):
                continue  # entirely in some nearer vehicle's shadow
        cells = _facing_cells(sx, veh.rect, los.cell_size)
        cells = cells[_sector_mask(sensor, cells)]
        if not len(cells):
            continue
        if len(candidates):
            blocked = _segment_blocked(sensor.position, cells, rects[candidates])
            cells = cells[~blocked]
        if len(cells):
            out[veh.id] = cells
    return out


def visible_cells(
    sensor: RoadsideSensor, vehicle, occluders: Iterable, los: LosModel = LosModel()
) -> np.ndarray:
    """Visible perimeter cell centers of one vehicle given other vehicles.

    ``occluders`` must not contain the vehicle itself; its own body still
    shadows its far-side cells.
    """
    others = [o for o in occluders if o.id != vehicle.id]
    result = frame_visibility(sensor, [vehicle] + others, los)
    return result.get(vehicle.id, np.empty((0, 2)))


def los_detect(sensor: RoadsideSensor, vehicles: Sequence, los: LosModel = LosModel()) -> set[int]:
    """IDs of vehicles with at least one illuminated perimeter cell."""
    return set(frame_visibility(sensor, vehicles, los))


def n_resolution_cells(model: RadarModel, range_r: float) -> int:
    """Resolution cells in one scan: 12 azimuth bins times range rings."""
    return AZIMUTH_BIN_COUNT * int(math.ceil(range_r / model.radial_resolution))


def draw_false_alarms(
    sensor: RoadsideSensor,
    model: RadarModel,
    rng: np.random.Generator,
    time: float = 0.0,
) -> list[Detection]:
    """Noise detections of one scan: Poisson count over the resolution cells,
    positions uniform over the sector area, no source vehicles."""
    if model.false_alarm_rate <= 0.0:
        return []
    lam = model.false_alarm_rate * n_resolution_cells(model, sensor.field.range_r)
    count = int(rng.poisson(lam))
    if count == 0:
        return []
    ang = edge_angles(sensor.field)
    out = []
    for _ in range(count):
        phi = rng.uniform(-ang.gamma, ang.beta)
        rho = sensor.field.range_r * math.sqrt(rng.uniform())
        out.append(
            Detection(
                sensor_index=sensor.index,
                time=time,
                x=sensor.x + rho * math.sin(phi),
                y=rho * math.cos(phi),
                source_ids=frozenset(),
                is_false_alarm=True,
            )
        )
    return out


def radar_detect(
    sensor: RoadsideSensor,
    vehicles: Sequence,
    model: RadarModel,
    rng: np.random.Generator,
    time: float = 0.0,
    los: LosModel = LosModel(),
) -> list[Detection]:
    """Point detections of one radar scan.

    Each unoccluded vehicle yields a reference point at the centroid of its
    visible cells; reference points sharing a polar resolution bin merge into
    one detection positioned at the nearest member and crediting all members'
    IDs.  Surviving detections get polar Gaussian noise, then false alarms
    are appended.
    """
    visible = frame_visibility(sensor, vehicles, los)
    ang = edge_angles(sensor.field)
    bins: dict[tuple[int, int], list] = {}
    for vid in sorted(visible):
        cx, cy = visible[vid].mean(axis=0)
        rho = math.hypot(cx - sensor.x, cy)
        phi = math.atan2(cx - sensor.x, cy)
        range_bin = int(rho / model.radial_resolution)
        azimuth_bin = int((phi + ang.gamma) / model.azimuth_resolution)
        azimuth_bin = min(max(azimuth_bin, 0), AZIMUTH_BIN_COUNT - 1)
        bins.setdefault((range_bin, azimuth_bin), []).append((rho, phi, vid))
    detections = []
    for key in sorted(bins):
        members = bins[key]
        rho, phi, anchor = min(members)
        ids = frozenset(vid for _, _, vid in members)
        if model.noise_enabled:
            rho = rho + rng.normal(0.0, model.range_sigma)
            phi = phi + rng.normal(0.0, model.azimuth_sigma)
        detections.append(
            Detection(
                sensor_index=sensor.index,
                time=time,
                x=sensor.x + rho * math.sin(phi),
                y=rho * math.cos(phi),
                source_ids=ids,
                anchor_id=anchor,
            )
        )
    detections.extend(draw_false_alarms(sensor, model, rng, time))
    return detections
