"""Centralized cluster fusion and linear constant-velocity Kalman tracking.

Detections from all sensors at one timestamp are fused into clusters by
single-linkage proximity (default linkage: one car width), then assigned to
tracks by optimal bipartite matching on Mahalanobis distance with chi-square
gating.  Tracks confirm by an M-of-N rule, coast through misses by
prediction alone, and are dropped after a run of consecutive misses.
Detected-vehicle credit flows through the detections' source IDs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .perception import Detection

TENTATIVE = "tentative"
CONFIRMED = "confirmed"


@dataclass(frozen=True)
class TrackerParams:
    """Motion/measurement model strengths and track lifecycle thresholds."""

    dt: float = 0.1
    sigma_accel: float = 1.0
    meas_sigma: float = 2.0
    confirm_hits: int = 2
    confirm_window: int = 3
    coast_limit: int = 5
    gate: float = 9.21  # chi-square, 2 dof, 99%
    linkage: float = 1.8
    strict_id_credit: bool = False
    # velocity prior for fresh tracks: any along-road speed, but traffic does
    # not drift across lanes
    init_speed_sigma: float = 30.0
    init_cross_speed_sigma: float = 2.0

    @classmethod
    def for_radar(cls, radar_model, reference_range: float = 50.0, **kwargs) -> "TrackerParams":
        """Derive the measurement noise from the radar resolution: range noise
        plus cross-range noise at a representative target distance."""
        sigma = math.hypot(
            radar_model.range_sigma, reference_range * radar_model.azimuth_sigma
        )
        return cls(meas_sigma=sigma, **kwargs)


@dataclass
class Cluster:
    """Spatially fused detections of one timestamp."""

    centroid: tuple[float, float]
    members: list[Detection]
    source_ids: frozenset[int]


def cluster(detections: Sequence[Detection], linkage: float = 1.8) -> list[Cluster]:
    """Single-linkage connected components at the given distance threshold."""
    if not detections:
        return []
    pos = np.asarray([d.position for d in detections])
    n = len(pos)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    diff = pos[:, None, :] - pos[None, :, :]
    close = (diff ** 2).sum(axis=2) <= linkage * linkage
    for i in range(n):
        for j in range(i + 1, n):
            if close[i, j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = []
    for root in sorted(groups):
        members = [detections[i] for i in groups[root]]
        centroid = pos[groups[root]].mean(axis=0)
        ids = frozenset().union(*(d.source_ids for d in members))
        out.append(Cluster(centroid=(float(centroid[0]), float(centroid[1])), members=members, source_ids=ids))
    return out


@dataclass
class Track:
    """Kalman state (x, y, vx, vy) with lifecycle bookkeeping."""

    track_id: int
    state: np.ndarray
    covariance: np.ndarray
    status: str = TENTATIVE
    misses_in_row: int = 0
    hit_history: list[bool] = field(default_factory=list)
    last_ids: frozenset[int] = frozenset()

    @property
    def position(self) -> np.ndarray:
        return self.state[:2]

    @property
    def is_coasting(self) -> bool:
        return self.misses_in_row > 0


def _transition(dt: float) -> np.ndarray:
    f = np.eye(4)
    f[0, 2] = dt
    f[1, 3] = dt
    return f


def _process_noise(dt: float, sigma_accel: float) -> np.ndarray:
    g = np.array([[0.5 * dt * dt, 0.0], [0.0, 0.5 * dt * dt], [dt, 0.0], [0.0, dt]])
    return sigma_accel ** 2 * (g @ g.T)


_H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])


def _meas_cov(params: TrackerParams) -> np.ndarray:
    return params.meas_sigma ** 2 * np.eye(2)


def predict(track: Track, dt: float, sigma_accel: float = 1.0) -> Track:
    """Propagate by the constant-velocity model; inflate covariance by the
    white-acceleration process noise."""
    f = _transition(dt)
    track.state = f @ track.state
    cov = f @ track.covariance @ f.T + _process_noise(dt, sigma_accel)
    track.covariance = 0.5 * (cov + cov.T)
    return track


def innovation(track: Track, measurement: np.ndarray, params: TrackerParams):
    """Residual and its covariance for a position measurement."""
    nu = measurement - _H @ track.state
    s = _H @ track.covariance @ _H.T + _meas_cov(params)
    return nu, s


def _kalman_update(track: Track, measurement: np.ndarray, params: TrackerParams) -> None:
    nu, s = innovation(track, measurement, params)
    k = track.covariance @ _H.T @ np.linalg.inv(s)
    track.state = track.state + k @ nu
    ikh = np.eye(4) - k @ _H
    cov = ikh @ track.covariance @ ikh.T + k @ _meas_cov(params) @ k.T  # Joseph form
    track.covariance = 0.5 * (cov + cov.T)


@dataclass
class Assignment:
    """Gated optimal matching between predicted tracks and clusters."""

    clusters: list[Cluster]
    pairs: list[tuple[int, int]]  # (track index, cluster index)
    unmatched_tracks: list[int]
    unmatched_clusters: list[int]


def associate(tracks: Sequence[Track], clusters: list[Cluster], params: TrackerParams) -> Assignment:
    """One-to-one assignment minimizing Mahalanobis distance, gated at
    chi-square(2 dof); unmatched clusters will seed new tentative tracks."""
    if not tracks or not clusters:
        return Assignment(clusters, [], list(range(len(tracks))), list(range(len(clusters))))
    big = 1e12
    cost = np.full((len(tracks), len(clusters)), big)
    for i, track in enumerate(tracks):
        s_inv = np.linalg.inv(
            _H @ track.covariance @ _H.T + _meas_cov(params)
        )
        for j, clu in enumerate(clusters):
            nu = np.asarray(clu.centroid) - _H @ track.state
            d2 = float(nu @ s_inv @ nu)
            if d2 <= params.gate:
                cost[i, j] = d2
    rows, cols = linear_sum_assignment(cost)
    pairs = [(int(i), int(j)) for i, j in zip(rows, cols) if cost[i, j] < big]
    matched_t = {i for i, _ in pairs}
    matched_c = {j for _, j in pairs}
    return Assignment(
        clusters,
        sorted(pairs, key=lambda p: tracks[p[0]].track_id),
        [i for i in range(len(tracks)) if i not in matched_t],
        [j for j in range(len(clusters)) if j not in matched_c],
    )


def _credited_ids(clu: Cluster, strict: bool) -> frozenset[int]:
    if not strict:
        return clu.source_ids
    if not clu.members:
        return frozenset()
    cx, cy = clu.centroid
    nearest = min(
        clu.members,
        key=lambda d: ((d.x - cx) ** 2 + (d.y - cy) ** 2, d.x, d.y),
    )
    if nearest.anchor_id is None:
        return frozenset()
    return frozenset({nearest.anchor_id})


def _confirmable(history: list[bool], params: TrackerParams) -> bool:
    recent = history[-params.confirm_window:]
    return sum(recent) >= params.confirm_hits


def _tentative_dead(history: list[bool], params: TrackerParams) -> bool:
    # dead once the M-of-N rule can no longer be met within the window
    recent = history[-params.confirm_window:]
    remaining = params.confirm_window - len(recent)
    return sum(recent) + remaining < params.confirm_hits


def update_and_manage(
    tracks: list[Track],
    assignment: Assignment,
    params: TrackerParams,
    id_source: Iterator[int],
) -> list[Track]:
    """Measurement-update matched tracks, coast or drop the rest, and seed
    tentative tracks from unmatched clusters."""
    for ti, ci in assignment.pairs:
        track = tracks[ti]
        clu = assignment.clusters[ci]
        _kalman_update(track, np.asarray(clu.centroid), params)
        track.misses_in_row = 0
        track.hit_history.append(True)
        ids = _credited_ids(clu, params.strict_id_credit)
        if ids:
            track.last_ids = ids
        if track.status == TENTATIVE and _confirmable(track.hit_history, params):
            track.status = CONFIRMED
    survivors = []
    matched = {ti for ti, _ in assignment.pairs}
    for idx, track in enumerate(tracks):
        if idx in matched:
            survivors.append(track)
            continue
        track.misses_in_row += 1
        track.hit_history.append(False)
        if track.status == CONFIRMED:
            if track.misses_in_row < params.coast_limit:
                survivors.append(track)
        elif not _tentative_dead(track.hit_history, params):
            survivors.append(track)
    for ci in assignment.unmatched_clusters:
        clu = assignment.clusters[ci]
        state = np.array([clu.centroid[0], clu.centroid[1], 0.0, 0.0])
        cov = np.diag([
            params.meas_sigma ** 2,
            params.meas_sigma ** 2,
            params.init_speed_sigma ** 2,
            params.init_cross_speed_sigma ** 2,
        ])
        fresh = Track(
            track_id=next(id_source),
            state=state,
            covariance=cov,
            hit_history=[True],
            last_ids=_credited_ids(clu, params.strict_id_credit),
        )
        if _confirmable(fresh.hit_history, params):
            fresh.status = CONFIRMED
        survivors.append(fresh)
    return survivors


def tracked_ids(tracks: Iterable[Track]) -> set[int]:
    """Vehicle IDs credited to confirmed tracks (coasting ones keep their
    last associated IDs; duplicates collapse in the set)."""
    out: set[int] = set()
    for track in tracks:
        if track.status == CONFIRMED:
            out |= track.last_ids
    return out


class Tracker:
    """Sequential prediction/association/update state machine for one run."""

    def __init__(self, params: TrackerParams):
        self.params = params
        self.tracks: list[Track] = []
        self._ids = itertools.count(1)

    def step(self, detections: Sequence[Detection]) -> set[int]:
        clusters = cluster(detections, self.params.linkage)
        for track in self.tracks:
            predict(track, self.params.dt, self.params.sigma_accel)
        assignment = associate(self.tracks, clusters, self.params)
        self.tracks = update_and_manage(self.tracks, assignment, self.params, self._ids)
        return tracked_ids(self.tracks)
