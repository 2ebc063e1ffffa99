"""Time-loop orchestration, completeness metrics, and (r, omega) sweeps.

A run steps the traffic world at the pipeline's sample time, collects the
per-step set of detected vehicle IDs (union over sensors of line-of-sight
hits, of radar source IDs, or of tracker-credited IDs), and intersects it
with the ground truth inside a central evaluation region.  Runs terminate
once a target number of vehicles has fully traversed that region.

All randomness derives from one run seed: the traffic stream from spawn key
(0,), the per-sensor-per-frame radar streams from spawn key (1, frame,
sensor), so sweep cells can execute in any order or process count and still
reproduce bit-identically.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import SensorFieldConfig, max_rotation_alpha
from .perception import LosModel, RadarModel, RoadsideSensor, los_detect, make_sensor_array, radar_detect
from .tracking import Tracker, TrackerParams
from . import traffic

PIPELINES = ("vision", "radar", "radar_tracking")

# Interior slice of the sensor-lined segment; edge effects of the finite
# array stay outside it.
EVAL_REGION_LENGTH = 300.0


class SimulationTimeout(RuntimeError):
    """The scenario cannot (or did not) produce the requested traversals."""


def evaluation_region(segment_length: float) -> tuple[float, float]:
    margin = 0.5 * (segment_length - EVAL_REGION_LENGTH)
    if margin < 0:
        return (0.0, segment_length)
    return (margin, segment_length - margin)


def traffic_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))


def sensor_frame_rng(seed: int, frame: int, sensor_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, frame, sensor_index)))


@dataclass(frozen=True)
class CompletenessReport:
    """Per-step detection counts against ground truth and their time average.

    ``time_average`` is the mean of |detected ∩ truth| / |truth| over steps
    with non-empty truth.  A run that never saw a vehicle in the region
    reports 1.0 with ``zero_ground_truth`` set.
    """

    scenario: str
    pipeline: str
    seed: int
    time_average: float
    steps_counted: int
    zero_ground_truth: bool
    per_step: tuple[tuple[float, int, int], ...] = ()


def run_scenario(
    cfg: SensorFieldConfig,
    scenario: "str | traffic.ScenarioConfig",
    pipeline: str,
    seed: int,
    tracker_params: TrackerParams | None = None,
    los: LosModel = LosModel(),
    keep_steps: bool = False,
) -> CompletenessReport:
    """Simulate one scenario under one pipeline and average its completeness."""
    if pipeline not in PIPELINES:
        raise ValueError(f"unknown pipeline {pipeline!r}; expected one of {PIPELINES}")
    cfg.validate()
    sc = traffic.resolve_scenario(scenario)
    sc.validate(cfg.road_band)
    dt = sc.dt_vision if pipeline == "vision" else sc.dt_radar
    sensors = make_sensor_array(cfg, sc.segment_length)
    region = evaluation_region(sc.segment_length)
    target = sc.target_vehicle_count

    has_source = any(
        lane.open and (lane.flow_veh_per_hour > 0 or lane.fill_gap_mean is not None)
        for lane in sc.lanes
    ) or bool(sc.initial_vehicles)
    if target > 0 and not has_source:
        raise SimulationTimeout(
            f"scenario {sc.name!r} has no traffic source but requires "
            f"{target} traversals"
        )

    rng = traffic_rng(seed)
    state = traffic.new_state(sc, rng)
    radar_model = RadarModel.for_field(cfg) if pipeline != "vision" else None
    tracker = None
    if pipeline == "radar_tracking":
        params = tracker_params or TrackerParams.for_radar(radar_model, dt=dt)
        tracker = Tracker(replace(params, dt=dt))

    per_step = []
    ratio_sum = 0.0
    counted = 0
    traversed: set[int] = set()
    frame = 0
    while True:
        frame += 1
        t = frame * dt
        traffic.step(state, dt, rng)
        vehicles = state.vehicles
        truth = traffic.ground_truth(state, region)

        if pipeline == "vision":
            detected: set[int] = set()
            for s in sensors:
                detected |= los_detect(s, vehicles, los)
        else:
            detections = []
            for s in sensors:
                detections.extend(
                    radar_detect(s, vehicles, radar_model,
                                 sensor_frame_rng(seed, frame, s.index), t, los)
                )
            if pipeline == "radar":
                detected = set().union(*(d.source_ids for d in detections)) if detections else set()
            else:
                detected = tracker.step(detections)

        if truth:
            ratio_sum += len(detected & truth) / len(truth)
            counted += 1
        if keep_steps:
            per_step.append((t, len(truth), len(detected & truth)))

        traversed.update(v.id for v in vehicles if v.rear_x >= region[1])
        if target > 0 and len(traversed) >= target:
            break
        if t >= sc.duration:
            if target > 0:
                raise SimulationTimeout(
                    f"scenario {sc.name!r} reached duration {sc.duration}s with "
                    f"{len(traversed)}/{target} traversals"
                )
            break

    zero_truth = counted == 0
    return CompletenessReport(
        scenario=sc.name,
        pipeline=pipeline,
        seed=seed,
        time_average=1.0 if zero_truth else ratio_sum / counted,
        steps_counted=counted,
        zero_ground_truth=zero_truth,
        per_step=tuple(per_step),
    )


@dataclass(frozen=True)
class SweepSpec:
    """Axes of a completeness sweep."""

    r_values: tuple[float, ...]
    omega_values: tuple[float, ...]
    scenarios: tuple = ("christmas_eve",)
    pipelines: tuple[str, ...] = ("vision",)
    seeds: tuple[int, ...] = (0,)
    alpha_rule: str = "max_rotation"

    def violations(self) -> list[str]:
        out = []
        for name, axis in (("r_values", self.r_values), ("omega_values", self.omega_values),
                           ("scenarios", self.scenarios), ("pipelines", self.pipelines),
                           ("seeds", self.seeds)):
            if not axis:
                out.append(f"{name}: must be non-empty")
        for p in self.pipelines:
            if p not in PIPELINES:
                out.append(f"pipelines: unknown pipeline {p!r}")
        if self.alpha_rule not in ("fixed", "max_rotation"):
            out.append("alpha_rule: must be 'fixed' or 'max_rotation'")
        return out


@dataclass(frozen=True)
class RunRow:
    scenario: str
    pipeline: str
    omega: float
    r: float
    alpha: float
    seed: int
    time_avg_completeness: float
    steps_counted: int
    flag_zero_gt: bool


@dataclass(frozen=True)
class AggregateRow:
    scenario: str
    pipeline: str
    omega: float
    r: float
    alpha: float
    n_seeds: int
    mean_completeness: float
    std_completeness: float


def _cell_config(cfg_base: SensorFieldConfig, omega: float, r: float, alpha_rule: str) -> SensorFieldConfig:
    alpha = max_rotation_alpha(omega) if alpha_rule == "max_rotation" else cfg_base.rotation_alpha
    return replace(cfg_base, opening_omega=omega, range_r=r, rotation_alpha=alpha)


def _run_cell(args) -> RunRow:
    cfg_base, omega, r, alpha_rule, scenario, pipeline, seed, tracker_params = args
    cfg = _cell_config(cfg_base, omega, r, alpha_rule)
    report = run_scenario(cfg, scenario, pipeline, seed, tracker_params=tracker_params)
    return RunRow(
        scenario=report.scenario,
        pipeline=pipeline,
        omega=omega,
        r=r,
        alpha=cfg.rotation_alpha,
        seed=seed,
        time_avg_completeness=report.time_average,
        steps_counted=report.steps_counted,
        flag_zero_gt=report.zero_ground_truth,
    )


def sweep(
    spec: SweepSpec,
    cfg_base: SensorFieldConfig,
    tracker_params: TrackerParams | None = None,
    jobs: int = 1,
) -> tuple[list[RunRow], list[AggregateRow]]:
    """Run every sweep cell and aggregate over seeds.

    Cells are independent; with ``jobs`` > 1 they run in a process pool.  The
    output ordering and contents do not depend on the worker count.
    """
    bad = spec.violations()
    if bad:
        raise ValueError("; ".join(bad))
    scenarios = [traffic.resolve_scenario(s) for s in spec.scenarios]
    cells = [
        (cfg_base, omega, r, spec.alpha_rule, scenario, pipeline, seed, tracker_params)
        for scenario in scenarios
        for pipeline in spec.pipelines
        for omega in spec.omega_values
        for r in spec.r_values
        for seed in spec.seeds
    ]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, cells, chunksize=1))
    else:
        rows = [_run_cell(cell) for cell in cells]
    rows.sort(key=lambda row: (row.scenario, row.pipeline, row.omega, row.r, row.seed))

    aggregates = []
    groups: dict[tuple, list[RunRow]] = {}
    for row in rows:
        groups.setdefault((row.scenario, row.pipeline, row.omega, row.r, row.alpha), []).append(row)
    for key in sorted(groups):
        members = groups[key]
        values = np.asarray([m.time_avg_completeness for m in members])
        std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        aggregates.append(
            AggregateRow(*key, n_seeds=len(values),
                         mean_completeness=float(values.mean()), std_completeness=std)
        )
    return rows, aggregates
