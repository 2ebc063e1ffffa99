"""Stochastic highway population and constant-speed propagation.

Vehicles are axis-aligned rectangles on fixed lanes, all moving in +x at
their lane's constant speed; lane changes do not occur.  Lanes are filled
either by a Bernoulli arrival process at the upstream boundary (free-flowing
traffic) or by sampling bumper-to-bumper gaps (congested traffic).  Every
vehicle carries a unique ID that is never reused within a run.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class VehicleClass:
    name: str
    length: float
    width: float


# The five-group classification used throughout: cars, trucks, buses, and
# cars/trucks with trailers.  Dimensions in meters.
VEHICLE_CLASSES: dict[str, VehicleClass] = {
    "car": VehicleClass("car", 4.5, 1.8),
    "car_trailer": VehicleClass("car_trailer", 10.0, 1.8),
    "truck": VehicleClass("truck", 12.0, 2.5),
    "truck_trailer": VehicleClass("truck_trailer", 18.5, 2.5),
    "bus": VehicleClass("bus", 13.0, 2.55),
}

# Spawn rule for arrival lanes: 2 m standstill clearance plus one second of
# headway at lane speed.
MIN_GAP_BASE = 2.0
MIN_GAP_HEADWAY = 1.0


@dataclass(frozen=True)
class LaneSpec:
    """One lane: position, demand, speed and vehicle-class mixture.

    ``fill_gap_mean`` switches the lane from Bernoulli arrivals to
    gap-sampled dense traffic: the lane is pre-filled and topped up so that
    net bumper-to-bumper gaps are exponential with the given mean.
    """

    index: int
    center_y: float
    flow_veh_per_hour: float
    speed: float
    class_mix: dict[str, float]
    open: bool = True
    fill_gap_mean: float | None = None

    def violations(self, road_band: tuple[float, float] | None = None) -> list[str]:
        out = []
        prefix = f"lanes[{self.index}]"
        total = sum(self.class_mix.values())
        if abs(total - 1.0) > 1e-9:
            out.append(f"{prefix}.class_mix: probabilities must sum to 1 (got {total:.6g})")
        unknown = set(self.class_mix) - set(VEHICLE_CLASSES)
        if unknown:
            out.append(f"{prefix}.class_mix: unknown classes {sorted(unknown)}")
        if any(p < 0 for p in self.class_mix.values()):
            out.append(f"{prefix}.class_mix: probabilities must be >= 0")
        if self.speed < 0:
            out.append(f"{prefix}.speed: must be >= 0")
        if self.flow_veh_per_hour < 0:
            out.append(f"{prefix}.flow_veh_per_hour: must be >= 0")
        if not self.open and self.flow_veh_per_hour != 0:
            out.append(f"{prefix}: closed lanes must have flow 0")
        if self.fill_gap_mean is not None and self.fill_gap_mean <= 0:
            out.append(f"{prefix}.fill_gap_mean: must be > 0")
        if road_band is not None:
            lo, hi = road_band
            if not lo <= self.center_y <= hi:
                out.append(f"{prefix}.center_y: must lie inside the road band [{lo}, {hi}]")
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    """A named traffic situation plus simulation timing parameters.

    ``wave_platoon``/``wave_void`` give gap-filled lanes a stop-and-go wave
    structure: dense platoons of the given length alternating with empty
    stretches, phase-aligned across lanes as congestion waves are.  In-platoon
    gaps are scaled so each lane's mean net gap stays at ``fill_gap_mean``.
    """

    name: str
    lanes: tuple[LaneSpec, ...]
    segment_length: float = 500.0
    seed: int = 0
    duration: float = 3600.0
    dt_radar: float = 0.1
    dt_vision: float = 0.05
    target_vehicle_count: int = 100
    initial_vehicles: tuple[tuple[int, str, float], ...] = ()
    wave_platoon: float | None = None
    wave_void: float | None = None

    def violations(self, road_band: tuple[float, float] | None = None) -> list[str]:
        out = []
        if self.dt_radar <= 0:
            out.append("dt_radar: must be > 0")
        if self.dt_vision <= 0:
            out.append("dt_vision: must be > 0")
        if self.segment_length <= 0:
            out.append("segment_length: must be > 0")
        if self.duration <= 0:
            out.append("duration: must be > 0")
        if self.target_vehicle_count < 0:
            out.append("target_vehicle_count: must be >= 0")
        wave = (self.wave_platoon, self.wave_void)
        if any(w is not None for w in wave):
            if any(w is None or w <= 0 for w in wave):
                out.append("wave_platoon/wave_void: both must be set and > 0")
        lane_ids = [lane.index for lane in self.lanes]
        if len(set(lane_ids)) != len(lane_ids):
            out.append("lanes: indices must be unique")
        for lane in self.lanes:
            out.extend(lane.violations(road_band))
        known = {lane.index for lane in self.lanes}
        for lane_idx, cls, _ in self.initial_vehicles:
            if lane_idx not in known:
                out.append(f"initial_vehicles: unknown lane {lane_idx}")
            if cls not in VEHICLE_CLASSES:
                out.append(f"initial_vehicles: unknown class {cls!r}")
        return out

    def validate(self, road_band: tuple[float, float] | None = None) -> "ScenarioConfig":
        bad = self.violations(road_band)
        if bad:
            raise ValueError("; ".join(bad))
        return self

    def lane(self, index: int) -> LaneSpec:
        for lane in self.lanes:
            if lane.index == index:
                return lane
        raise KeyError(index)


@dataclass
class Vehicle:
    """Ground-truth rectangle [rear_x, rear_x+length] x [cy-w/2, cy+w/2]."""

    id: int
    vclass: VehicleClass
    lane: int
    rear_x: float
    speed: float
    center_y: float

    @property
    def length(self) -> float:
        return self.vclass.length

    @property
    def width(self) -> float:
        return self.vclass.width

    @property
    def front_x(self) -> float:
        return self.rear_x + self.vclass.length

    @property
    def rect(self) -> tuple[float, float, float, float]:
        half_w = 0.5 * self.vclass.width
        return (self.rear_x, self.front_x, self.center_y - half_w, self.center_y + half_w)


@dataclass
class TrafficState:
    """World state owned by one simulation run."""

    scenario: ScenarioConfig
    time: float = 0.0
    next_id: int = 1
    lanes: dict[int, deque] = field(default_factory=dict)
    pending: dict[int, deque] = field(default_factory=dict)
    arrival_count: int = 0
    # per-lane phase of the stop-and-go wave, in convoy coordinates
    wave_phase: dict[int, float] = field(default_factory=dict)

    @property
    def vehicles(self) -> list[Vehicle]:
        out = []
        for idx in sorted(self.lanes):
            out.extend(self.lanes[idx])
        return out

    def _new_vehicle(self, lane: LaneSpec, cls_name: str, rear_x: float) -> Vehicle:
        veh = Vehicle(
            id=self.next_id,
            vclass=VEHICLE_CLASSES[cls_name],
            lane=lane.index,
            rear_x=rear_x,
            speed=lane.speed,
            center_y=lane.center_y,
        )
        self.next_id += 1
        self.lanes[lane.index].append(veh)
        return veh


def _draw_class(mix: dict[str, float], rng: np.random.Generator) -> str:
    names = list(mix)
    probs = np.asarray([mix[n] for n in names], dtype=float)
    return names[int(rng.choice(len(names), p=probs / probs.sum()))]


def new_state(scenario: ScenarioConfig, rng: np.random.Generator) -> TrafficState:
    """Fresh traffic state: gap-filled lanes populated, arrival lanes empty."""
    state = TrafficState(scenario=scenario)
    gap_lanes = [
        lane for lane in sorted(scenario.lanes, key=lambda ln: ln.index)
        if lane.open and lane.fill_gap_mean is not None
    ]
    if gap_lanes and scenario.wave_platoon is not None:
        period = scenario.wave_platoon + scenario.wave_void
        shared = rng.uniform(0.0, period)
        for lane in gap_lanes:
            state.wave_phase[lane.index] = shared + rng.uniform(-5.0, 5.0)
    for lane in sorted(scenario.lanes, key=lambda ln: ln.index):
        state.lanes[lane.index] = deque()
        state.pending[lane.index] = deque()
        if lane.open and lane.fill_gap_mean is not None:
            _fill_lane_with_gaps(state, lane, rng)
    for lane_idx, cls_name, rear_x in scenario.initial_vehicles:
        state._new_vehicle(scenario.lane(lane_idx), cls_name, rear_x)
    return state


def _mean_length(mix: dict[str, float]) -> float:
    return sum(p * VEHICLE_CLASSES[name].length for name, p in mix.items())


_PLATOON_GAP_CACHE: dict = {}


def _simulated_mean_gap(platoon: float, void: float, mix: dict[str, float],
                        g_inner: float, rng: np.random.Generator) -> float:
    """Mean net gap realized by the wave filler over a long virtual lane."""
    period = platoon + void
    front = platoon
    gaps = []
    prev_rear = None
    while front > -20000.0:
        length = VEHICLE_CLASSES[_draw_class(mix, rng)].length
        offset = front % period
        if offset > platoon:
            front -= offset - platoon
            offset = platoon
        if offset < length:
            front -= offset + void
        if prev_rear is not None:
            gaps.append(prev_rear - front)
        prev_rear = front - length
        front = prev_rear - rng.exponential(g_inner)
    return float(np.mean(gaps))


def _platoon_gap_mean(scenario: ScenarioConfig, lane: LaneSpec) -> float:
    """In-platoon gap mean calibrated so the lane-wide mean net gap (voids
    included) equals fill_gap_mean.  Solved once per wave/mix combination on
    a long virtual lane with a fixed calibration stream."""
    platoon, void = scenario.wave_platoon, scenario.wave_void
    key = (platoon, void, tuple(sorted(lane.class_mix.items())), lane.fill_gap_mean)
    if key in _PLATOON_GAP_CACHE:
        return _PLATOON_GAP_CACHE[key]
    target = lane.fill_gap_mean
    lo, hi = 0.05, max(4.0 * target, 1.0)
    for _ in range(24):
        mid = 0.5 * (lo + hi)
        realized = _simulated_mean_gap(
            platoon, void, lane.class_mix, mid, np.random.default_rng(1234)
        )
        if realized < target:
            lo = mid
        else:
            hi = mid
    _PLATOON_GAP_CACHE[key] = lo
    return lo


def _wave_snap_front(state: TrafficState, lane: LaneSpec, front_u: float, length: float) -> float:
    """Snap a candidate vehicle front (in convoy coordinates) downward so the
    whole vehicle lies inside a wave platoon, never in a void."""
    scenario = state.scenario
    if scenario.wave_platoon is None or lane.index not in state.wave_phase:
        return front_u
    platoon, void = scenario.wave_platoon, scenario.wave_void
    period = platoon + void
    phase = state.wave_phase[lane.index]
    offset = (front_u - phase) % period
    if offset > platoon:
        front_u -= offset - platoon
        offset = platoon
    if offset < length:  # rear would poke into the void below
        front_u -= offset + void
    return front_u


def _lane_gap(state: TrafficState, lane: LaneSpec, rng: np.random.Generator) -> float:
    if state.scenario.wave_platoon is not None and lane.index in state.wave_phase:
        return rng.exponential(_platoon_gap_mean(state.scenario, lane))
    return rng.exponential(lane.fill_gap_mean)


def _fill_lane_with_gaps(state: TrafficState, lane: LaneSpec, rng: np.random.Generator) -> None:
    """Pack the lane from downstream to upstream with sampled net gaps,
    leaving one vehicle straddling the upstream boundary to keep inflow going.
    At time 0 convoy coordinates equal road coordinates."""
    front = state.scenario.segment_length
    while True:
        cls_name = _draw_class(lane.class_mix, rng)
        length = VEHICLE_CLASSES[cls_name].length
        front = _wave_snap_front(state, lane, front, length)
        rear = front - length
        state._new_vehicle(lane, cls_name, rear)
        if rear <= 0.0:
            break
        front = rear - _lane_gap(state, lane, rng)


def spawn_step(
    state: TrafficState, lane: LaneSpec, dt: float, rng: np.random.Generator
) -> list[Vehicle]:
    """Inject at most one vehicle at the upstream boundary of this lane.

    Arrival lanes draw a Bernoulli arrival with probability flow*dt/3600;
    arrivals blocked by insufficient gap stay queued and retry next step.
    Gap-filled lanes place the next vehicle as soon as the previous one has
    fully entered the segment, preserving the exponential gap statistics.
    """
    if not lane.open:
        return []
    queue = state.lanes[lane.index]
    if lane.fill_gap_mean is not None:
        rearmost = queue[-1] if queue else None
        if rearmost is None:
            cls_name = _draw_class(lane.class_mix, rng)
            return [state._new_vehicle(lane, cls_name, -VEHICLE_CLASSES[cls_name].length)]
        if rearmost.rear_x >= 0.0:
            gap = _lane_gap(state, lane, rng)
            cls_name = _draw_class(lane.class_mix, rng)
            length = VEHICLE_CLASSES[cls_name].length
            # the wave pattern travels with the traffic: snap in convoy
            # coordinates u = x - v*t
            drift = lane.speed * state.time
            front_u = _wave_snap_front(state, lane, rearmost.rear_x - gap - drift, length)
            rear = front_u + drift - length
            return [state._new_vehicle(lane, cls_name, rear)]
        return []
    if lane.flow_veh_per_hour <= 0:
        return []
    p_arrival = min(1.0, lane.flow_veh_per_hour * dt / 3600.0)
    if rng.random() < p_arrival:
        state.pending[lane.index].append(_draw_class(lane.class_mix, rng))
        state.arrival_count += 1
    pending = state.pending[lane.index]
    if not pending:
        return []
    length = VEHICLE_CLASSES[pending[0]].length
    rearmost = queue[-1] if queue else None
    min_gap = MIN_GAP_BASE + MIN_GAP_HEADWAY * lane.speed
    if rearmost is not None and rearmost.rear_x - length < min_gap:
        return []
    return [state._new_vehicle(lane, pending.popleft(), 0.0)]


def advance(state: TrafficState, dt: float) -> TrafficState:
    """Move every vehicle by speed*dt and drop those fully past the segment."""
    end = state.scenario.segment_length
    for lane_queue in state.lanes.values():
        for veh in lane_queue:
            veh.rear_x += veh.speed * dt
        while lane_queue and lane_queue[0].rear_x >= end:
            lane_queue.popleft()
    state.time += dt
    return state


def step(state: TrafficState, dt: float, rng: np.random.Generator) -> TrafficState:
    """One simulation step: propagate, then spawn lane by lane in index order."""
    advance(state, dt)
    for lane in sorted(state.scenario.lanes, key=lambda ln: ln.index):
        spawn_step(state, lane, dt, rng)
    return state


def ground_truth(state: TrafficState, region: tuple[float, float]) -> set[int]:
    """IDs of vehicles whose rectangle lies fully inside the x-interval."""
    lo, hi = region
    return {
        veh.id
        for veh in state.vehicles
        if veh.rear_x >= lo and veh.front_x <= hi
    }


# --- named default scenarios -------------------------------------------------
#
# Lane geometry for a 14 m carriageway next to the sensors: a 0.75 m edge
# strip, then an emergency lane and three driving lanes of 3.25 m each, and a
# 0.25 m far edge strip.  Lane 0 is the emergency lane nearest the sensor
# line and is only sometimes open.

_EDGE_STRIP = 0.75
_LANE_WIDTH = 3.25

MIX_RIGHT_HEAVY = {"car": 0.55, "car_trailer": 0.05, "truck": 0.27, "truck_trailer": 0.08, "bus": 0.05}
MIX_COMMUTE_RIGHT = {"car": 0.78, "car_trailer": 0.03, "truck": 0.13, "truck_trailer": 0.03, "bus": 0.03}
MIX_MIDDLE = {"car": 0.87, "car_trailer": 0.03, "truck": 0.07, "truck_trailer": 0.01, "bus": 0.02}
MIX_CAR_HEAVY = {"car": 0.93, "car_trailer": 0.03, "truck": 0.03, "truck_trailer": 0.0, "bus": 0.01}
MIX_JAM_RIGHT = {"car": 0.88, "car_trailer": 0.04, "truck": 0.05, "truck_trailer": 0.0, "bus": 0.03}
MIX_JAM_OTHER = {"car": 0.95, "car_trailer": 0.03, "truck": 0.01, "truck_trailer": 0.0, "bus": 0.01}


def _lane_y(index: int, d_sr: float = 0.5) -> float:
    return d_sr + _EDGE_STRIP + (index + 0.5) * _LANE_WIDTH


def christmas_eve() -> ScenarioConfig:
    """Low density: three open lanes at 150 veh/h each, emergency lane closed."""
    lanes = (
        LaneSpec(0, _lane_y(0), 0.0, 0.0, MIX_CAR_HEAVY, open=False),
        LaneSpec(1, _lane_y(1), 150.0, 33.0, MIX_RIGHT_HEAVY),
        LaneSpec(2, _lane_y(2), 150.0, 33.0, MIX_CAR_HEAVY),
        LaneSpec(3, _lane_y(3), 150.0, 33.0, MIX_CAR_HEAVY),
    )
    return ScenarioConfig(name="christmas_eve", lanes=lanes)


def tuesday_morning() -> ScenarioConfig:
    """Commuting traffic: emergency lane opened, 1200 veh/h on all four lanes."""
    lanes = (
        LaneSpec(0, _lane_y(0), 1200.0, 27.0, MIX_COMMUTE_RIGHT),
        LaneSpec(1, _lane_y(1), 1200.0, 27.0, MIX_MIDDLE),
        LaneSpec(2, _lane_y(2), 1200.0, 27.0, MIX_CAR_HEAVY),
        LaneSpec(3, _lane_y(3), 1200.0, 27.0, MIX_CAR_HEAVY),
    )
    return ScenarioConfig(name="tuesday_morning", lanes=lanes)


def traffic_jam() -> ScenarioConfig:
    """Congestion: three slow gap-packed lanes in a stop-and-go wave pattern,
    emergency lane closed."""
    lanes = (
        LaneSpec(0, _lane_y(0), 0.0, 0.0, MIX_CAR_HEAVY, open=False),
        LaneSpec(1, _lane_y(1), 0.0, 2.8, MIX_JAM_RIGHT, fill_gap_mean=8.0),
        LaneSpec(2, _lane_y(2), 0.0, 2.8, MIX_JAM_OTHER, fill_gap_mean=8.0),
        LaneSpec(3, _lane_y(3), 0.0, 2.8, MIX_JAM_OTHER, fill_gap_mean=8.0),
    )
    return ScenarioConfig(
        name="traffic_jam", lanes=lanes, wave_platoon=110.0, wave_void=40.0
    )


SCENARIOS = {
    "christmas_eve": christmas_eve,
    "tuesday_morning": tuesday_morning,
    "traffic_jam": traffic_jam,
}


def resolve_scenario(scenario: "str | ScenarioConfig") -> ScenarioConfig:
    if isinstance(scenario, ScenarioConfig):
        return scenario
    try:
        return SCENARIOS[scenario]()
    except KeyError:
        raise KeyError(
            f"unknown scenario {scenario!r}; expected one of {sorted(SCENARIOS)}"
        ) from None
