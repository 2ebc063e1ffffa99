"""Command-line front end: JSON config ingestion, subcommands, CSV emission.

Subcommands: ``coverage-map`` (grid oracle over one period cell plus analytic
coverage predicates), ``boundary`` (analytic vs numeric sweep over an
(omega, r) grid), ``simulate`` (completeness runs and aggregates), and
``validate`` (config check only).  Exit codes: 0 success, 2 config error,
3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .coverage import boundary_mismatches, boundary_sweep, build_grid
from .geometry import (
    SensorFieldConfig,
    covered_with_degree,
    max_rotation_alpha,
)
from .experiments import PIPELINES, SimulationTimeout, SweepSpec, sweep
from .tracking import TrackerParams
from .traffic import SCENARIOS, LaneSpec, ScenarioConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _require(doc: dict, path: str, key: str):
    if key not in doc:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
    return doc[key]


def _check_keys(doc: dict, path: str, allowed: set[str]) -> None:
    if not isinstance(doc, dict):
        raise ConfigError(path or "<root>", "expected a JSON object")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(path or "<root>", f"unknown keys {sorted(unknown)}")


def _number(doc: dict, path: str, key: str, default=None):
    if key not in doc:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing required key")
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}", "expected a number")
    return float(value)


SENSOR_KEYS = {
    "range_r", "opening_omega", "rotation_alpha", "alpha_rule",
    "sensor_to_road_dsr", "sensor_spacing_dpyl", "road_width_droad",
}


def parse_sensor_field(doc: dict, path: str = "sensor_field") -> tuple[SensorFieldConfig, str]:
    """Returns the config plus the alpha rule ('fixed' or 'max_rotation')."""
    _check_keys(doc, path, SENSOR_KEYS)
    omega = _number(doc, path, "opening_omega")
    rule = doc.get("alpha_rule", "fixed" if "rotation_alpha" in doc else "max_rotation")
    if rule not in ("fixed", "max_rotation"):
        raise ConfigError(f"{path}.alpha_rule", "must be 'fixed' or 'max_rotation'")
    if rule == "max_rotation":
        if doc.get("rotation_alpha") is not None:
            raise ConfigError(
                f"{path}.rotation_alpha",
                "must be omitted when alpha_rule is 'max_rotation'",
            )
        alpha = max_rotation_alpha(omega)
    else:
        alpha = _number(doc, path, "rotation_alpha")
    cfg = SensorFieldConfig(
        range_r=_number(doc, path, "range_r"),
        opening_omega=omega,
        rotation_alpha=alpha,
        sensor_to_road_dsr=_number(doc, path, "sensor_to_road_dsr"),
        sensor_spacing_dpyl=_number(doc, path, "sensor_spacing_dpyl"),
        road_width_droad=_number(doc, path, "road_width_droad"),
    )
    bad = cfg.violations()
    if bad:
        raise ConfigError(path, "; ".join(bad))
    return cfg, rule


LANE_KEYS = {"index", "center_y", "flow_veh_per_hour", "speed", "class_mix",
             "open", "fill_gap_mean"}
SCENARIO_KEYS = {"name", "lanes", "segment_length", "seed", "duration",
                 "dt_radar", "dt_vision", "target_vehicle_count", "initial_vehicles"}


def parse_scenario(doc, path: str = "scenario") -> ScenarioConfig:
    if isinstance(doc, str):
        if doc not in SCENARIOS:
            raise ConfigError(path, f"unknown scenario {doc!r}; expected one of {sorted(SCENARIOS)}")
        return SCENARIOS[doc]()
    _check_keys(doc, path, SCENARIO_KEYS)
    lanes = []
    for i, lane_doc in enumerate(_require(doc, path, "lanes")):
        lane_path = f"{path}.lanes[{i}]"
        _check_keys(lane_doc, lane_path, LANE_KEYS)
        mix = _require(lane_doc, lane_path, "class_mix")
        if not isinstance(mix, dict):
            raise ConfigError(f"{lane_path}.class_mix", "expected an object")
        gap = lane_doc.get("fill_gap_mean")
        lanes.append(
            LaneSpec(
                index=int(_number(lane_doc, lane_path, "index")),
                center_y=_number(lane_doc, lane_path, "center_y"),
                flow_veh_per_hour=_number(lane_doc, lane_path, "flow_veh_per_hour", 0.0),
                speed=_number(lane_doc, lane_path, "speed"),
                class_mix={str(k): float(v) for k, v in mix.items()},
                open=bool(lane_doc.get("open", True)),
                fill_gap_mean=None if gap is None else float(gap),
            )
        )
    initial = tuple(
        (int(lane), str(cls), float(x))
        for lane, cls, x in doc.get("initial_vehicles", ())
    )
    return ScenarioConfig(
        name=str(doc.get("name", "inline")),
        lanes=tuple(lanes),
        segment_length=_number(doc, path, "segment_length", 500.0),
        seed=int(_number(doc, path, "seed", 0.0)),
        duration=_number(doc, path, "duration", 3600.0),
        dt_radar=_number(doc, path, "dt_radar", 0.1),
        dt_vision=_number(doc, path, "dt_vision", 0.05),
        target_vehicle_count=int(_number(doc, path, "target_vehicle_count", 100.0)),
        initial_vehicles=initial,
    )


def _parse_axis(doc, path: str) -> tuple[float, ...]:
    if isinstance(doc, list):
        if not doc:
            raise ConfigError(path, "axis must be non-empty")
        return tuple(float(v) for v in doc)
    if isinstance(doc, dict):
        _check_keys(doc, path, {"start", "stop", "step"})
        start = _number(doc, path, "start")
        stop = _number(doc, path, "stop")
        step = _number(doc, path, "step")
        if step <= 0 or stop < start:
            raise ConfigError(path, "need step > 0 and stop >= start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(n))
    raise ConfigError(path, "expected a list of values or {start, stop, step}")


SWEEP_KEYS = {"omega", "r"}
TRACKER_KEYS = {"sigma_accel", "meas_sigma", "confirm_hits", "confirm_window",
                "coast_limit", "gate", "linkage"}
TOP_KEYS = {"sensor_field", "cell_size", "sweep", "n_max", "scenario",
            "pipelines", "seeds", "target_vehicle_count", "tracker"}


def parse_tracker(doc: dict, path: str = "tracker") -> dict:
    _check_keys(doc, path, TRACKER_KEYS)
    out = {}
    for key in ("sigma_accel", "meas_sigma", "gate", "linkage"):
        if key in doc:
            out[key] = _number(doc, path, key)
    for key in ("confirm_hits", "confirm_window", "coast_limit"):
        if key in doc:
            out[key] = int(_number(doc, path, key))
    return out


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("<config>", f"file not found: {path}")
    except json.JSONDecodeError as err:
        raise ConfigError("<config>", f"invalid JSON: {err}")
    _check_keys(doc, "", TOP_KEYS)
    return doc


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    """UTF-8, LF line endings, '.' decimal separator; floats keep full
    round-trip precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def read_csv(path: Path) -> tuple[list[str], list[dict[str, str]]]:
    """Round-trip reader for every CSV this tool writes."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return list(reader.fieldnames or []), list(reader)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_coverage_map(args) -> int:
    doc = load_config(args.config)
    cfg, _ = parse_sensor_field(_require(doc, "", "sensor_field"))
    cell = _number(doc, "", "cell_size", 0.25)
    grid = build_grid(cfg, cell)
    out = _out_dir(args)
    rows = []
    xs, ys = grid.x_centers(), grid.y_centers()
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            rows.append([float(x), float(y), int(grid.degrees[i, j])])
    write_csv(out / "coverage_grid.csv", ["x_m", "y_m", "degree"], rows)
    analytic = [[n, int(covered_with_degree(cfg, n))] for n in (1, 2, 3)]
    write_csv(out / "coverage_analytic.csv", ["n", "covered"], analytic)
    print(f"wrote {len(rows)} grid cells to {out / 'coverage_grid.csv'}")
    print(f"analytic coverage n=1..3: {[bool(c) for _, c in analytic]}")
    return EXIT_OK


def cmd_boundary(args) -> int:
    doc = load_config(args.config)
    cfg_base, rule = parse_sensor_field(_require(doc, "", "sensor_field"))
    sweep_doc = _require(doc, "", "sweep")
    _check_keys(sweep_doc, "sweep", SWEEP_KEYS)
    omegas = _parse_axis(_require(sweep_doc, "sweep", "omega"), "sweep.omega")
    rs = _parse_axis(_require(sweep_doc, "sweep", "r"), "sweep.r")
    n_max = int(_number(doc, "", "n_max", 3.0))
    cell = _number(doc, "", "cell_size", 0.25)
    grid_points = [(omega, r) for omega in omegas for r in rs]
    rows = boundary_sweep(grid_points, cfg_base, n_max=n_max, cell_size=cell, alpha_rule=rule)
    out = _out_dir(args)
    header = ["omega_rad", "r_m"] + [f"analytic_n{n}" for n in range(1, n_max + 1)] + [
        "numeric_min_degree"
    ]
    table = [
        [row.omega, row.r] + [int(flag) for flag in row.analytic] + [row.numeric_min_degree]
        for row in rows
    ]
    write_csv(out / "boundary.csv", header, table)
    mismatches = boundary_mismatches(rows, cfg_base, alpha_rule=rule)
    dists = ", ".join(f"{m.boundary_distance:.3f} m" for m in mismatches)
    print(f"wrote {len(rows)} sweep points to {out / 'boundary.csv'}")
    print(
        f"analytic/numeric mismatches: {len(mismatches)}"
        + (f" (boundary distances: {dists})" if mismatches else "")
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc = load_config(args.config)
    cfg_base, rule = parse_sensor_field(_require(doc, "", "sensor_field"))
    scenario = parse_scenario(_require(doc, "", "scenario"))
    if "target_vehicle_count" in doc:
        from dataclasses import replace as dc_replace
        scenario = dc_replace(
            scenario, target_vehicle_count=int(_number(doc, "", "target_vehicle_count"))
        )
    bad = scenario.violations(cfg_base.road_band)
    if bad:
        raise ConfigError("scenario", "; ".join(bad))
    pipelines = doc.get("pipelines", ["vision"])
    if not isinstance(pipelines, list) or not pipelines:
        raise ConfigError("pipelines", "expected a non-empty list")
    for p in pipelines:
        if p not in PIPELINES:
            raise ConfigError("pipelines", f"unknown pipeline {p!r}; expected subset of {list(PIPELINES)}")
    if args.seeds:
        seeds = tuple(int(s) for s in args.seeds.split(","))
    else:
        seeds = tuple(int(s) for s in doc.get("seeds", [0]))
    if "sweep" in doc:
        _check_keys(doc["sweep"], "sweep", SWEEP_KEYS)
        omegas = _parse_axis(_require(doc["sweep"], "sweep", "omega"), "sweep.omega")
        rs = _parse_axis(_require(doc["sweep"], "sweep", "r"), "sweep.r")
    else:
        omegas = (cfg_base.opening_omega,)
        rs = (cfg_base.range_r,)

    tracker_params = None
    tracker_doc = parse_tracker(doc.get("tracker", {}))
    if tracker_doc or args.strict_id_credit:
        tracker_params = TrackerParams(
            strict_id_credit=args.strict_id_credit, **tracker_doc
        )

    spec = SweepSpec(
        r_values=rs,
        omega_values=omegas,
        scenarios=(scenario,),
        pipelines=tuple(pipelines),
        seeds=seeds,
        alpha_rule=rule,
    )
    runs, aggregates = sweep(spec, cfg_base, tracker_params=tracker_params, jobs=args.jobs)

    out = _out_dir(args)
    write_csv(
        out / "runs.csv",
        ["scenario", "pipeline", "omega_rad", "r_m", "alpha_rad", "seed",
         "time_avg_completeness", "steps_counted", "flag_zero_gt"],
        [[r.scenario, r.pipeline, r.omega, r.r, r.alpha, r.seed,
          r.time_avg_completeness, r.steps_counted, int(r.flag_zero_gt)] for r in runs],
    )
    write_csv(
        out / "aggregate.csv",
        ["scenario", "pipeline", "omega_rad", "r_m", "alpha_rad", "n_seeds",
         "mean_completeness", "std_completeness"],
        [[a.scenario, a.pipeline, a.omega, a.r, a.alpha, a.n_seeds,
          a.mean_completeness, a.std_completeness] for a in aggregates],
    )
    print(f"wrote {len(runs)} runs to {out / 'runs.csv'}")
    print(f"{'scenario':16s} {'pipeline':15s} {'omega_deg':>9s} {'r_m':>7s} "
          f"{'mean':>7s} {'std':>7s} {'seeds':>5s}")
    for a in aggregates:
        print(f"{a.scenario:16s} {a.pipeline:15s} {math.degrees(a.omega):9.1f} "
              f"{a.r:7.1f} {a.mean_completeness:7.4f} {a.std_completeness:7.4f} "
              f"{a.n_seeds:5d}")
    return EXIT_OK


def cmd_validate(args) -> int:
    problems = []
    try:
        doc = load_config(args.config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = None
    try:
        cfg, _ = parse_sensor_field(_require(doc, "", "sensor_field"))
    except ConfigError as err:
        problems.append(str(err))
    if "scenario" in doc:
        try:
            scenario = parse_scenario(doc["scenario"])
            band = cfg.road_band if cfg is not None else None
            problems.extend(
                f"scenario: {v}" for v in scenario.violations(band)
            )
        except ConfigError as err:
            problems.append(str(err))
    if "sweep" in doc:
        try:
            _check_keys(doc["sweep"], "sweep", SWEEP_KEYS)
            for axis in ("omega", "r"):
                if axis in doc["sweep"]:
                    _parse_axis(doc["sweep"][axis], f"sweep.{axis}")
        except ConfigError as err:
            problems.append(str(err))
    if "tracker" in doc:
        try:
            parse_tracker(doc["tracker"])
        except ConfigError as err:
            problems.append(str(err))
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    print("config ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensorfield",
        description="Design and evaluate periodic roadside sensor arrays.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler, needs_sim_flags in (
        ("coverage-map", cmd_coverage_map, False),
        ("boundary", cmd_boundary, False),
        ("simulate", cmd_simulate, True),
        ("validate", cmd_validate, False),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default="out", help="output directory")
        if needs_sim_flags:
            p.add_argument("--seeds", default=None,
                           help="comma-separated seed list (overrides config)")
            p.add_argument("--jobs", type=int, default=1,
                           help="parallel sweep workers")
            p.add_argument("--strict-id-credit", action="store_true",
                           help="credit a track only with its nearest source vehicle")
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationTimeout as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
