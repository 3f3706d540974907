"""``elid`` command line: geometry, plan, netbudget, simulate.

Exit codes: 0 success, 2 configuration error, 3 infeasible plan with --strict.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as cfgmod
from .config import ConfigError, dumps
from .geometry import (
    along_road_coverage,
    blind_zone,
    required_elevation,
    sensor_density,
    total_coverage,
)
from .model import road_width
from .netplan import FiberLink, backhaul_budget, format_bytes
from .placement import brute_force_cover, greedy_site_cover, uniform_plan
from .sim import SimConfig, latency_report, run_sim, visibility_report
from .svg import side_view, top_view

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3


def _color(text, code):
    if os.environ.get("ELID_NO_COLOR") is not None or not sys.stdout.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _flag(ok):
    return _color("PASS", "32") if ok else _color("FAIL", "31")


def _config_line(doc):
    return "config: " + json.dumps(doc, sort_keys=True, separators=(",", ":"))


def geometry_report(sc):
    width = road_width(sc.corridor)
    elevation = required_elevation(sc.spec, width)
    return {
        "sensor": sc.spec.name,
        "rotating": sc.spec.rotating,
        "sensors_per_elid": sc.spec.sensors_per_elid,
        "mount": sc.mount.policy,
        "road_width_m": width,
        "elevation_m": elevation,
        "reach_per_direction_m": along_road_coverage(sc.spec, elevation, sc.mount),
        "blind_zone_per_direction_m": blind_zone(sc.spec, elevation, sc.mount),
        "total_coverage_m": total_coverage(sc.spec, elevation, sc.mount),
        "density_per_km": sensor_density(sc.spec, elevation, sc.mount),
    }


def _geometry_text(rep, doc):
    kind = "rotating" if rep["rotating"] else "staring"
    return "\n".join([
        "elid geometry",
        f"sensor: {rep['sensor']} ({kind}, {rep['sensors_per_elid']} sensor(s) per ELiD)",
        f"mount: {rep['mount']}",
        f"road width: {rep['road_width_m']:.2f} m",
        f"elevation: {rep['elevation_m']:.2f} m",
        f"coverage per direction: {rep['reach_per_direction_m']:.2f} m",
        f"blind zone per direction: {rep['blind_zone_per_direction_m']:.2f} m",
        f"total coverage: {rep['total_coverage_m']:.2f} m",
        f"density: {rep['density_per_km']:.2f} sensors/km",
        _config_line(doc),
    ]) + "\n"


def make_plan(sc):
    p = sc.placement
    method = p["method"]
    if method == "uniform":
        return uniform_plan(sc.spec, sc.corridor, sc.mount, p["margin"])
    sites = p["sites"] or list(sc.corridor.candidate_sites)
    if method == "greedy":
        return greedy_site_cover(sc.spec, sc.corridor, sc.mount, sites)
    return brute_force_cover(sc.spec, sc.corridor, sc.mount, sites)


def plan_report(plan):
    return {
        "units": [{"position_m": u.position, "elevation_m": u.elevation, "sensors": u.sensors}
                  for u in plan.units],
        "total_units": plan.total_units,
        "total_sensors": plan.total_sensors,
        "total_cost": plan.total_cost,
        "redundancy_margin_m": plan.redundancy_margin,
        "gaps": [list(g) for g in plan.gaps],
        "feasible": plan.feasible,
    }


def _plan_text(rep, method, doc):
    lines = ["elid plan", f"method: {method}",
             f"units: {rep['total_units']}, sensors: {rep['total_sensors']}, "
             f"cost: {rep['total_cost']:.2f}"]
    for i, u in enumerate(rep["units"]):
        lines.append(f"  unit {i}: position {u['position_m']:.2f} m, "
                     f"elevation {u['elevation_m']:.2f} m, {u['sensors']} sensor(s)")
    if rep["gaps"]:
        lines.append("gaps: " + ", ".join(f"[{a:.2f}, {b:.2f}]" for a, b in rep["gaps"]))
    lines.append(f"feasible: {_flag(rep['feasible'])}")
    lines.append(_config_line(doc))
    return "\n".join(lines) + "\n"


def netbudget_report(sc):
    n = sc.network
    trunk = FiberLink(max(n["corridor_km"], n["elid_distance_km"]), n["trunk_capacity_bps"],
                      n["propagation_speed"])
    rep = backhaul_budget(density=n["density_per_km"], corridor_km=n["corridor_km"],
                          per_sensor_rate=sc.spec.output_rate, trunk=trunk,
                          delay_budget=n["delay_budget_ms"],
                          vehicles_per_km=n["vehicles_per_km"],
                          storage_seconds=n["storage_seconds"])
    elevation = required_elevation(sc.spec, road_width(sc.corridor))
    rep["geometry_density_per_km"] = sensor_density(sc.spec, elevation, sc.mount)
    return rep


def _netbudget_text(rep, doc):
    return "\n".join([
        "elid netbudget",
        f"aggregate: {rep['aggregate_bps'] / 1e9:.3f} Gbps "
        f"({rep['density_per_km']:g} sensors/km x {rep['corridor_km']:g} km x "
        f"{rep['per_sensor_rate_bps'] / 1e6:g} Mbps)",
        f"geometry density: {rep['geometry_density_per_km']:.2f} sensors/km",
        f"trunk utilization: {100 * rep['trunk_utilization']:.1f}% "
        f"of {rep['trunk_capacity_bps'] / 1e9:g} Gbps ({rep['trunk_status']})",
        f"propagation: one-way {rep['one_way_delay_ms']:.3f} ms, "
        f"round-trip {rep['round_trip_delay_ms']:.3f} ms at "
        f"{rep['propagation_speed_km_per_ms']:g} km/ms",
        f"delay budget {rep['delay_budget_ms']:g} ms: one-way {_flag(rep['one_way_within_budget'])}, "
        f"round-trip {_flag(rep['round_trip_within_budget'])}",
        f"reach within budget: {rep['reach_km_for_budget']:.1f} km",
        f"storage: {format_bytes(rep['storage_bytes'])} per {rep['storage_seconds']:g} s",
        f"redundancy: {rep['redundancy_factor']:g}x "
        f"({rep['vehicles_per_km']:g} vehicles/km vs {rep['density_per_km']:g} sensors/km)",
        _config_line(doc),
    ]) + "\n"


def sim_config(sc):
    s = sc.simulation
    if s["seed"] is None:
        raise ConfigError("simulate: --seed is required unless simulation.seed is in the config")
    plan = make_plan(sc)
    proc = s["processing_delay_ms"]
    return SimConfig(
        corridor=sc.corridor, plan=plan, net=sc.network_plan(len(plan.units)),
        rng_seed=s["seed"], traffic=sc.traffic(), frame_rate=s["frame_rate"],
        processing_delay=tuple(proc) if isinstance(proc, list) else proc,
        access_link_capacity=s["access_link_capacity_bps"], sim_duration=s["duration"],
        decision_bits=s["decision_bits"], cl_servers=s["cl_servers"],
        cl_queue_limit=s["cl_queue_limit"], allow_gaps=s["allow_gaps"])


def simulate_result(doc):
    """Run one scenario; returns (summary document, trace)."""
    sc = cfgmod.build(doc)
    trace = run_sim(sim_config(sc))
    lat = latency_report(trace)
    vis = visibility_report(trace)
    out = {
        "config": doc,
        "summary": trace.summary,
        "latency": lat,
        "visibility": {k: vis[k] for k in ("vehicle_frames", "unobserved_fraction",
                                           "unobserved_total_fraction")},
    }
    return out, trace, vis


def _sweep_worker(doc):
    return simulate_result(doc)[0]


def _simulate_text(res):
    s, lat = res["summary"], res["latency"]
    r = s["reaction_ms"]
    st = s["stage_mean_ms"]
    frac = s["visibility"]["unobserved_fraction"]
    return "\n".join([
        "elid simulate",
        f"frames: captured {s['frames']['captured']}, delivered {s['frames']['delivered']}, "
        f"dropped {s['frames']['dropped']}",
        f"reaction ms: mean {r['mean']:.2f}, p50 {r['p50']:.2f}, p95 {r['p95']:.2f}, "
        f"p99 {r['p99']:.2f}, max {r['max']:.2f}",
        f"closed-form mean: {lat['closed_form_mean_ms']:.2f} ms",
        "stage means ms: " + ", ".join(f"{k} {v:.3f}" for k, v in st.items()),
        f"vehicle-frames: {s['visibility']['vehicle_frames']}, unobserved: "
        + ", ".join(f"{k} {100 * v:.2f}%" for k, v in frac.items()),
        f"mean < {lat['budget_ms']:g} ms: {_flag(lat['mean_within_budget'])}",
        f"worst < {lat['human_band_ms'][1]:g} ms: {_flag(lat['worst_within_human_band'])}",
        f"processing stage < {lat['budget_ms']:g} ms: {_flag(lat['processing_within_budget'])}",
    ]) + "\n"


FRAME_COLUMNS = ("frame_id", "elid_id", "event_time", "capture_time", "size",
                 "serialize_start", "serialize_done", "arrive_cl", "process_start",
                 "decision_done", "downlink_done", "dropped")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def write_frames_csv(path, frames):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FRAME_COLUMNS)
        for f in frames:
            w.writerow([_cell(getattr(f, c)) for c in FRAME_COLUMNS])


def write_visibility_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("time", "vehicle_id", "position", "observed", "cause"))
        for r in records:
            w.writerow((repr(r.time), r.vehicle_id, repr(r.position), int(r.observed),
                        r.cause or ""))


def write_strip_csv(path, vis):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("bin_start_m", "vehicle_frames", "occluded", "frequency"))
        size = vis["bin_size_m"]
        for i, (n, o, f) in enumerate(zip(vis["strip_counts"], vis["strip_occluded"],
                                          vis["strip_frequency"])):
            if n:
                w.writerow((f"{i * size:.1f}", int(n), int(o), repr(float(f))))


def _parse_sweep(text):
    if not text or "=" not in text:
        raise ConfigError(f"--sweep expects FIELD=v1,v2,..., got {text!r}")
    field, values = text.split("=", 1)
    if field not in cfgmod.DEFAULTS["simulation"] or field == "traffic":
        raise ConfigError(f"--sweep: unknown simulation field {field!r}")
    try:
        vals = [json.loads(v) for v in values.split(",")]
    except json.JSONDecodeError:
        raise ConfigError(f"--sweep: values must be numbers, got {values!r}") from None
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
        raise ConfigError("--sweep: values must be numbers")
    return field, vals


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file")
    common.add_argument("--preset", help="lidar preset name (velarray, os1)")
    common.add_argument("--road", help="road preset name or road JSON file")
    common.add_argument("--out", help="directory for written artefacts")
    common.add_argument("--seed", type=int, help="simulation seed")
    common.add_argument("--strict", action="store_true", help="exit 3 on infeasible plans")
    common.add_argument("--svg", action="store_true", help="emit SVG diagrams (plan)")
    common.add_argument("--method", choices=("uniform", "greedy", "brute_force"))
    common.add_argument("--margin", type=float, help="redundancy margin, m")
    common.add_argument("--frame-rate", type=float, help="capture rate, Hz")
    common.add_argument("--duration", type=float, help="simulated seconds")
    common.add_argument("--sweep", help="simulate: FIELD=v1,v2,... over a simulation field")
    parser = argparse.ArgumentParser(prog="elid", description="Elevated LiDAR planning toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("geometry", "mounting geometry and sensor density"),
                       ("plan", "place masts along the corridor"),
                       ("netbudget", "fibre backhaul budget"),
                       ("simulate", "discrete-event simulation of the control loop")):
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _resolve(args):
    file_doc = cfgmod.load_file(args.config) if args.config else None
    overrides = {
        "simulation.seed": args.seed,
        "simulation.frame_rate": args.frame_rate,
        "simulation.duration": args.duration,
        "placement.method": args.method,
        "placement.margin": args.margin,
    }
    doc = cfgmod.resolve(file_doc, preset=args.preset, road=args.road, overrides=overrides)
    return doc, cfgmod.build(doc)


def _write(out, name, text):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def run(argv=None):
    args = build_parser().parse_args(argv)
    out = Path(args.out) if args.out else None
    try:
        doc, sc = _resolve(args)
        if args.command == "geometry":
            rep = geometry_report(sc)
            text = _geometry_text(rep, doc)
            if out:
                _write(out, "geometry.json", dumps({"config": doc, "geometry": rep}))
            sys.stdout.write(text)
            return EXIT_OK
        if args.command == "plan":
            plan = make_plan(sc)
            rep = plan_report(plan)
            text = _plan_text(rep, sc.placement["method"], doc)
            if out:
                _write(out, "plan.json", dumps({"config": doc, "plan": rep}))
            if args.svg:
                target = out or Path(".")
                if plan.units:
                    mid = plan.units[len(plan.units) // 2]
                    _write(target, "plan_side.svg", side_view(mid, sc.corridor, plan.mount))
                _write(target, "plan_top.svg", top_view(plan, sc.corridor))
            sys.stdout.write(text)
            if args.strict and not plan.feasible:
                return EXIT_INFEASIBLE
            return EXIT_OK
        if args.command == "netbudget":
            rep = netbudget_report(sc)
            if out:
                _write(out, "netbudget.json", dumps({"config": doc, "netbudget": rep}))
            sys.stdout.write(_netbudget_text(rep, doc))
            return EXIT_OK
        return _cmd_simulate(args, doc, sc, out)
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


def _cmd_simulate(args, doc, sc, out):
    if args.sweep:
        field, values = _parse_sweep(args.sweep)
        docs = []
        for v in values:
            d = json.loads(json.dumps(doc))
            d["simulation"][field] = v
            cfgmod.build(d)
            docs.append(d)
        with ProcessPoolExecutor(max_workers=min(len(docs), os.cpu_count() or 1)) as pool:
            results = list(pool.map(_sweep_worker, docs))
        for v, res in zip(values, results):
            r = res["summary"]["reaction_ms"]
            sys.stdout.write(f"{field}={v:g}: mean {r['mean']:.2f} ms, max {r['max']:.2f} ms, "
                             f"{_flag(res['latency']['pass'])}\n")
            if out:
                _write(out / f"sweep_{field}_{v:g}", "summary.json", dumps(res))
        return EXIT_OK
    if sc.simulation["seed"] is None:
        raise ConfigError("simulate: --seed is required unless simulation.seed is in the config")
    res, trace, vis = simulate_result(doc)
    if out:
        _write(out, "summary.json", dumps(res))
        write_frames_csv(out / "frames.csv", trace.frames)
        write_visibility_csv(out / "visibility.csv", trace.visibility)
        write_strip_csv(out / "occlusion_strip.csv", vis)
    sys.stdout.write(_simulate_text(res))
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
