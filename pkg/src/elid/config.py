"""Scenario configuration: JSON schema, loading, and preset resolution.

Precedence when resolving a scenario is flag > file > preset > default.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .geometry import MountModel
from .model import LidarSpec, RoadCorridor
from .netplan import FiberLink, NetworkPlan
from .presets import LIDAR_PRESETS, ROAD_PRESETS
from .sim import HeightClass, TrafficModel

SCHEMA_VERSION = 1

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


LIDAR_SCHEMA = _obj({
    "name": {"type": "string"},
    "hfov": _pos, "vfov": _pos, "max_range": _pos, "output_rate": _pos,
    "rotating": {"type": "boolean"}, "unit_cost": _nonneg, "frame_rate": _pos,
}, required=("hfov", "vfov", "max_range", "output_rate"))

ROAD_SCHEMA = _obj({
    "length": _num, "lanes": {"type": "integer"}, "lane_width": _num,
    "safety_margin": _num, "candidate_sites": {"type": "array", "items": _num},
})

CLASS_SCHEMA = _obj({
    "name": {"type": "string"}, "height": _pos, "length": _pos, "probability": _nonneg,
}, required=("height", "length", "probability"))

CONFIG_SCHEMA = _obj({
    "schema": {"const": SCHEMA_VERSION},
    "lidar": {"oneOf": [{"type": "string"}, LIDAR_SCHEMA]},
    "road": {"oneOf": [{"type": "string"}, ROAD_SCHEMA]},
    "mount": _obj({"tilt": {"type": ["number", "null"]}}),
    "placement": _obj({
        "method": {"enum": ["uniform", "greedy", "brute_force"]},
        "margin": _nonneg,
        "sites": {"type": "array", "items": _num},
    }),
    "network": _obj({
        "corridor_km": _pos,
        "trunk_capacity_bps": _pos,
        "propagation_speed": _pos,
        "elid_distance_km": _nonneg,
        "delay_budget_ms": _nonneg,
        "processing_budget_ms": _nonneg,
        "downlink_latency_ms": _nonneg,
        "density_per_km": _pos,
        "vehicles_per_km": _nonneg,
        "storage_seconds": _nonneg,
    }),
    "simulation": _obj({
        "seed": {"type": "integer"},
        "duration": _pos,
        "frame_rate": {"type": ["number", "null"]},
        "processing_delay_ms": {"oneOf": [
            _nonneg, {"type": "array", "items": _nonneg, "minItems": 2, "maxItems": 2}]},
        "access_link_capacity_bps": _pos,
        "decision_bits": _nonneg,
        "cl_servers": {"type": ["integer", "null"]},
        "cl_queue_limit": {"type": ["integer", "null"]},
        "allow_gaps": {"type": "boolean"},
        "traffic": _obj({
            "arrival_rate": {"type": ["number", "null"]},
            "density": {"type": ["number", "null"]},
            "speed_min": _nonneg,
            "speed_max": _nonneg,
            "classes": {"type": "array", "items": CLASS_SCHEMA, "minItems": 1},
        }),
    }),
}, required=("schema",))

DEFAULTS = {
    "schema": SCHEMA_VERSION,
    "lidar": "velarray",
    "road": "table1_road",
    "mount": {"tilt": None},
    "placement": {"method": "uniform", "margin": 0.0, "sites": []},
    "network": {
        "corridor_km": 100.0,
        "trunk_capacity_bps": 100e9,
        "propagation_speed": 204.0,
        "elid_distance_km": 100.0,
        "delay_budget_ms": 1.0,
        "processing_budget_ms": 100.0,
        "downlink_latency_ms": 1.0,
        "density_per_km": 5.0,
        "vehicles_per_km": 200.0,
        "storage_seconds": 86400.0,
    },
    "simulation": {
        "seed": None,
        "duration": 600.0,
        "frame_rate": None,
        "processing_delay_ms": 30.0,
        "access_link_capacity_bps": 1e9,
        "decision_bits": 10000.0,
        "cl_servers": None,
        "cl_queue_limit": None,
        "allow_gaps": False,
        "traffic": {
            "arrival_rate": 0.5,
            "density": None,
            "speed_min": 10.0,
            "speed_max": 20.0,
            "classes": [
                {"name": "car", "height": 1.5, "length": 4.5, "probability": 0.9},
                {"name": "truck", "height": 4.0, "length": 12.0, "probability": 0.1},
            ],
        },
    },
}


class ConfigError(ValueError):
    """Invalid scenario; ``str()`` is a single line anchored to the source."""


def _line_of(text, needle):
    if text is None or needle is None:
        return None
    pat = re.compile(r'"%s"\s*:' % re.escape(str(needle)))
    for i, line in enumerate(text.splitlines(), 1):
        if pat.search(line):
            return i
    return None


def _anchor(source, line, msg):
    if line is not None:
        return f"{source}:{line}: {msg}"
    return f"{source}: {msg}"


def validate(doc, source="<config>", text=None):
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if not errors:
        return
    err = errors[0]
    needle = None
    msg = err.message
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        needle = extra[0] if extra else None
        msg = f"unknown key {needle!r}"
        path = list(err.absolute_path)
        if path:
            msg += " in " + "/".join(str(p) for p in path)
    else:
        keys = [p for p in err.absolute_path if isinstance(p, str)]
        needle = keys[-1] if keys else None
        if keys:
            msg = "/".join(str(p) for p in err.absolute_path) + ": " + msg
    raise ConfigError(_anchor(source, _line_of(text, needle), msg))


def load_file(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}:1: top level must be an object")
    validate(doc, str(path), text)
    return doc


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _resolve_lidar(value):
    if isinstance(value, str):
        if value not in LIDAR_PRESETS:
            raise ConfigError(f"unknown lidar preset {value!r} (have {', '.join(LIDAR_PRESETS)})")
        s = LIDAR_PRESETS[value]
        return {"name": s.name, "hfov": s.hfov, "vfov": s.vfov, "max_range": s.max_range,
                "output_rate": s.output_rate, "rotating": s.rotating,
                "unit_cost": s.unit_cost, "frame_rate": s.frame_rate}
    return _merge({"name": "custom", "rotating": False, "unit_cost": 0.0, "frame_rate": 10.0}, value)


def _resolve_road(value):
    if isinstance(value, str):
        if value not in ROAD_PRESETS:
            raise ConfigError(f"unknown road preset {value!r} (have {', '.join(ROAD_PRESETS)})")
        return dict(ROAD_PRESETS[value]) | {"candidate_sites": []}
    return _merge(dict(ROAD_PRESETS["table1_road"]) | {"candidate_sites": []}, value)


def _load_road_file(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read road file: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    try:
        jsonschema.validate(doc, ROAD_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{path}: {exc.message}") from None
    return doc


def resolve(file_doc=None, *, preset=None, road=None, overrides=None):
    """Merge defaults, file, and flags into one fully expanded config dict."""
    doc = _merge(DEFAULTS, file_doc or {})
    if preset is not None:
        doc["lidar"] = preset
    if road is not None:
        if road in ROAD_PRESETS:
            doc["road"] = road
        else:
            doc["road"] = _load_road_file(road)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        node = doc
        *parents, leaf = dotted.split(".")
        for p in parents:
            node = node[p]
        node[leaf] = value
    doc["lidar"] = _resolve_lidar(doc["lidar"])
    doc["road"] = _resolve_road(doc["road"])
    return doc


@dataclass(frozen=True)
class Scenario:
    """Typed view of a resolved config dict."""

    raw: dict
    spec: LidarSpec
    corridor: RoadCorridor
    mount: MountModel

    @property
    def placement(self):
        return self.raw["placement"]

    @property
    def network(self):
        return self.raw["network"]

    @property
    def simulation(self):
        return self.raw["simulation"]

    def network_plan(self, n_elids):
        n = self.network
        trunk = FiberLink(max(n["corridor_km"], n["elid_distance_km"]),
                          n["trunk_capacity_bps"], n["propagation_speed"])
        return NetworkPlan(trunk, (n["elid_distance_km"],) * n_elids,
                           processing_budget=n["processing_budget_ms"],
                           downlink_latency=n["downlink_latency_ms"])

    def traffic(self):
        t = self.simulation["traffic"]
        classes = tuple(HeightClass(c.get("name", f"class{i}"), c["height"], c["length"],
                                    c["probability"]) for i, c in enumerate(t["classes"]))
        return TrafficModel(arrival_rate=t["arrival_rate"], density=t["density"],
                            speed_min=t["speed_min"], speed_max=t["speed_max"],
                            classes=classes)


def build(doc) -> Scenario:
    try:
        lid = doc["lidar"]
        spec = LidarSpec(lid["name"], lid["hfov"], lid["vfov"], lid["max_range"],
                         lid["output_rate"], lid["rotating"], lid["unit_cost"], lid["frame_rate"])
        r = doc["road"]
        corridor = RoadCorridor(r["length"], r["lanes"], r["lane_width"], r["safety_margin"],
                                tuple(r.get("candidate_sites", ())))
        mount = MountModel(doc["mount"]["tilt"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"<resolved config>: {exc}") from None
    return Scenario(doc, spec, corridor, mount)


def dumps(obj) -> str:
    """Canonical JSON used for every written artefact."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"
