import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from elid import config as cfgmod
from elid.cli import run
from elid.config import ConfigError

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(autouse=True)
def _no_color(monkeypatch):
    monkeypatch.setenv("ELID_NO_COLOR", "1")


def cli(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc, indent=1))
    return str(p)


def test_geometry_golden(capsys):
    code, out, _ = cli(capsys, "geometry", "--preset", "velarray", "--road", "table1_road")
    assert code == 0
    assert out == (GOLDEN / "geometry_velarray_table1_road.txt").read_text()


def test_geometry_values(capsys):
    _, out, _ = cli(capsys, "geometry", "--preset", "velarray", "--road", "table1_road")
    assert "elevation: 32.98 m" in out
    assert "total coverage: 394.52 m" in out
    assert "density: 5.07 sensors/km" in out
    _, out, _ = cli(capsys, "geometry", "--preset", "os1", "--road", "table1_road")
    assert "elevation: 36.75 m" in out


def test_missing_road_file(capsys, tmp_path):
    code, out, err = cli(capsys, "geometry", "--road", str(tmp_path / "nope.json"))
    assert code == 2
    assert out == ""
    assert err.startswith("error: ") and err.count("\n") == 1


def test_road_file(capsys, tmp_path):
    road = write(tmp_path, "road.json", {"length": 500.0, "lanes": 2, "lane_width": 3.5,
                                         "safety_margin": 1.0})
    code, out, _ = cli(capsys, "geometry", "--road", road)
    assert code == 0
    assert "road width: 9.00 m" in out


def test_unknown_key_rejected_with_line(capsys, tmp_path):
    text = '{\n  "schema": 1,\n  "network": {\n    "corridor_km": 100,\n    "fibre_colour": "blue"\n  }\n}\n'
    code, out, err = cli(capsys, "geometry", "--config", write(tmp_path, "c.json", text))
    assert code == 2
    assert out == ""
    assert ":5: unknown key 'fibre_colour'" in err


def test_invalid_json_line(capsys, tmp_path):
    code, _, err = cli(capsys, "geometry", "--config", write(tmp_path, "c.json", '{"schema": 1,\n,}'))
    assert code == 2
    assert "c.json:2: invalid JSON" in err


def test_schema_version_required(capsys, tmp_path):
    code, _, err = cli(capsys, "geometry", "--config", write(tmp_path, "c.json", {"schema": 2}))
    assert code == 2


def test_bad_argument_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["geometry", "--seed", "notanint"])
    assert exc.value.code == 2


def test_plan_uniform(capsys, tmp_path):
    code, out, _ = cli(capsys, "plan", "--out", str(tmp_path), "--svg")
    assert code == 0
    assert "units: 3, sensors: 6" in out
    doc = json.loads((tmp_path / "plan.json").read_text())
    assert doc["plan"]["total_sensors"] == 6
    assert doc["config"]["lidar"]["name"] == "velarray"
    for name in ("plan_side.svg", "plan_top.svg"):
        root = ET.fromstring((tmp_path / name).read_bytes())
        assert root.tag.endswith("svg") and root.get("version") == "1.1"


def test_svg_deterministic(capsys, tmp_path):
    cli(capsys, "plan", "--svg", "--out", str(tmp_path / "a"), "--config",
        write(tmp_path, "c.json", {"schema": 1, "mount": {"tilt": 20}}))
    cli(capsys, "plan", "--svg", "--out", str(tmp_path / "b"), "--config",
        str(tmp_path / "c.json"))
    for name in ("plan_side.svg", "plan_top.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_plan_sites_match_brute_force(capsys, tmp_path):
    sites = [0, 150, 300, 420, 610, 700, 880, 1000]
    outs = {}
    for method in ("greedy", "brute_force"):
        doc = {"schema": 1, "placement": {"method": method, "sites": sites}}
        code, _, _ = cli(capsys, "plan", "--out", str(tmp_path / method), "--config",
                         write(tmp_path, f"{method}.json", doc))
        assert code == 0
        outs[method] = json.loads((tmp_path / method / "plan.json").read_text())["plan"]
    assert outs["greedy"]["total_units"] == outs["brute_force"]["total_units"]


def test_plan_zero_length_corridor(capsys, tmp_path):
    doc = {"schema": 1, "road": {"length": 0}}
    code, out, err = cli(capsys, "plan", "--config", write(tmp_path, "c.json", doc))
    assert code == 2 and out == ""


def test_plan_strict_infeasible(capsys, tmp_path):
    doc = {"schema": 1, "placement": {"method": "greedy", "sites": [0, 50]}}
    path = write(tmp_path, "c.json", doc)
    code, out, _ = cli(capsys, "plan", "--config", path)
    assert code == 0 and "gaps: [247.26, 1000.00]" in out
    code, _, _ = cli(capsys, "plan", "--config", path, "--strict")
    assert code == 3


def test_netbudget_defaults(capsys, tmp_path):
    code, out, _ = cli(capsys, "netbudget", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads((tmp_path / "netbudget.json").read_text())["netbudget"]
    assert rep["aggregate_bps"] == 50e9
    assert rep["one_way_delay_ms"] == pytest.approx(0.490, abs=0.001)
    assert rep["redundancy_factor"] == 40
    assert "aggregate: 50.000 Gbps" in out
    assert "redundancy: 40x" in out


def test_netbudget_small_trunk_infeasible(capsys, tmp_path):
    doc = {"schema": 1, "network": {"trunk_capacity_bps": 40e9}}
    code, out, _ = cli(capsys, "netbudget", "--config", write(tmp_path, "c.json", doc))
    assert code == 0
    assert "(infeasible)" in out


def test_netbudget_204km_at_budget(capsys, tmp_path):
    doc = {"schema": 1, "network": {"corridor_km": 204, "elid_distance_km": 204}}
    code, out, _ = cli(capsys, "netbudget", "--out", str(tmp_path), "--config",
                       write(tmp_path, "c.json", doc))
    rep = json.loads((tmp_path / "netbudget.json").read_text())["netbudget"]
    assert rep["one_way_delay_ms"] == pytest.approx(1.0, rel=1e-15)
    assert rep["one_way_within_budget"]
    assert "one-way 1.000 ms" in out


def test_simulate_requires_seed(capsys):
    code, out, err = cli(capsys, "simulate", "--duration", "1")
    assert code == 2 and "--seed" in err and out == ""


def test_simulate_outputs_and_determinism(capsys, tmp_path):
    args = ["simulate", "--seed", "5", "--duration", "30"]
    code, out, _ = cli(capsys, *args, "--out", str(tmp_path / "a"))
    assert code == 0
    assert "mean < 100 ms: PASS" in out
    cli(capsys, *args, "--out", str(tmp_path / "b"))
    for name in ("summary.json", "frames.csv", "visibility.csv", "occlusion_strip.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    raw = (tmp_path / "a" / "summary.json").read_text()
    assert cfgmod.dumps(json.loads(raw)) == raw
    frames = (tmp_path / "a" / "frames.csv").read_bytes().split(b"\r\n")
    assert frames[0].startswith(b"frame_id,elid_id,event_time")
    assert len([r for r in frames if r]) == 1 + 900


def test_simulate_seed_from_config(capsys, tmp_path):
    doc = {"schema": 1, "simulation": {"seed": 3, "duration": 5}}
    code, _, _ = cli(capsys, "simulate", "--config", write(tmp_path, "c.json", doc))
    assert code == 0


def test_simulate_low_frame_rate_fails(capsys, tmp_path):
    code, out, _ = cli(capsys, "simulate", "--seed", "1", "--frame-rate", "2",
                       "--out", str(tmp_path))
    assert code == 0
    res = json.loads((tmp_path / "summary.json").read_text())
    assert res["summary"]["stage_mean_ms"]["sensing_wait"] == pytest.approx(250, abs=10)
    assert not res["latency"]["mean_within_budget"]
    assert "mean < 100 ms: FAIL" in out


def test_simulate_sweep(capsys, tmp_path):
    code, out, _ = cli(capsys, "simulate", "--seed", "1", "--duration", "5",
                       "--sweep", "frame_rate=2,10", "--out", str(tmp_path))
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("frame_rate=2:") and lines[0].endswith("FAIL")
    assert lines[1].startswith("frame_rate=10:") and lines[1].endswith("PASS")
    assert (tmp_path / "sweep_frame_rate_10" / "summary.json").exists()


def test_sweep_bad_field(capsys):
    code, _, err = cli(capsys, "simulate", "--seed", "1", "--sweep", "colour=1,2")
    assert code == 2


def test_precedence_flag_over_file(tmp_path):
    doc = {"schema": 1, "lidar": "os1", "simulation": {"seed": 4}}
    merged = cfgmod.resolve(doc, preset="velarray", overrides={"simulation.seed": 9})
    assert merged["lidar"]["name"] == "velarray"
    assert merged["simulation"]["seed"] == 9
    merged = cfgmod.resolve(doc)
    assert merged["lidar"]["name"] == "os1"
    assert merged["simulation"]["seed"] == 4


def test_unknown_preset():
    with pytest.raises(ConfigError):
        cfgmod.resolve(None, preset="hdl64")


def test_custom_lidar_object():
    doc = {"schema": 1, "lidar": {"hfov": 90, "vfov": 40, "max_range": 150, "output_rate": 5e7}}
    cfgmod.validate(doc)
    sc = cfgmod.build(cfgmod.resolve(doc))
    assert sc.spec.hfov == 90 and sc.spec.rotating is False


def test_color_only_on_tty(monkeypatch, capsys):
    monkeypatch.delenv("ELID_NO_COLOR")
    _, out, _ = cli(capsys, "netbudget")
    assert "\033[" not in out
