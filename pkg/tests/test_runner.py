import json
import subprocess
import sys

import numpy as np
import pytest

from asaa.runner import (EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, RunSpec, aggregate, main,
                         parse_seeds, run)
from asaa.sim import preset_path

SHORT = {"name": "short", "bounds": {"min": [-2, -5, 0], "max": [12, 5, 3]},
         "robot_start": {"position": [0, 0, 1]}, "episode_length": 4, "robot_radius": 0.25,
         "goals": [{"position": [3, 0, 1], "radius": 0.3}],
         "dynamic_obstacles": [{"waypoints": [[2, -3], [2, 3]], "speed": 0.8, "radius": 0.3, "height": 1.8}]}


@pytest.fixture
def scenario(tmp_path):
    p = tmp_path / "short.json"
    p.write_text(json.dumps(SHORT))
    return p


def test_parse_seeds():
    assert parse_seeds("3") == [0, 1, 2]
    assert parse_seeds("4,9") == [4, 9]
    with pytest.raises(ValueError):
        parse_seeds("0")


def test_single_episode_aggregate(scenario, tmp_path):
    out = tmp_path / "one"
    report = run(RunSpec(str(scenario), ["velocity_yaw"], [0], out))
    files = list((out / "episodes").glob("*.json"))
    assert len(files) == 1
    ep = json.loads(files[0].read_text())
    agg = report["paradigms"]["velocity_yaw"]
    assert agg["n"] == 1
    assert agg["avg_speed"]["mean"] == ep["avg_speed"] and agg["avg_speed"]["std"] == 0.0
    assert (out / "aggregate.csv").exists()


def test_sweep_means_match_episode_files(scenario, tmp_path):
    out = tmp_path / "sweep"
    assert main(["run", "--scenario", str(scenario), "--paradigm", "asaa_rotatable,velocity_yaw",
                 "--seeds", "3", "--out", str(out), "--trace"]) == EXIT_OK
    eps = [json.loads(f.read_text()) for f in sorted((out / "episodes").glob("*.json"))]
    assert len(eps) == 6
    assert len(list((out / "episodes").glob("*_trace.csv"))) == 6
    report = json.loads((out / "aggregate.json").read_text())
    for p in ("asaa_rotatable", "velocity_yaw"):
        vals = [e["avg_speed"] for e in eps if e["paradigm"] == p]
        assert report["paradigms"][p]["avg_speed"]["mean"] == float(np.mean(vals))
        assert report["paradigms"][p]["avg_speed"]["std"] == float(np.std(vals))
    # Aggregation does not depend on episode order.
    assert aggregate(eps[::-1]) == aggregate(eps)


def test_reduction_percent():
    eps = [{"paradigm": "a", "seed": 0, "collisions_moving": 1, "avg_speed": 1.0},
           {"paradigm": "b", "seed": 0, "collisions_moving": 4, "avg_speed": 0.8}]
    rep = aggregate(eps)
    (r,) = [r for r in rep["reductions"] if r["candidate"] == "a" and r["metric"] == "collisions_moving"]
    assert r["baseline"] == "b" and r["reduction"] == pytest.approx(0.75)
    (g,) = [g for g in rep["speed_gain"] if g["candidate"] == "a"]
    assert g["gain"] == pytest.approx(0.25)


def test_street_sweep_reports_reduction(tmp_path, capsys):
    out = tmp_path / "street"
    code = main(["run", "--scenario", "pedestrian_street", "--paradigm", "asaa_rotatable,velocity_yaw",
                 "--seeds", "1", "--out", str(out), "--set", "sim.randomize_phase=true"])
    assert code == EXIT_OK
    rep = json.loads((out / "aggregate.json").read_text())
    pairs = {(r["candidate"], r["baseline"]) for r in rep["reductions"] if r["metric"] == "collisions_moving"}
    base = rep["paradigms"]["velocity_yaw"]["collisions_moving"]["mean"]
    assert base == 0 or ("asaa_rotatable", "velocity_yaw") in pairs


def test_exit_codes(scenario, tmp_path, capsys):
    assert main(["validate", str(preset_path("small_arena"))]) == EXIT_OK
    assert main(["validate", str(tmp_path / "missing.json")]) == EXIT_IO
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**SHORT, "robot_radius": -1}))
    assert main(["validate", str(bad)]) == EXIT_VALIDATION
    assert "robot_radius" in capsys.readouterr().err
    assert main(["run", "--scenario", str(bad), "--paradigm", "velocity_yaw", "--out", str(tmp_path / "x")]) \
        == EXIT_VALIDATION
    assert main(["run", "--scenario", str(scenario), "--paradigm", "telepathy",
                 "--out", str(tmp_path / "y")]) == EXIT_USAGE
    assert main(["run", "--scenario", str(scenario), "--paradigm", "velocity_yaw", "--set", "weights.nope=1",
                 "--out", str(tmp_path / "z")]) == EXIT_USAGE
    assert main(["run", "--scenario", str(tmp_path / "nope.json"), "--paradigm", "velocity_yaw",
                 "--out", str(tmp_path / "w")]) == EXIT_IO


def test_module_entry_point(scenario):
    proc = subprocess.run([sys.executable, "-m", "asaa", "validate", str(scenario)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "ok"
