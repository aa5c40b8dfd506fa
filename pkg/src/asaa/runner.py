"""Batch experiments: seed sweeps per paradigm, aggregate tables, scenario validation.

Usage::

    python -m asaa run --scenario pedestrian_street --paradigm asaa_rotatable,velocity_yaw \\
        --seeds 20 --out results/street
    python -m asaa validate my_scenario.json

``--scenario`` accepts a file path or the name of a shipped preset.

Exit codes: 0 ok, 2 scenario validation failure, 3 I/O error, 4 internal
error, 5 unknown paradigm or bad argument.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import parse_override
from .errors import InvalidArgument, ScenarioError
from .sim.episode import episode_config, run_episode
from .sim.paradigms import PARADIGMS, parse_paradigm
from .sim.scenario import load_scenario, preset_path, validate_document

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_INTERNAL = 4
EXIT_USAGE = 5

# Scalar metrics that enter the aggregate.
AGGREGATE_FIELDS = ("collisions_moving", "collisions_hovering", "avg_speed", "goal_events",
                    "mean_time_to_goal", "min_clearance", "duration", "hover_fraction")
# Pairwise reductions reported for these metrics: (candidate, baseline) over all pairs.
REDUCTION_FIELDS = ("collisions_moving", "collisions_hovering")


@dataclass
class RunSpec:
    scenario: str
    paradigms: list
    seeds: list
    out: Path
    trace: bool = False
    overrides: dict = field(default_factory=dict)
    jobs: int = 1

    def __post_init__(self):
        if not self.paradigms:
            raise InvalidArgument("at least one paradigm is required")
        if not self.seeds:
            raise InvalidArgument("at least one seed is required")
        self.paradigms = [parse_paradigm(p).value for p in self.paradigms]
        self.out = Path(self.out)


def parse_seeds(text: str) -> list[int]:
    """``"N"`` means seeds ``0..N-1``; ``"a,b,c"`` lists them."""
    text = text.strip()
    if "," in text:
        return [int(s) for s in text.split(",") if s.strip()]
    n = int(text)
    if n < 1:
        raise InvalidArgument("seed count must be positive")
    return list(range(n))


def resolve_scenario(name: str) -> Path:
    p = Path(name)
    if p.exists() or p.suffix:
        return p
    return preset_path(name)


def _scalar_metrics(m: dict) -> dict:
    times = m.get("time_to_goals") or []
    out = {k: m[k] for k in AGGREGATE_FIELDS if k in m}
    out["mean_time_to_goal"] = float(np.mean(times)) if times else None
    return out


def aggregate(episodes: list[dict]) -> dict:
    """Per-paradigm mean/std (population) and pairwise reductions.

    Episodes are reduced in sorted ``(paradigm, seed)`` order so the result
    does not depend on completion order.
    """
    episodes = sorted(episodes, key=lambda e: (e["paradigm"], e["seed"]))
    per = {}
    for e in episodes:
        per.setdefault(e["paradigm"], []).append(_scalar_metrics(e))
    stats = {}
    for p, rows in per.items():
        entry = {"n": len(rows)}
        for k in AGGREGATE_FIELDS:
            vals = [r[k] for r in rows if r.get(k) is not None]
            entry[k] = {"mean": float(np.mean(vals)) if vals else None,
                        "std": float(np.std(vals)) if vals else None}
        stats[p] = entry
    reductions = []
    for k in REDUCTION_FIELDS:
        for base in stats:
            b = stats[base][k]["mean"]
            for cand in stats:
                if cand == base or b is None or not b > 0:
                    continue
                c = stats[cand][k]["mean"]
                reductions.append({"metric": k, "candidate": cand, "baseline": base,
                                   "reduction": (b - c) / b})
    speed = []
    for base in stats:
        b = stats[base]["avg_speed"]["mean"]
        for cand in stats:
            if cand != base and b and b > 0:
                c = stats[cand]["avg_speed"]["mean"]
                speed.append({"candidate": cand, "baseline": base, "gain": (c - b) / b})
    return {"paradigms": stats, "reductions": reductions, "speed_gain": speed}


def write_aggregate_csv(report: dict, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["paradigm", "n"] + [f"{k}_{s}" for k in AGGREGATE_FIELDS for s in ("mean", "std")])
        for p, e in report["paradigms"].items():
            row = [p, e["n"]]
            for k in AGGREGATE_FIELDS:
                row += ["" if e[k]["mean"] is None else repr(e[k]["mean"]),
                        "" if e[k]["std"] is None else repr(e[k]["std"])]
            w.writerow(row)


def _episode_job(args):
    scenario_path, paradigm, seed, overrides, trace, out = args
    scenario = load_scenario(scenario_path)
    cfg = episode_config(scenario, overrides)
    res = run_episode(scenario, paradigm, seed, cfg, trace=trace)
    stem = f"{paradigm}_seed{seed}"
    (out / f"{stem}.json").write_text(res.metrics_json(), encoding="utf-8")
    if trace:
        (out / f"{stem}_trace.csv").write_text(res.trace_csv(), encoding="utf-8")
    return json.loads(res.metrics_json())


def run(spec: RunSpec) -> dict:
    """Execute every ``(paradigm, seed)`` episode and write per-episode and aggregate files."""
    path = resolve_scenario(spec.scenario)
    scenario = load_scenario(path)
    episode_config(scenario, spec.overrides)     # fail fast on bad overrides
    ep_dir = spec.out / "episodes"
    ep_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(path, p, s, spec.overrides, spec.trace, ep_dir) for p in spec.paradigms for s in spec.seeds]
    if spec.jobs > 1:
        with ProcessPoolExecutor(spec.jobs) as pool:
            episodes = list(pool.map(_episode_job, jobs))
    else:
        episodes = [_episode_job(j) for j in jobs]
    report = aggregate(episodes)
    report["scenario"] = scenario.name
    report["seeds"] = list(spec.seeds)
    report["overrides"] = {k: str(v) for k, v in spec.overrides.items()}
    (spec.out / "aggregate.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
    write_aggregate_csv(report, spec.out / "aggregate.csv")
    return report


def validate(path) -> tuple[list[str], list[str]]:
    """Diagnostics for a scenario file; never raises for bad content."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        return [f"<file>: {exc}"], []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        return [f"<root>: invalid JSON ({exc})"], []
    return validate_document(doc)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="asaa", description="Active sense-and-avoid experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a seed sweep for one or more paradigms")
    r.add_argument("--scenario", required=True, help="scenario file or preset name")
    r.add_argument("--paradigm", required=True, help=f"comma list of: {', '.join(PARADIGMS)}")
    r.add_argument("--seeds", default="1", help="count N (seeds 0..N-1) or comma list")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--trace", action="store_true", help="write per-episode trace CSVs")
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="config override by dotted path, e.g. weights.lambda4=0.1")
    r.add_argument("--jobs", type=int, default=1, help="worker processes")
    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("file")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "validate":
        errors, warnings = validate(resolve_scenario(args.file))
        for w in warnings:
            print(f"warning: {w}")
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        if errors:
            return EXIT_IO if errors[0].startswith("<file>") else EXIT_VALIDATION
        print("ok")
        return EXIT_OK
    try:
        overrides = dict(parse_override(s) for s in args.set)
        spec = RunSpec(args.scenario, args.paradigm.split(","), parse_seeds(args.seeds),
                       Path(args.out), args.trace, overrides, args.jobs)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidArgument, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run(spec)
    except ScenarioError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_VALIDATION
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    for p, e in report["paradigms"].items():
        cm = e["collisions_moving"]["mean"]
        sp = e["avg_speed"]["mean"]
        print(f"{p:20s} n={e['n']:3d} collisions_moving={cm:.3f} avg_speed={sp:.3f}")
    for r in report["reductions"]:
        if r["metric"] == "collisions_moving" and math.isfinite(r["reduction"]):
            print(f"reduction {r['candidate']} vs {r['baseline']}: {100 * r['reduction']:.1f}%")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
