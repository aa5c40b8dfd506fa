"""Four ways of pointing the camera, compared on a scenario preset.

  asaa_rotatable      head planned over staleness, flight, tracks, goal
  velocity_rotatable  head follows the velocity, body yaw fixed
  multiobj_yaw        the same planner steers the whole body
  velocity_yaw        body yaw follows the velocity

    python demos/paradigm_comparison.py [pedestrian_street|small_arena] [n_seeds]

Writes per-episode files under demo_out/ and prints mean moving collisions,
hover collisions and speed per paradigm.
"""

import sys
import time
from pathlib import Path

from asaa.runner import RunSpec, run

scenario = sys.argv[1] if len(sys.argv) > 1 else "pedestrian_street"
n = int(sys.argv[2]) if len(sys.argv) > 2 else 4
paradigms = ["asaa_rotatable", "velocity_rotatable", "multiobj_yaw", "velocity_yaw"]

t0 = time.perf_counter()
report = run(RunSpec(scenario, paradigms, list(range(n)), Path("demo_out") / scenario))
print(f"{scenario}, {n} seeds, {time.perf_counter() - t0:.0f} s\n")
print(f"{'paradigm':20s} {'moving':>7s} {'hover':>7s} {'speed':>7s} {'goals':>7s}")
for p in paradigms:
    s = report["paradigms"][p]
    print(f"{p:20s} {s['collisions_moving']['mean']:7.2f} {s['collisions_hovering']['mean']:7.2f} "
          f"{s['avg_speed']['mean']:7.3f} {s['goal_events']['mean']:7.1f}")
base = report["paradigms"]["velocity_yaw"]["collisions_moving"]["mean"]
mine = report["paradigms"]["asaa_rotatable"]["collisions_moving"]["mean"]
if base > 0:
    print(f"\nmoving collisions vs velocity_yaw: {100 * (base - mine) / base:+.0f}% reduction")
