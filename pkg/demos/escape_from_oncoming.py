"""One planning call against a pedestrian walking straight at the robot.

The goal is 10 m ahead, and a pedestrian 1 m ahead walks toward the robot at
0.6 m/s. Every forward candidate fails the uncertainty-aware check, so the
best surviving primitive backs away to the side. The default 120 deg cone
already reaches behind the robot; the full ball is shown next to it.

    python demos/escape_from_oncoming.py
"""

import math

import numpy as np

from asaa.flight_planner import CheckConfig, RobotState, SampleConfig, plan_flight
from asaa.geometry import angle_between
from asaa.static_map import GridConfig, OccupancyGrid, compute_edf
from asaa.tracker import Detection, TrackerConfig, spawn_track

start = np.array([0.0, 0.0, 1.0])
goal = np.array([10.0, 0.0, 1.0])
field = compute_edf(OccupancyGrid(GridConfig(), center=start))

walker = spawn_track(Detection(np.array([1.0, 0.0, 0.9]), 0.3, 1.8, "pedestrian", 0.0),
                     TrackerConfig(default_sigma=1.0, sigma_by_label={}))
walker.state[0, 1] = -0.6

for theta, label in ((2 * math.pi / 3, "120 deg cone"), (math.pi, "full ball")):
    plan = plan_flight(RobotState(start), goal, field, [walker], SampleConfig(theta_val=theta), CheckConfig(),
                       np.random.default_rng(0))
    print(f"{label}: {plan.n_candidates} candidates, {plan.n_checked} checked, "
          f"{plan.n_dynamic_fail} failed the dynamic check")
    if plan.hover:
        print("  nothing passes: hover")
        continue
    off = math.degrees(float(angle_between(goal - start, plan.primitive.target - start)))
    x, y, z = plan.primitive.target
    print(f"  chosen target ({x:.2f}, {y:.2f}, {z:.2f}), {off:.0f} deg off the goal direction, "
          f"duration {plan.primitive.duration:.2f} s")
