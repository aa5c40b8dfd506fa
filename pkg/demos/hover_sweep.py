"""A robot hovering with nothing to do keeps turning its camera around.

With no goal and no obstacles, only staleness and smoothness are left in the
head cost. Each direction's update degree decays while out of view, so the
planner keeps picking whatever was looked at least recently. This prints the
camera heading every few seconds and when each direction was first seen.

    python demos/hover_sweep.py [seconds]
"""

import csv
import io
import math
import sys

import numpy as np

from asaa.geometry import wrap_angle
from asaa.sim import episode_config, run_episode
from asaa.sim.scenario import scenario_from_document
from asaa.sud import SudConfig, bucket_angles

seconds = float(sys.argv[1]) if len(sys.argv) > 1 else 60.0
scenario = scenario_from_document({
    "name": "hover", "bounds": {"min": [-5, -5, 0], "max": [5, 5, 3]},
    "robot_start": {"position": [0, 0, 1]}, "episode_length": seconds, "robot_radius": 0.25, "goals": [],
})
cfg = episode_config(scenario)
rows = list(csv.DictReader(io.StringIO(run_episode(scenario, "asaa_rotatable", 0, cfg).trace_csv())))

# Mechanical angle: the head may turn past +-180 deg before its cable stop.
print(f"{'t [s]':>6}  camera heading [deg]")
for r in rows[::100]:
    print(f"{float(r['t']):6.1f}  {math.degrees(float(r['camera_heading'])):8.1f}")

sud = SudConfig(theta_h=math.radians(cfg.sensor.theta_h_deg))
t = np.array([float(r["t"]) for r in rows])
cam = np.array([float(r["camera_heading"]) for r in rows])
in_view = np.abs(wrap_angle(bucket_angles(sud)[:, None] - cam[None, :])) <= sud.theta_h / 2 + 1e-9
print("\nfirst time each direction entered the view:")
for d, hit in zip(bucket_angles(sud), in_view):
    first = f"{t[np.argmax(hit)]:5.2f} s" if hit.any() else "never"
    print(f"  {math.degrees(d):7.1f} deg  {first}")
print(f"\n{int(in_view.any(axis=1).sum())}/{sud.n_buckets} directions covered in {seconds:.0f} s")
