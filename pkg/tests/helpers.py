"""Random scenes shared by the planner tests."""

import numpy as np

from asaa.flight_planner import RobotState
from asaa.static_map import GridConfig, OccupancyGrid, compute_edf, integrate_scan
from asaa.tracker import Detection, TrackerConfig, spawn_track


def random_field(rng, center=(0.0, 0.0, 1.0), n_boxes=4, config=None):
    """Distance field over a few random axis-aligned boxes near ``center``."""
    cfg = config or GridConfig()
    g = OccupancyGrid(cfg, center=center)
    pts = []
    for _ in range(n_boxes):
        lo = np.asarray(center) + rng.uniform([-2.5, -2.5, -1.0], [2.0, 2.0, 0.5])
        size = rng.uniform([0.1, 0.1, 0.4], [0.8, 0.8, 1.5])
        axes = [np.arange(lo[i], lo[i] + size[i], s) for i, s in enumerate((0.05, 0.05, 0.2))]
        pts.append(np.array(np.meshgrid(*axes, indexing="ij")).reshape(3, -1).T)
    integrate_scan(g, np.concatenate(pts), stamp=0.0)
    return compute_edf(g)


def random_track(rng, near=(0.0, 0.0, 1.0), stamp=0.0):
    p = np.asarray(near) + rng.uniform([-2.5, -2.5, -0.1], [2.5, 2.5, 0.1])
    tr = spawn_track(Detection(np.array([p[0], p[1], 0.9]), rng.uniform(0.2, 0.4), 1.8, "pedestrian", stamp),
                     TrackerConfig(), int(rng.integers(1 << 20)))
    tr.state[:2, 1] = rng.uniform(-1.5, 1.5, 2)
    tr.cov[:, 0, 0] = rng.uniform(0.005, 0.05, 3)
    tr.cov[:, 1, 1] = rng.uniform(0.01, 0.3, 3)
    tr.sigma[:] = rng.uniform(0.2, 1.0)
    return tr


def random_state(rng, center=(0.0, 0.0, 1.0)):
    v = rng.uniform(-0.6, 0.6, 3) * [1, 1, 0.2]
    a = rng.uniform(-1.0, 1.0, 3) * [1, 1, 0.2]
    return RobotState(np.asarray(center, dtype=float), v, a)
