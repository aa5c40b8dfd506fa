"""World-frame multi-object tracker for dynamic obstacles.

Each axis runs an independent constant-velocity Kalman filter driven by a
random constant acceleration ``a ~ N(0, sigma^2)``. Detections are associated
to tracks by a minimum-cost assignment on Euclidean world distance with a
gate. Obstacles are modeled as upright cylinders.

Track estimates are stored at the stamp of their last correction. Anything
that needs the state "now" predicts forward with :func:`kf_predict`, which
keeps out-of-sequence handling trivial when detections arrive late.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidArgument
from .geometry import rot_z

# Cost assigned to gated-out pairs; larger than any feasible sum of real costs.
_GATED = 1e9


@dataclass
class Detection:
    position: np.ndarray
    radius: float
    height: float
    label: str
    stamp: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        if not (self.radius > 0 and self.height > 0):
            raise InvalidArgument("detection radius and height must be positive")


@dataclass
class TrackerConfig:
    gate_radius: float = 1.0
    confirm_hits: int = 2
    stale_timeout: float = 2.0
    sigma_by_label: dict = field(default_factory=lambda: {"pedestrian": 0.5, "vehicle": 0.3})
    default_sigma: float = 1.0
    meas_noise: float = 0.1
    init_vel_std: float = 1.0
    shape_smoothing: float = 0.5
    cov_floor: float = 0.01

    def __post_init__(self):
        if self.stale_timeout <= 0 or self.gate_radius <= 0:
            raise InvalidArgument("stale_timeout and gate_radius must be positive")


@dataclass
class TrackedObstacle:
    """Per-axis ``[position, velocity]`` state with 2x2 covariance per axis."""

    state: np.ndarray           # (3, 2)
    cov: np.ndarray             # (3, 2, 2)
    sigma: np.ndarray           # (3,) acceleration std per axis
    radius: float
    height: float
    label: str
    stamp: float                # time the estimate refers to
    last_seen: float
    hits: int = 1
    confirmed: bool = False
    id: int = 0

    @property
    def position(self) -> np.ndarray:
        return self.state[:, 0]

    @property
    def velocity(self) -> np.ndarray:
        return self.state[:, 1]

    def copy(self) -> "TrackedObstacle":
        return replace(self, state=self.state.copy(), cov=self.cov.copy(), sigma=self.sigma.copy())


def process_covariance(sigma, t: float) -> np.ndarray:
    """Covariance of the state spread after ``t`` seconds of constant random acceleration.

    ``sigma^2 * [[t^4/4, t^3/2], [t^3/2, t^2]]`` per axis, shape ``(len(sigma), 2, 2)``.
    """
    if t < 0:
        raise InvalidArgument("prediction horizon must be non-negative")
    s2 = np.asarray(sigma, dtype=float) ** 2
    q = np.array([[0.25 * t**4, 0.5 * t**3], [0.5 * t**3, t**2]])
    return s2[:, None, None] * q


def transition(t: float) -> np.ndarray:
    return np.array([[1.0, t], [0.0, 1.0]])


def kf_predict(track: TrackedObstacle, t: float):
    """Predict ``t`` seconds past the track's estimate stamp.

    Returns ``(center, cov)``: center ``(3, 2)`` with rows ``[x + v t, v]`` and
    covariance ``F P F^T + Q(t)`` per axis, ``(3, 2, 2)``.
    """
    if t < 0:
        raise InvalidArgument("prediction horizon must be non-negative")
    F = transition(t)
    center = track.state @ F.T
    cov = F @ track.cov @ F.T + process_covariance(track.sigma, t)
    return center, cov


def predicted_position_variance(track: TrackedObstacle, horizons, floor: float = 0.0) -> np.ndarray:
    """Position variance per axis at each horizon, shape ``(len(horizons), 3)``.

    Closed form of the (0, 0) entry of :func:`kf_predict`'s covariance,
    vectorized over horizons and floored.
    """
    h = np.asarray(horizons, dtype=float)[:, None]
    P = track.cov
    var = (P[:, 0, 0] + 2 * h * P[:, 0, 1] + h * h * P[:, 1, 1]
           + 0.25 * h**4 * track.sigma**2)
    return np.maximum(var, floor)


def _correct(track: TrackedObstacle, z: np.ndarray, r2: float) -> None:
    # Scalar position measurement per axis, H = [1, 0].
    P = track.cov
    S = P[:, 0, 0] + r2
    K = P[:, :, 0] / S[:, None]                     # (3, 2)
    innov = z - track.state[:, 0]
    track.state += K * innov[:, None]
    track.cov = P - K[:, :, None] * P[:, None, 0, :]
    track.cov = 0.5 * (track.cov + np.swapaxes(track.cov, 1, 2))


def _advance(track: TrackedObstacle, t: float) -> None:
    dt = t - track.stamp
    if dt <= 0:
        return
    center, cov = kf_predict(track, dt)
    track.state = center
    track.cov = cov
    track.stamp = t


def spawn_track(det: Detection, cfg: TrackerConfig, track_id: int = 0) -> TrackedObstacle:
    sigma = cfg.sigma_by_label.get(det.label, cfg.default_sigma)
    cov = np.zeros((3, 2, 2))
    cov[:, 0, 0] = cfg.meas_noise**2
    cov[:, 1, 1] = cfg.init_vel_std**2
    state = np.zeros((3, 2))
    state[:, 0] = det.position
    return TrackedObstacle(state=state, cov=cov, sigma=np.full(3, float(sigma)),
                           radius=det.radius, height=det.height, label=det.label,
                           stamp=det.stamp, last_seen=det.stamp, hits=1,
                           confirmed=cfg.confirm_hits <= 1, id=track_id)


def associate(track_pos: np.ndarray, det_pos: np.ndarray, gate: float):
    """Gated minimum-cost assignment.

    Maximizes the number of in-gate pairs, then minimizes total distance.
    Returns a list of ``(track_index, detection_index)``.
    """
    if len(track_pos) == 0 or len(det_pos) == 0:
        return []
    cost = np.linalg.norm(track_pos[:, None, :] - det_pos[None, :, :], axis=-1)
    padded = np.where(cost <= gate, cost, _GATED)
    rows, cols = linear_sum_assignment(padded)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if cost[r, c] <= gate]


def tracker_step(tracks, detections, now: float, cfg: TrackerConfig, ids=None):
    """One tracker cycle; returns a new list of tracks (inputs are not mutated).

    ``ids`` is an iterator of fresh track ids; by default ids continue from
    the largest id in ``tracks``.
    """
    tracks = [t.copy() for t in tracks]
    if ids is None:
        ids = itertools.count(max((t.id for t in tracks), default=0) + 1)
    detections = [d for d in detections if d.stamp <= now]
    r2 = cfg.meas_noise**2
    # Detections from one frame share a stamp; process frames oldest first.
    for stamp in sorted({d.stamp for d in detections}):
        frame = [d for d in detections if d.stamp == stamp]
        pred = []
        for t in tracks:
            center, _ = kf_predict(t, max(stamp - t.stamp, 0.0))
            pred.append(center[:, 0])
        pairs = associate(np.array(pred).reshape(-1, 3),
                          np.array([d.position for d in frame]).reshape(-1, 3),
                          cfg.gate_radius)
        matched = set()
        a = cfg.shape_smoothing
        for ti, di in pairs:
            t, d = tracks[ti], frame[di]
            _advance(t, stamp)
            _correct(t, d.position, r2)
            t.last_seen = max(t.last_seen, stamp)
            t.hits += 1
            t.confirmed = t.confirmed or t.hits >= cfg.confirm_hits
            t.radius = a * t.radius + (1 - a) * d.radius
            t.height = a * t.height + (1 - a) * d.height
            matched.add(di)
        for di, d in enumerate(frame):
            if di not in matched:
                tracks.append(spawn_track(d, cfg, next(ids)))
    return [t for t in tracks if now - t.last_seen <= cfg.stale_timeout]


def detection_from_camera(pixel_center, depth: float, intrinsics, camera_position,
                          camera_heading: float, bbox_size=None, label: str = "unknown",
                          stamp: float = 0.0) -> Detection:
    """Back-project a pixel with known depth into the world frame.

    Camera optical frame: x right, y down, z forward. The camera looks along
    its heading in the horizontal plane. ``bbox_size = (w_px, h_px)`` gives the
    cylinder diameter and height through the same pinhole relation.
    """
    if not depth > 0:
        raise InvalidArgument("depth must be positive")
    fx, fy, cx, cy = intrinsics
    if not (fx > 0 and fy > 0):
        raise InvalidArgument("focal lengths must be positive")
    u, v = pixel_center
    xc = (u - cx) * depth / fx
    yc = (v - cy) * depth / fy
    body = np.array([depth, -xc, -yc])          # forward, left, up
    world = np.asarray(camera_position, dtype=float) + rot_z(camera_heading) @ body
    if bbox_size is None:
        radius, height = 0.3, 1.7
    else:
        radius = 0.5 * bbox_size[0] * depth / fx
        height = bbox_size[1] * depth / fy
    return Detection(world, radius, height, label, stamp)


def camera_projection(point, intrinsics, camera_position, camera_heading: float):
    """Inverse of :func:`detection_from_camera` for a single world point.

    Returns ``((u, v), depth)``; depth is the forward (optical axis) distance.
    """
    fx, fy, cx, cy = intrinsics
    body = rot_z(camera_heading).T @ (np.asarray(point, dtype=float) - np.asarray(camera_position, dtype=float))
    depth = body[0]
    u = cx - body[1] * fx / depth
    v = cy - body[2] * fy / depth
    return (u, v), depth


def confirmed(tracks):
    return [t for t in tracks if t.confirmed]


def track_speed(track: TrackedObstacle) -> float:
    return float(math.hypot(*track.velocity[:2]))


class MultiObjectTracker:
    """Stateful wrapper owning the track list and a private id sequence."""

    def __init__(self, cfg: TrackerConfig | None = None):
        self.cfg = cfg or TrackerConfig()
        self.tracks: list[TrackedObstacle] = []
        self._ids = itertools.count(1)

    def step(self, detections, now: float):
        self.tracks = tracker_step(self.tracks, detections, now, self.cfg, self._ids)
        return self.tracks
