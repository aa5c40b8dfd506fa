"""Kinematic world: robot tracking a primitive, scripted obstacles, head and yaw slew."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from ..flight_planner import MotionPrimitive
from ..head_planner import rate_limit
from .scenario import Box, Cylinder, DynamicSpec


class ScriptedObstacle:
    """Cylinder moving at constant speed along a closed waypoint loop.

    Position is a pure function of time, so replays are exact. ``phase`` is
    the arc length already travelled at ``t = 0``.
    """

    def __init__(self, spec: DynamicSpec, phase: float = 0.0):
        self.spec = spec
        pts = np.asarray(spec.waypoints, dtype=float)
        self._pts = np.vstack([pts, pts[:1]])
        seg = np.diff(self._pts, axis=0)
        self._len = np.linalg.norm(seg, axis=1)
        self._dir = seg / np.where(self._len > 0, self._len, 1.0)[:, None]
        self._cum = np.concatenate([[0.0], np.cumsum(self._len)])
        self.perimeter = float(self._cum[-1])
        self.phase = phase % self.perimeter if self.perimeter > 0 else 0.0
        # Plain-float copies for the per-step scalar path.
        self._cum_list = self._cum.tolist()
        self._pts_list = self._pts.tolist()
        self._dir_list = self._dir.tolist()

    @property
    def radius(self) -> float:
        return self.spec.radius

    @property
    def height(self) -> float:
        return self.spec.height

    def _locate(self, t: float):
        if self.perimeter == 0:
            return 0, 0.0
        s = (self.phase + self.spec.speed * t) % self.perimeter
        i = bisect.bisect_right(self._cum_list, s) - 1
        i = min(i, len(self._len) - 1)
        return i, s - self._cum_list[i]

    def xy(self, t: float) -> tuple[float, float]:
        """Position as a pair of floats."""
        i, u = self._locate(t)
        p, d = self._pts_list[i], self._dir_list[i]
        return p[0] + d[0] * u, p[1] + d[1] * u

    def position_xy(self, t: float) -> np.ndarray:
        return np.array(self.xy(t))

    def velocity(self, t: float) -> np.ndarray:
        i, _ = self._locate(t)
        v = self._dir[i] * self.spec.speed
        return np.array([v[0], v[1], 0.0])

    def center(self, t: float) -> np.ndarray:
        """Middle of the cylinder."""
        p = self.position_xy(t)
        return np.array([p[0], p[1], 0.5 * self.spec.height])


@dataclass
class RobotBody:
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0
    head: float = 0.0


@dataclass
class Command:
    """Active reference: a primitive started at ``t0``, or a hover point."""

    primitive: MotionPrimitive | None
    t0: float
    hold: np.ndarray
    head_cmd: float
    yaw_cmd: float


@dataclass
class Limits:
    v_max: float = 1.0
    a_max: float = 2.0
    kp: float = 6.0
    kd: float = 5.0
    head_rate: float = 1.2
    head_min: float = -1.25 * math.pi
    head_max: float = 1.25 * math.pi
    yaw_rate: float = 0.8


def _clip_norm(v: np.ndarray, limit: float) -> np.ndarray:
    n = math.sqrt(float(v @ v))
    return v * (limit / n) if n > limit else v


def step_world(body: RobotBody, cmd: Command | None, t: float, dt: float, lim: Limits) -> RobotBody:
    """Advance the robot by ``dt`` from time ``t``; returns a new body.

    Without a command the robot holds its current position.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if cmd is None:
        cmd = Command(None, t, body.position.copy(), body.head, body.yaw)
    if cmd.primitive is None:
        p_ref, v_ref, a_ff = cmd.hold, np.zeros(3), np.zeros(3)
    else:
        p_ref, v_ref, a_ff = cmd.primitive.state(t - cmd.t0)
    acc = a_ff + lim.kp * (p_ref - body.position) + lim.kd * (v_ref - body.velocity)
    acc = _clip_norm(acc, lim.a_max)
    vel = _clip_norm(body.velocity + acc * dt, lim.v_max)
    pos = body.position + 0.5 * (body.velocity + vel) * dt
    head = rate_limit(cmd.head_cmd, body.head, dt, lim.head_rate, lim.head_min, lim.head_max)
    yaw = rate_limit(cmd.yaw_cmd, body.yaw, dt, lim.yaw_rate)
    return RobotBody(pos, vel, (vel - body.velocity) / dt, yaw, head)


def distance_to_static(p, statics) -> np.ndarray:
    """Distance from ``p`` to each static solid (0 inside)."""
    p = [float(x) for x in p]
    out = np.empty(len(statics))
    for i, s in enumerate(statics):
        if isinstance(s, Box):
            out[i] = math.sqrt(sum(max(lo - x, x - hi, 0.0) ** 2 for lo, x, hi in zip(s.lo, p, s.hi)))
        elif isinstance(s, Cylinder):
            out[i] = _cylinder_distance(p, s.center, s.radius, 0.0, s.height)
    return out


def _cylinder_distance(p, center_xy, radius, z0, z1) -> float:
    dr = max(math.hypot(p[0] - center_xy[0], p[1] - center_xy[1]) - radius, 0.0)
    dz = max(z0 - p[2], p[2] - z1, 0.0)
    return math.hypot(dr, dz)


def distance_to_dynamic(p, obstacles, t: float) -> np.ndarray:
    """Distance from ``p`` to each moving cylinder's surface (0 inside)."""
    return np.array(dynamic_distances(p, obstacles, t))


def dynamic_distances(p, obstacles, t: float) -> list:
    """List form of :func:`distance_to_dynamic` for ``p`` given as floats."""
    return [_cylinder_distance(p, ob.xy(t), ob.radius, 0.0, ob.height) for ob in obstacles]
