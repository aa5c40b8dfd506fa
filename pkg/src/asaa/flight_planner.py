"""Sampling-based local flight planning with uncertainty-aware collision checks.

Per replan:

1. sample temporal goal candidates uniformly inside a spherical cone of
   half-angle ``theta_val`` and radius ``l_vis`` around the goal direction,
2. rank them by a distance-to-goal / angular-deviation cost,
3. build a rest-to-rest style quintic from the current full state to each
   candidate,
4. accept the first primitive whose discretized setpoints pass both the
   static (distance field) and dynamic (Mahalanobis) clearance tests.

A setpoint passes when its clearance exceeds the threshold or is not
smaller than the clearance of the previous setpoint (moving away from an
obstacle is allowed even inside the threshold).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGoal, InvalidArgument
from .geometry import angle_between
from .static_map import DistanceField
from .tracker import TrackedObstacle, predicted_position_variance


@dataclass
class RobotState:
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0
    stamp: float = 0.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        self.acceleration = np.asarray(self.acceleration, dtype=float)


@dataclass
class SampleConfig:
    theta_val: float = 2 * math.pi / 3
    l_vis: float = 1.5
    n_samples: int = 200
    v_max: float = 1.0
    a_max: float = 2.0
    t_min: float = 0.5
    t_max: float = 4.0

    def __post_init__(self):
        if not 0 <= self.theta_val <= math.pi:
            raise InvalidArgument("theta_val must lie in [0, pi]")
        if self.l_vis <= 0 or self.v_max <= 0 or self.n_samples < 1:
            raise InvalidArgument("l_vis, v_max and n_samples must be positive")


@dataclass
class CheckConfig:
    d_min_static: float = 0.5
    d_min_dynamic: float = 0.65
    dt: float = 0.05
    cov_floor: float = 0.01
    # Added to every dynamic obstacle's radius (robot body in configuration space).
    inflate: float = 0.0

    def __post_init__(self):
        if min(self.d_min_static, self.d_min_dynamic, self.dt, self.cov_floor) <= 0:
            raise InvalidArgument("check thresholds and dt must be positive")
        if self.inflate < 0:
            raise InvalidArgument("inflate must be non-negative")


# -- candidate sampling ------------------------------------------------------

def in_sampling_region(points, p_rob, p_goal, theta_val: float, l_vis: float) -> np.ndarray:
    """Membership in the cone ``angle(goal - rob, p - rob) < theta_val, |p - rob| <= l_vis``."""
    l1 = np.asarray(p_goal, dtype=float) - np.asarray(p_rob, dtype=float)
    l2 = np.asarray(points, dtype=float) - np.asarray(p_rob, dtype=float)
    ang = angle_between(np.broadcast_to(l1, l2.shape), l2)
    return (ang < theta_val) & (np.linalg.norm(l2, axis=-1) <= l_vis)


def _uniform_ball(rng, n: int, radius: float) -> np.ndarray:
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / 3.0)
    return d * r[:, None]


def sample_candidates(p_rob, p_goal, cfg: SampleConfig, rng, n: int | None = None,
                      return_attempts: bool = False):
    """Uniform samples in the spherical cone by rejection from the enclosing ball."""
    p_rob = np.asarray(p_rob, dtype=float)
    l1 = np.asarray(p_goal, dtype=float) - p_rob
    if not np.any(l1):
        raise DegenerateGoal("goal coincides with robot position")
    n = cfg.n_samples if n is None else n
    if n == 0:
        out = np.zeros((0, 3))
        return (out, 0) if return_attempts else out
    accept = max((1.0 - math.cos(cfg.theta_val)) / 2.0, 1e-3)
    chunks, have, attempts = [], 0, 0
    while have < n:
        m = int(math.ceil(1.2 * (n - have) / accept)) + 8
        offs = _uniform_ball(rng, m, cfg.l_vis)
        ok = (angle_between(np.broadcast_to(l1, offs.shape), offs) < cfg.theta_val) & \
             (np.linalg.norm(offs, axis=1) <= cfg.l_vis)
        hits = np.flatnonzero(ok)
        if have + len(hits) >= n:
            # Count draws only up to the last accepted sample actually used.
            attempts += int(hits[n - have - 1]) + 1
        else:
            attempts += m
        chunks.append(offs[hits])
        have += len(hits)
    out = p_rob + np.concatenate(chunks)[:n]
    if return_attempts:
        return out, attempts
    return out


def candidate_cost(candidates, p_rob, p_goal, l_vis: float) -> np.ndarray:
    c = np.asarray(candidates, dtype=float)
    l1 = np.asarray(p_goal, dtype=float) - np.asarray(p_rob, dtype=float)
    l2 = c - np.asarray(p_rob, dtype=float)
    ang = angle_between(np.broadcast_to(l1, l2.shape), l2)
    return np.linalg.norm(c - p_goal, axis=-1) + 0.5 * l_vis * ang / math.pi


def rank_candidates(candidates, p_rob, p_goal, l_vis: float):
    """Sort ascending by cost; ties prefer candidates farther from the robot.

    Returns ``(sorted_candidates, order)``.
    """
    c = np.asarray(candidates, dtype=float)
    if len(c) == 0:
        raise InvalidArgument("no candidates to rank")
    cost = candidate_cost(c, p_rob, p_goal, l_vis)
    reach = np.linalg.norm(c - np.asarray(p_rob, dtype=float), axis=-1)
    order = np.lexsort((-reach, cost))
    return c[order], order


# -- motion primitives -------------------------------------------------------

def quintic_coefficients(p0, v0, a0, pf, vf, af, T):
    """Coefficients ``c0..c5`` (last axis) of the quintic meeting both end states.

    Positions, velocities and accelerations broadcast with a trailing axis of
    3; ``T`` is a scalar or has the leading (batch) shape.
    """
    p0, v0, a0, pf, vf, af = (np.asarray(x, dtype=float) for x in (p0, v0, a0, pf, vf, af))
    T = np.asarray(T, dtype=float)
    if T.ndim:
        T = T[..., None]
    # Powers as plain products; the compiled batch repeats them exactly.
    T2 = T * T
    T3 = T2 * T
    T4 = T3 * T
    T5 = T4 * T
    dp = pf - p0 - v0 * T - 0.5 * a0 * T2
    dv = vf - v0 - a0 * T
    da = af - a0
    c3 = (20 * dp - 8 * dv * T + da * T2) / (2 * T3)
    c4 = (-30 * dp + 14 * dv * T - 2 * da * T2) / (2 * T4)
    c5 = (12 * dp - 6 * dv * T + da * T2) / (2 * T5)
    return np.stack(np.broadcast_arrays(p0, v0, 0.5 * a0, c3, c4, c5), axis=-1)


def eval_quintic(coeffs, t, order: int = 0):
    """Evaluate the ``order``-th derivative at times ``t``.

    ``coeffs`` is ``(..., 3, 6)``; ``t`` broadcasts against the leading dims
    and gains a trailing axis-of-3 in the result.
    """
    c = np.asarray(coeffs, dtype=float)
    k = np.arange(6)
    fac = np.ones(6)
    for i in range(order):
        fac = fac * np.clip(k - i, 0, None)
    shifted = np.clip(k - order, 0, None)
    t = np.asarray(t, dtype=float)
    tp = t[..., None, None] ** shifted  # (..., 1, 6)
    return np.sum(c * fac * tp, axis=-1)


_POW = np.arange(6.0)
_D1 = np.arange(1.0, 6.0)
_D2 = np.arange(2.0, 6.0) * np.arange(1.0, 5.0)


@dataclass
class MotionPrimitive:
    coeffs: np.ndarray      # (3, 6)
    duration: float
    target: np.ndarray

    def position(self, t):
        return eval_quintic(self.coeffs, np.clip(t, 0.0, self.duration), 0)

    def velocity(self, t):
        tt = np.asarray(t, dtype=float)
        v = eval_quintic(self.coeffs, np.clip(tt, 0.0, self.duration), 1)
        return np.where((tt > self.duration)[..., None], 0.0, v)

    def acceleration(self, t):
        tt = np.asarray(t, dtype=float)
        a = eval_quintic(self.coeffs, np.clip(tt, 0.0, self.duration), 2)
        return np.where((tt > self.duration)[..., None], 0.0, a)

    def state(self, t: float):
        """Position, velocity and acceleration at scalar ``t`` (held at rest after the end)."""
        if t >= self.duration:
            tp = self.duration ** _POW
            return self.coeffs @ tp, np.zeros(3), np.zeros(3)
        tp = max(t, 0.0) ** _POW
        c = self.coeffs
        return c @ tp, c[:, 1:] @ (_D1 * tp[:5]), c[:, 2:] @ (_D2 * tp[:4])

    def n_steps(self, dt: float) -> int:
        return int(math.floor(self.duration / dt + 1e-9))

    def setpoints(self, dt: float) -> np.ndarray:
        """Positions at ``k * dt`` for ``k = 0..floor(T/dt)``."""
        return self.position(np.arange(self.n_steps(dt) + 1) * dt)


def primitive_duration(distance, cfg: SampleConfig):
    return np.clip(2.0 * np.asarray(distance, dtype=float) / cfg.v_max, cfg.t_min, cfg.t_max)


def generate_primitive(state0: RobotState, p_target, cfg: SampleConfig) -> MotionPrimitive:
    """Quintic from the full start state to ``p_target`` at rest."""
    p_target = np.asarray(p_target, dtype=float)
    T = float(primitive_duration(np.linalg.norm(p_target - state0.position), cfg))
    coeffs = quintic_coefficients(state0.position, state0.velocity, state0.acceleration,
                                  p_target, np.zeros(3), np.zeros(3), T)
    return MotionPrimitive(coeffs, T, p_target)


def _batch_primitives(state0: RobotState, targets: np.ndarray, cfg: SampleConfig):
    T = primitive_duration(np.linalg.norm(targets - state0.position, axis=1), cfg)
    zeros = np.zeros_like(targets)
    coeffs = quintic_coefficients(state0.position, state0.velocity, state0.acceleration,
                                  targets, zeros, zeros, T)
    return coeffs, T


def _batch_setpoints(coeffs: np.ndarray, T: np.ndarray, dt: float):
    """Setpoints ``(m, K+1, 3)`` and a validity mask ``(m, K+1)``."""
    K = np.floor(T / dt + 1e-9).astype(int)
    k = np.arange(K.max() + 1)
    t = np.minimum(k[None, :] * dt, T[:, None])
    pts = eval_quintic(coeffs[:, None, :, :], t, 0)
    return pts, k[None, :] <= K[:, None]


# -- collision checks --------------------------------------------------------

def clearance_ok(distances, d_min: float, valid=None) -> np.ndarray:
    """Discrete safety rule over setpoint clearances ``D_0..D_K`` (last axis).

    Safe iff for every ``k >= 1``: ``D_k > d_min`` or ``D_k >= D_{k-1}``.
    """
    D = np.asarray(distances, dtype=float)
    ok = (D[..., 1:] > d_min) | (D[..., 1:] >= D[..., :-1])
    if valid is not None:
        ok |= ~np.asarray(valid)[..., 1:]
    return np.all(ok, axis=-1)


def mahalanobis_clearance(points, horizons, track: TrackedObstacle, floor: float,
                          inflate: float = 0.0) -> np.ndarray:
    """Squared Mahalanobis distance from setpoints to a predicted cylinder surface.

    ``points`` is ``(..., K+1, 3)`` and ``horizons`` ``(K+1,)`` seconds past
    the track's estimate stamp. The obstacle center follows the constant
    velocity prediction; its height is taken from the setpoint when the
    setpoint is below the cylinder top and pinned to the top otherwise.
    Setpoints inside the radius (grown by ``inflate``) get distance 0.
    """
    P = np.asarray(points, dtype=float)
    h = np.asarray(horizons, dtype=float)
    center = track.position + h[:, None] * track.velocity          # (K+1, 3)
    var = predicted_position_variance(track, h, floor)              # (K+1, 3)
    center = np.broadcast_to(center, P.shape).copy()
    below = P[..., 2] < track.height
    center[..., 2] = np.where(below, P[..., 2], track.height)
    diff = P - center
    n = np.linalg.norm(diff, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = track.radius + inflate
        scale = np.where(n > r, 1.0 - r / n, 0.0)
    dp = diff * scale[..., None]
    return np.sum(dp * dp / var, axis=-1)


def _static_cap(field: DistanceField, cfg: CheckConfig) -> float:
    # Any cap above the threshold leaves every verdict unchanged: a capped
    # value still passes on its own, and a value below the threshold still
    # compares correctly against a capped predecessor.
    return cfg.d_min_static + 0.5 * field.config.resolution


def _static_safe(pts, valid, field: DistanceField, cfg: CheckConfig) -> np.ndarray:
    D = field.query(pts.reshape(-1, 3), cap=_static_cap(field, cfg)).reshape(pts.shape[:-1])
    return clearance_ok(D, cfg.d_min_static, valid)


def _dynamic_safe(pts, valid, tracks, cfg: CheckConfig, t_now: float) -> np.ndarray:
    safe = np.ones(pts.shape[0], dtype=bool)
    k = np.arange(pts.shape[1])
    for tr in tracks:
        horizons = (t_now - tr.stamp) + k * cfg.dt
        d = mahalanobis_clearance(pts, horizons, tr, cfg.cov_floor, cfg.inflate)
        safe &= clearance_ok(d, cfg.d_min_dynamic, valid)
    return safe


def hover_safe(position, tracks, cfg: CheckConfig, t_now: float, horizon: float) -> bool:
    """Whether holding ``position`` for ``horizon`` seconds passes the dynamic check."""
    k = int(math.floor(horizon / cfg.dt + 1e-9)) + 1
    pts = np.broadcast_to(np.asarray(position, dtype=float), (1, k, 3))
    valid = np.ones((1, k), dtype=bool)
    return bool(_dynamic_safe(pts, valid, list(tracks), cfg, t_now)[0])


def check_static(prim: MotionPrimitive, field: DistanceField, cfg: CheckConfig) -> bool:
    pts = prim.setpoints(cfg.dt)
    return bool(clearance_ok(field.query(pts, cap=_static_cap(field, cfg)), cfg.d_min_static))


def check_dynamic(prim: MotionPrimitive, tracks, cfg: CheckConfig, t_now: float) -> bool:
    pts = prim.setpoints(cfg.dt)[None]
    valid = np.ones(pts.shape[:2], dtype=bool)
    return bool(_dynamic_safe(pts, valid, tracks, cfg, t_now)[0])


# -- planning ----------------------------------------------------------------

@dataclass
class FlightPlan:
    primitive: MotionPrimitive | None
    rank: int = -1
    n_candidates: int = 0
    n_checked: int = 0
    n_static_fail: int = 0
    # Counted only among candidates that passed the static check.
    n_dynamic_fail: int = 0

    @property
    def hover(self) -> bool:
        return self.primitive is None


def plan_flight(state0: RobotState, p_goal, field: DistanceField, tracks,
                sample_cfg: SampleConfig, check_cfg: CheckConfig, rng,
                t_now: float = 0.0, bounds=None, chunk: int = 64,
                include_goal: bool = True, admissible=None, fast: bool = True) -> FlightPlan:
    """First ranked candidate whose primitive passes both checks, else hover.

    ``bounds`` is an optional ``(lo, hi)`` pair of 3-vectors; candidates outside
    are discarded. ``admissible`` is an optional callable mapping candidates
    ``(m, 3)`` to a boolean mask, applied after the bounds. When the goal
    itself lies inside the sampling region it is added as a candidate.
    With ``fast`` the compiled search in :mod:`asaa.fast_checks` visits
    candidates one by one; otherwise they are checked in vectorized blocks
    that double from 4 up to ``chunk``. Both give the same plan.
    """
    p_goal = np.asarray(p_goal, dtype=float)
    cand = sample_candidates(state0.position, p_goal, sample_cfg, rng)
    if include_goal and in_sampling_region(p_goal[None], state0.position, p_goal,
                                           sample_cfg.theta_val, sample_cfg.l_vis)[0]:
        cand = np.vstack([p_goal[None], cand])
    if bounds is not None:
        lo, hi = (np.asarray(b, dtype=float) for b in bounds)
        cand = cand[np.all((cand >= lo) & (cand <= hi), axis=1)]
    if admissible is not None and len(cand):
        cand = cand[np.asarray(admissible(cand), dtype=bool)]
    plan = FlightPlan(None, n_candidates=len(cand))
    if len(cand) == 0:
        return plan
    ranked, _ = rank_candidates(cand, state0.position, p_goal, sample_cfg.l_vis)
    tracks = list(tracks)
    if fast:
        return _plan_compiled(plan, state0, ranked, field, tracks, sample_cfg, check_cfg, t_now)
    start, size = 0, min(4, chunk)
    while start < len(ranked):
        block = ranked[start:start + size]
        coeffs, T = _batch_primitives(state0, block, sample_cfg)
        pts, valid = _batch_setpoints(coeffs, T, check_cfg.dt)
        s_ok = _static_safe(pts, valid, field, check_cfg)
        d_ok = np.zeros(len(block), bool)
        if s_ok.any():
            d_ok[s_ok] = (_dynamic_safe(pts[s_ok], valid[s_ok], tracks, check_cfg, t_now)
                          if tracks else True)
        if d_ok.any():
            i = int(np.argmax(d_ok))
            plan.n_checked += i + 1
            plan.n_static_fail += int(np.sum(~s_ok[:i]))
            plan.n_dynamic_fail += int(np.sum(s_ok[:i] & ~d_ok[:i]))
            plan.primitive = MotionPrimitive(coeffs[i], float(T[i]), block[i].copy())
            plan.rank = start + i
            return plan
        plan.n_checked += len(block)
        plan.n_static_fail += int(np.sum(~s_ok))
        plan.n_dynamic_fail += int(np.sum(s_ok))
        start += len(block)
        size = min(2 * size, chunk)
    return plan


def _plan_compiled(plan: FlightPlan, state0: RobotState, ranked, field: DistanceField, tracks,
                   sample_cfg: SampleConfig, cfg: CheckConfig, t_now: float) -> FlightPlan:
    from .fast_checks import first_feasible, quintic_batch

    cap = _static_cap(field, cfg)
    off, offd = _offsets(cap, tuple(field.config.spacing))
    n = len(tracks)
    pos = np.array([tr.position for tr in tracks]).reshape(n, 3)
    vel = np.array([tr.velocity for tr in tracks]).reshape(n, 3)
    cov = np.array([tr.cov for tr in tracks]).reshape(n, 3, 2, 2)
    sig = np.array([tr.sigma for tr in tracks], dtype=float).reshape(n, 3)
    h0 = np.array([t_now - tr.stamp for tr in tracks], dtype=float)
    r = np.array([tr.radius + cfg.inflate for tr in tracks], dtype=float)
    height = np.array([tr.height for tr in tracks], dtype=float)
    scene = (np.ascontiguousarray(field.occupied), field.origin_index.astype(np.int64),
             np.asarray(field.config.spacing, dtype=float), off, offd, float(cap),
             float(field.saturation), float(cfg.d_min_static), pos, vel,
             np.ascontiguousarray(cov[:, :, 0, 0]), np.ascontiguousarray(cov[:, :, 0, 1]),
             np.ascontiguousarray(cov[:, :, 1, 1]), sig, h0, r, height, float(cfg.cov_floor),
             float(cfg.d_min_dynamic))
    ranked = np.ascontiguousarray(ranked, dtype=float)
    T = primitive_duration(np.linalg.norm(ranked - state0.position, axis=1), sample_cfg)
    coeffs = quintic_batch(np.asarray(state0.position, dtype=float),
                           np.asarray(state0.velocity, dtype=float),
                           np.asarray(state0.acceleration, dtype=float), ranked, T)
    i, n_sf, n_df = first_feasible(coeffs, T, float(cfg.dt), *scene)
    plan.n_static_fail = int(n_sf)
    plan.n_dynamic_fail = int(n_df)
    if i < 0:
        plan.n_checked = len(ranked)
        return plan
    plan.n_checked = int(i) + 1
    plan.rank = int(i)
    plan.primitive = MotionPrimitive(coeffs[i].copy(), float(T[i]), ranked[i].copy())
    return plan


@functools.lru_cache(maxsize=8)
def _offsets(cap: float, spacing: tuple):
    from .fast_checks import ball_offsets

    return ball_offsets(cap, np.array(spacing))
