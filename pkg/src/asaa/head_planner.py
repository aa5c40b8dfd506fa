"""Camera heading selection by enumeration of a scalarized multi-objective cost.

Five costs are evaluated for every candidate heading ``xi``:

* ``f1`` goal direction out of view, weighted by how stale it is,
* ``f2`` flight direction out of view, growing with squared speed,
* ``f3`` tracked dynamic obstacles out of view, weighted by speed/range,
* ``f4`` the SUD of the candidate itself (prefer stale directions),
* ``f5`` squared change from the previously planned heading.

The weighted sum is minimized over a discrete domain. Direction comparisons
use wrapped differences; ``f5`` uses the raw mechanical angles so that a swing
across the +-pi seam is charged for its real length.

A cable-limited head cannot turn past the ends of its range. With
``PlanningContext.span`` set, a direction that is out of view is charged for
the turn the head can actually make inside the span, rather than the wrapped
difference. Without this the wrapped penalty can pull the head against its
stop, where it stays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgument
from .geometry import wrap_angle
from .sud import SudBuffer

# Below this horizontal speed the flight direction is considered undefined.
HOVER_SPEED = 0.05

# Relative tolerance for treating two scalarized costs as tied. Relative to the
# largest cost on the domain, so ties survive a uniform rescaling of weights.
_TIE_RTOL = 1e-9


@dataclass
class PlannerWeights:
    lambda1: float = 0.2
    lambda2: float = 0.9
    lambda3: float = 1.0
    lambda4: float = 0.3
    lambda5: float = 0.4
    beta: float = 1.0

    def __post_init__(self):
        lam = self.lambdas
        if np.any(lam < 0) or self.beta < 0:
            raise InvalidArgument("weights must be non-negative")
        if not np.any(lam > 0):
            raise InvalidArgument("at least one lambda must be positive")

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3, self.lambda4, self.lambda5])

    def scaled(self, c: float) -> "PlannerWeights":
        return PlannerWeights(*(c * self.lambdas), beta=self.beta)


def table_one_weights() -> PlannerWeights:
    """Coefficients as tabulated for the original experiments (``lambda4 = 0.1``)."""
    return PlannerWeights(0.2, 0.9, 1.0, 0.1, 0.4, beta=1.0)


@dataclass
class HeadState:
    xi0: float = 0.0
    xi_prev_plan: float = 0.0
    xi_min: float = -1.25 * math.pi
    xi_max: float = 1.25 * math.pi
    xi_dot_max: float = 1.2

    def __post_init__(self):
        if not self.xi_min <= self.xi0 <= self.xi_max:
            raise InvalidArgument("xi0 outside mechanical limits")
        if self.xi_dot_max <= 0:
            raise InvalidArgument("xi_dot_max must be positive")


@dataclass
class TrackView:
    """What the head planner needs from one tracked obstacle."""

    direction: float
    distance: float
    speed: float

    def __post_init__(self):
        if not self.distance > 0:
            raise InvalidArgument("track distance must be positive")


@dataclass
class PlanningContext:
    theta_h: float
    sud: SudBuffer
    goal_dir: float | None = None
    vel_dir: float | None = None
    v_h: float = 0.0
    tracks: Sequence[TrackView] = field(default_factory=list)
    span: tuple | None = None

    def __post_init__(self):
        if self.v_h < 0:
            raise InvalidArgument("v_h must be non-negative")
        if self.span is not None and not self.span[0] < self.span[1]:
            raise InvalidArgument("span must be an increasing pair")


def penalty_g(theta_bar, theta_h: float):
    """Quadratic out-of-view penalty; zero inside ``[-theta_h/2, theta_h/2]``."""
    t = np.asarray(theta_bar, dtype=float)
    half = theta_h / 2.0
    out = np.where(np.abs(t) <= half, 0.0, t * t - half * half)
    if out.ndim == 0:
        return float(out)
    return out


def view_offset(xi, d: float, theta_h: float, span=None):
    """Angle of direction ``d`` relative to heading(s) ``xi`` for the view penalty.

    Wrapped difference when ``span`` is ``None`` or when ``d`` is in view;
    otherwise the difference to the copy of ``d`` (mod 2*pi) inside ``span``
    closest to ``xi``.
    """
    xi = np.asarray(xi, dtype=float)
    w = wrap_angle(xi - d)
    if span is None:
        return w
    lo, hi = span
    base = wrap_angle(float(d))
    reps = [base + k * 2 * math.pi for k in (-1, 0, 1)]
    reps = [r for r in reps if lo - 1e-9 <= r <= hi + 1e-9]
    turn = xi - reps[0]
    for r in reps[1:]:
        alt = xi - r
        turn = np.where(np.abs(alt) < np.abs(turn), alt, turn)
    return np.where(np.abs(w) <= theta_h / 2, w, turn)


def search_domain(delta: float, xi0: float = 0.0, free: bool = False) -> np.ndarray:
    """Candidate headings.

    The default (limited-range) form is ``{-pi-delta, -pi, ..., pi+delta}``.
    With ``free=True`` the domain is ``{xi0-pi, ..., xi0+pi-delta}`` for a head
    (or fuselage) without rotation limits.
    """
    n = int(round(2 * math.pi / delta))
    if free:
        return xi0 - math.pi + np.arange(n) * delta
    return -math.pi + np.arange(-1, n + 2) * delta


def cost_components(xi, ctx: PlanningContext, weights: PlannerWeights, head: HeadState) -> np.ndarray:
    """Unweighted costs ``[f1..f5]``; shape ``(5,)`` or ``(len(xi), 5)``."""
    xi = np.asarray(xi, dtype=float)
    scalar = xi.ndim == 0
    xi = np.atleast_1d(xi)
    th = ctx.theta_h
    sud = ctx.sud
    f = np.zeros((xi.size, 5))
    span = ctx.span
    if ctx.goal_dir is not None:
        f[:, 0] = penalty_g(view_offset(xi, ctx.goal_dir, th, span), th) * (1.0 - sud.query(ctx.goal_dir))
    if ctx.vel_dir is not None and ctx.v_h >= HOVER_SPEED:
        f[:, 1] = (ctx.v_h**2 * penalty_g(view_offset(xi, ctx.vel_dir, th, span), th)
                   * (1.0 - sud.query(ctx.vel_dir)))
    for tr in ctx.tracks:
        f[:, 2] += (weights.beta * tr.speed / tr.distance
                    * penalty_g(view_offset(xi, tr.direction, th, span), th))
    f[:, 3] = sud.query(xi)
    f[:, 4] = (xi - head.xi_prev_plan) ** 2
    return f[0] if scalar else f


def scalarize(f: np.ndarray, weights: PlannerWeights) -> np.ndarray:
    return f @ weights.lambdas


def select_min(xi: np.ndarray, cost: np.ndarray, xi0: float) -> float:
    """Argmin with deterministic tie-breaking: nearest to ``xi0``, then smallest."""
    scale = float(np.max(np.abs(cost))) if cost.size else 0.0
    tied = np.flatnonzero(cost <= cost.min() + _TIE_RTOL * scale)
    order = np.lexsort((xi[tied], np.abs(xi[tied] - xi0)))
    return float(xi[tied[order[0]]])


def plan_head(ctx: PlanningContext, weights: PlannerWeights, head: HeadState,
              delta: float, free: bool = False) -> float:
    """Heading in the search domain minimizing the weighted cost."""
    xi = search_domain(delta, head.xi0, free=free)
    cost = scalarize(cost_components(xi, ctx, weights, head), weights)
    return select_min(xi, cost, head.xi0)


def rate_limit(xi_cmd: float, xi0: float, dt: float, xi_dot_max: float,
               xi_min: float = -math.inf, xi_max: float = math.inf) -> float:
    """Move from ``xi0`` toward ``xi_cmd`` by at most ``xi_dot_max * dt``."""
    if not dt > 0:
        raise InvalidArgument("dt must be positive")
    step = xi_dot_max * dt
    out = xi0 + min(max(xi_cmd - xi0, -step), step)
    # Rounding of the sum can overshoot the step by an ulp; pull it back.
    while abs(out - xi0) > step:
        out = math.nextafter(out, xi0)
    return min(max(out, xi_min), xi_max)
