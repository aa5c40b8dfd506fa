"""Observation-steering policies and how their outputs map to head and yaw commands."""

from __future__ import annotations

import enum
import math

from ..geometry import TWO_PI, unwrap_near


class Paradigm(str, enum.Enum):
    ASAA_ROTATABLE = "asaa_rotatable"          # multi-objective plan, rotatable head
    VELOCITY_ROTATABLE = "velocity_rotatable"  # head follows the flight direction
    MULTIOBJ_YAW = "multiobj_yaw"              # fixed head, fuselage follows the plan
    VELOCITY_YAW = "velocity_yaw"              # fixed head, fuselage follows the flight direction

    @property
    def rotatable(self) -> bool:
        return self in (Paradigm.ASAA_ROTATABLE, Paradigm.VELOCITY_ROTATABLE)

    @property
    def multi_objective(self) -> bool:
        return self in (Paradigm.ASAA_ROTATABLE, Paradigm.MULTIOBJ_YAW)


PARADIGMS = tuple(p.value for p in Paradigm)


def parse_paradigm(name) -> Paradigm:
    if isinstance(name, Paradigm):
        return name
    try:
        return Paradigm(str(name).strip().lower())
    except ValueError:
        raise KeyError(f"unknown paradigm {name!r}; expected one of {', '.join(PARADIGMS)}") from None


def route_paradigm(paradigm: Paradigm, planned: float | None, vel_dir: float | None,
                   head: float, yaw: float, head_limits=(-math.inf, math.inf)) -> tuple[float, float]:
    """Return ``(head_cmd, yaw_cmd)``.

    ``planned`` is the multi-objective heading (world frame) and ``vel_dir``
    the flight direction; either may be ``None`` when not applicable, in
    which case the current angle is held. The multi-objective head plan is
    already a mechanical angle. Direction-following commands are unwrapped
    next to the current angle so the slew takes the short way round, unless
    that would leave the head's mechanical range.
    """
    p = parse_paradigm(paradigm)
    if not p.rotatable:
        aim = planned if p.multi_objective else vel_dir
        return 0.0, (yaw if aim is None else unwrap_near(aim, yaw))
    if p.multi_objective:
        return (head if planned is None else planned - yaw), 0.0
    if vel_dir is None:
        return head, 0.0
    lo, hi = head_limits
    cmd = unwrap_near(vel_dir - yaw, head)
    if cmd > hi:
        cmd -= TWO_PI
    elif cmd < lo:
        cmd += TWO_PI
    return cmd, 0.0
