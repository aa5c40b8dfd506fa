"""Stamp-corrected synchronization of asynchronous sensor streams.

Images carry a pipeline delay; their corrected stamp is ``T - T_delay``.
Pose and camera-angle samples arrive quickly and are kept in bounded queues
with strictly increasing stamps. A lookup finds the first retained sample
newer than the target and chooses between it and the one before (nearest
mode) or blends the two (interpolate mode).

Entries older than the bracketing pair are discarded on lookup; the pair
itself stays so the next, later target can still be bracketed.
"""

from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ExtrapolationRefused, InvalidArgument, NoData, OutOfOrder

NEAREST = "nearest"
INTERPOLATE = "interpolate"


@dataclass
class SyncConfig:
    t_delay: float = 0.18
    mode: str = INTERPOLATE

    def __post_init__(self):
        if self.t_delay < 0:
            raise InvalidArgument("t_delay must be non-negative")
        if self.mode not in (NEAREST, INTERPOLATE):
            raise InvalidArgument(f"unknown sync mode {self.mode!r}")


class StampedQueue:
    """Bounded queue of ``(stamp, value)`` with strictly increasing stamps."""

    def __init__(self, capacity: int = 256):
        if capacity < 2:
            raise InvalidArgument("capacity must be at least 2")
        self.capacity = capacity
        self._stamps: deque[float] = deque()
        self._values: deque = deque()

    def __len__(self) -> int:
        return len(self._stamps)

    @property
    def stamps(self) -> list[float]:
        return list(self._stamps)

    def entries(self):
        return list(zip(self._stamps, self._values))

    def push(self, stamp: float, value) -> "StampedQueue":
        if self._stamps and not stamp > self._stamps[-1]:
            raise OutOfOrder(f"stamp {stamp} not after {self._stamps[-1]}")
        self._stamps.append(float(stamp))
        self._values.append(value)
        while len(self._stamps) > self.capacity:
            self._stamps.popleft()
            self._values.popleft()
        return self

    def _drop_before(self, i: int) -> None:
        for _ in range(i):
            self._stamps.popleft()
            self._values.popleft()

    def lookup(self, target: float, mode: str = NEAREST):
        """Return ``(value, stamp_used)``; interpolated lookups report ``target``."""
        if not self._stamps:
            raise NoData("queue is empty")
        stamps = self._stamps
        # First index with stamp > target.
        j = bisect.bisect_right(stamps, target)
        if mode == INTERPOLATE:
            if target < stamps[0] or target > stamps[-1]:
                raise ExtrapolationRefused(f"target {target} outside [{stamps[0]}, {stamps[-1]}]")
            if j == len(stamps):
                # target equals the newest stamp
                return self._values[-1], stamps[-1]
            i = j - 1
            t0, t1 = stamps[i], stamps[j]
            v0, v1 = self._values[i], self._values[j]
            w = (target - t0) / (t1 - t0)
            value = _blend(v0, v1, w)
            self._drop_before(i)
            return value, target
        if mode != NEAREST:
            raise InvalidArgument(f"unknown sync mode {mode!r}")
        if j == 0:
            return self._values[0], stamps[0]
        if j == len(stamps):
            return self._values[-1], stamps[-1]
        i = j - 1
        before, after = stamps[i], stamps[j]
        k = i if target - before <= after - target else j
        value, used = self._values[k], stamps[k]
        self._drop_before(i)
        return value, used


def _blend(v0, v1, w: float):
    if isinstance(v0, (int, float)) and isinstance(v1, (int, float)):
        return (1.0 - w) * v0 + w * v1
    return (1.0 - w) * np.asarray(v0, dtype=float) + w * np.asarray(v1, dtype=float)


def push(q: StampedQueue, stamp: float, value) -> StampedQueue:
    return q.push(stamp, value)


def corrected_stamp(t_image: float, cfg: SyncConfig) -> float:
    """Image stamp minus the configured pipeline delay."""
    out = t_image - cfg.t_delay
    if out < 0:
        raise InvalidArgument("corrected stamp would be negative")
    return out


def sync_lookup(q: StampedQueue, target: float, cfg: SyncConfig):
    """Value synchronized to ``target`` under ``cfg.mode``."""
    value, _ = q.lookup(target, cfg.mode)
    return value
