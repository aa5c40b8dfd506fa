"""Sense update degree (SUD) over a discretized heading circle.

Each bucket holds a degree in ``[0, 1]`` describing how recently and fully
that horizontal direction has been observed. Buckets sit at
``d_i = -pi + i * delta``. Every planner tick applies an additive increment
built from the robot displacement and whether the bucket lies inside the
camera field of view, then clamps the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .geometry import TWO_PI, unit_direction, wrap_angle

# Slack on the FOV half-angle so a bucket sitting exactly on the edge counts
# as inside despite rounding in the bucket angles.
_FOV_EPS = 1e-9


@dataclass
class SudConfig:
    delta: float = math.pi / 8
    theta_h: float = math.radians(80.0)
    L_h: float = 10.0
    eps1: float = 1.0
    eps2: float = 1.2
    l_hit: float = 0.4
    l_miss: float = -0.05
    l_min: float = 0.0
    l_max: float = 1.0

    def __post_init__(self):
        if self.delta <= 0:
            raise InvalidArgument("delta must be positive")
        n = TWO_PI / self.delta
        if abs(n - round(n)) > 1e-9:
            raise InvalidArgument("2*pi/delta must be an integer")
        if not self.eps2 > self.eps1:
            raise InvalidArgument("eps2 must exceed eps1")
        if not self.l_hit > 0:
            raise InvalidArgument("l_hit must be positive")
        if not self.l_miss < 0:
            raise InvalidArgument("l_miss must be negative")
        if not 0 < self.theta_h < TWO_PI:
            raise InvalidArgument("theta_h must lie in (0, 2*pi)")
        if self.L_h <= 0:
            raise InvalidArgument("L_h must be positive")

    @property
    def n_buckets(self) -> int:
        return int(round(TWO_PI / self.delta))


def bucket_angles(config: SudConfig) -> np.ndarray:
    return -math.pi + np.arange(config.n_buckets) * config.delta


def sud_increment(config: SudConfig, dp, xi0) -> np.ndarray:
    """Per-bucket additive increment for one tick.

    ``dp`` is the robot displacement since the previous tick (world frame)
    and ``xi0`` the camera heading in the same frame. Both may carry matching
    leading batch dimensions; the result has shape ``(..., n_buckets)``.
    """
    dp = np.asarray(dp, dtype=float)
    xi0 = np.asarray(xi0, dtype=float)
    if dp.shape[-1:] != (3,) or dp.shape[:-1] != xi0.shape:
        raise InvalidArgument("dp must be (..., 3) with xi0 of the matching batch shape")
    if not (np.all(np.isfinite(dp)) and np.all(np.isfinite(xi0))):
        raise InvalidArgument("dp and xi0 must be finite")
    d = bucket_angles(config)
    horizontal = -config.eps1 * (dp @ unit_direction(d).T) / config.L_h
    vertical = -config.eps2 * np.abs(dp[..., 2:3])
    in_fov = np.abs(wrap_angle(d - xi0[..., None])) <= config.theta_h / 2 + _FOV_EPS
    hit = np.where(in_fov, config.l_hit, config.l_miss)
    return horizontal + vertical + hit


def clamp_update(values, increment, config: SudConfig) -> np.ndarray:
    """Add ``increment`` and clamp into ``[l_min, l_max]``."""
    return np.clip(np.asarray(values, dtype=float) + increment, config.l_min, config.l_max)


@dataclass
class SudBuffer:
    """One-dimensional ring of SUD values, initialized to zero."""

    config: SudConfig = field(default_factory=SudConfig)
    values: np.ndarray = None
    last_update: float = 0.0

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros(self.config.n_buckets)
        else:
            self.values = np.asarray(self.values, dtype=float).copy()
            if self.values.shape != (self.config.n_buckets,):
                raise InvalidArgument("values length must equal the bucket count")

    @property
    def directions(self) -> np.ndarray:
        return bucket_angles(self.config)

    def copy(self) -> "SudBuffer":
        return SudBuffer(self.config, self.values.copy(), self.last_update)

    def update(self, dp, xi0: float, stamp: float | None = None) -> "SudBuffer":
        """Apply one tick in place and return ``self``."""
        self.values[:] = clamp_update(self.values, sud_increment(self.config, dp, xi0), self.config)
        if stamp is not None:
            self.last_update = stamp
        return self

    def bucket_index(self, d):
        """Nearest bucket index for direction(s) ``d``; ties go to the lower index."""
        x = (np.asarray(wrap_angle(d)) + math.pi) / self.config.delta
        idx = np.ceil(x - 0.5).astype(int) % self.config.n_buckets
        if idx.ndim == 0:
            return int(idx)
        return idx

    def query(self, d):
        """SUD of direction(s) ``d`` (nearest bucket, no interpolation)."""
        idx = self.bucket_index(d)
        if isinstance(idx, int):
            return float(self.values[idx])
        return self.values[idx]

    __call__ = query


def sud_update(buf: SudBuffer, dp, xi0: float) -> SudBuffer:
    """Functional form: return an updated copy, leaving ``buf`` untouched."""
    return buf.copy().update(dp, xi0)


def sud_query(buf: SudBuffer, d):
    return buf.query(d)
