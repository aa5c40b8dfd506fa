"""Angle and vector helpers.

Angles are plain radians. Wrapping is explicit: the camera servo works on an
unwrapped mechanical angle while direction buckets work on wrapped angles,
so nothing here wraps implicitly.

Vectors are numpy arrays of shape ``(3,)`` (or ``(2,)``) in a fixed,
right-handed world frame with z up.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgument, UndefinedHeading

TWO_PI = 2.0 * math.pi


def wrap_angle(a):
    """Wrap ``a`` into ``(-pi, pi]``.

    Works on floats and on numpy arrays. Non-finite input raises
    :class:`InvalidArgument`.
    """
    if isinstance(a, (float, int)):
        if not math.isfinite(a):
            raise InvalidArgument(f"non-finite angle: {a!r}")
        return math.pi - (math.pi - a) % TWO_PI
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"non-finite angle: {a!r}")
    out = math.pi - np.mod(math.pi - arr, TWO_PI)
    if out.ndim == 0:
        return float(out)
    return out


def angular_difference(a, b):
    """Signed difference ``a - b`` wrapped into ``(-pi, pi]``."""
    return wrap_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def heading_of(v) -> float:
    """Four-quadrant heading of the horizontal part of ``v``."""
    x, y = float(v[0]), float(v[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidArgument(f"non-finite vector: {v!r}")
    if x == 0.0 and y == 0.0:
        raise UndefinedHeading("heading of a zero horizontal vector")
    return math.atan2(y, x)


def unit_direction(angle):
    """Horizontal unit vector(s) ``(cos a, sin a, 0)`` for angle(s) ``a``."""
    a = np.asarray(angle, dtype=float)
    return np.stack([np.cos(a), np.sin(a), np.zeros_like(a)], axis=-1)


def unwrap_near(angle: float, reference: float) -> float:
    """Return the representative of ``angle`` (mod 2*pi) closest to ``reference``."""
    return reference + wrap_angle(angle - reference)


def rot_z(angle: float) -> np.ndarray:
    """3x3 rotation about the world z axis."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def vec3(x, y=None, z=None) -> np.ndarray:
    if y is None:
        arr = np.asarray(x, dtype=float).reshape(-1)
        if arr.size == 2:
            arr = np.append(arr, 0.0)
        return arr.copy()
    return np.array([x, y, 0.0 if z is None else z], dtype=float)


def angle_between(u, v) -> np.ndarray:
    """Angle in ``[0, pi]`` between rows of ``u`` and ``v`` (broadcasting).

    Uses ``atan2(|u x v|, u . v)`` which stays accurate near 0 and pi.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    ux, uy, uz = u[..., 0], u[..., 1], u[..., 2]
    vx, vy, vz = v[..., 0], v[..., 1], v[..., 2]
    cx = uy * vz - uz * vy
    cy = uz * vx - ux * vz
    cz = ux * vy - uy * vx
    cross = np.sqrt(cx * cx + cy * cy + cz * cz)
    dot = ux * vx + uy * vy + uz * vz
    return np.arctan2(cross, dot)
