"""Synthetic stereo sensing: FOV and range limits, occlusion, blur-dependent depth noise.

Static obstacles are presampled as surface points. Every tick the points near
the robot are filtered by the horizontal view wedge, the range limit and a
segment occlusion test against the static geometry, then perturbed along the
viewing ray. Dynamic obstacles produce camera-frame detections (pixel center,
depth, box size) that the episode loop delivers after the pipeline delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..config import SensorConfig
from ..geometry import wrap_angle
from ..tracker import camera_projection
from .scenario import Box, Cylinder

_SQRT_HALF_PI = math.sqrt(math.pi / 2)
# Sight lines stop this far short of the target so a point on a face is not
# occluded by its own solid.
_SIGHT_MARGIN = 0.05


def derived_noise_slope(noise_0: float, v_ref: float = 4.5, mean_error: float = 0.2) -> float:
    """Slope giving a half-normal mean depth error ``mean_error`` at ``|v_cam| = v_ref``."""
    return (mean_error * _SQRT_HALF_PI - noise_0) / v_ref


def camera_relative_speed(d_cam, rate: float, v_rob, v_obs, bearing) -> np.ndarray:
    """Magnitude of the apparent velocity of target(s) seen by a turning camera.

    ``rate`` is the total camera turn rate (head plus yaw). The rotation term
    is tangential with magnitude ``d_cam * rate``; robot and target velocities
    add as a relative velocity.
    """
    d = np.asarray(d_cam, dtype=float)
    b = np.asarray(bearing, dtype=float)
    tangential = np.stack([-np.sin(b), np.cos(b), np.zeros_like(b)], axis=-1)
    v = (d * rate)[..., None] * tangential + np.asarray(v_rob, float) - np.asarray(v_obs, float)
    return np.linalg.norm(v, axis=-1)


@dataclass
class CameraMessage:
    """What the detector reports for one obstacle in one image."""

    pixel: tuple
    depth: float
    bbox: tuple
    label: str
    obstacle: int


class SensorModel:
    def __init__(self, cfg: SensorConfig, statics=(), spacing: float = 0.1, z_spacing: float = 0.2):
        if not 0 < cfg.theta_h_deg < 180 or cfg.L_h <= 0:
            raise ValueError("theta_h must lie in (0, 180) degrees and L_h be positive")
        self.cfg = cfg
        self.theta_h = math.radians(cfg.theta_h_deg)
        self.L_h = cfg.L_h
        self.noise_0 = cfg.depth_noise_0
        self.noise_k = (derived_noise_slope(cfg.depth_noise_0) if cfg.depth_noise_k is None
                        else cfg.depth_noise_k)
        fx = 0.5 * cfg.image_width / math.tan(0.5 * self.theta_h)
        self.intrinsics = (fx, fx, 0.5 * cfg.image_width, 0.5 * cfg.image_height)
        self.boxes = [s for s in statics if isinstance(s, Box)]
        self.cylinders = [s for s in statics if isinstance(s, Cylinder)]
        self._box_lo = np.array([b.lo for b in self.boxes]).reshape(-1, 3)
        self._box_hi = np.array([b.hi for b in self.boxes]).reshape(-1, 3)
        self._cyl = np.array([[*c.center, c.radius, c.height] for c in self.cylinders]).reshape(-1, 4)
        pts = surface_points(statics, spacing, z_spacing)
        self.surface = pts
        self._tree = cKDTree(pts) if len(pts) else None

    def sigma(self, v_cam) -> np.ndarray:
        return self.noise_0 + self.noise_k * np.asarray(v_cam, dtype=float)

    def in_view(self, cam_pos, cam_heading: float, points) -> np.ndarray:
        """Horizontal wedge and range test (no occlusion)."""
        rel = np.asarray(points, dtype=float)[..., :2] - np.asarray(cam_pos, dtype=float)[:2]
        rng = np.hypot(rel[..., 0], rel[..., 1])
        bearing = np.arctan2(rel[..., 1], rel[..., 0])
        off = np.abs(wrap_angle(bearing - cam_heading))
        return (off <= 0.5 * self.theta_h) & (rng <= self.L_h)

    def occluded(self, cam_pos, points) -> np.ndarray:
        """Whether the sight line from the camera to each point crosses static geometry."""
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        out = np.zeros(len(p), dtype=bool)
        if not len(p):
            return out
        a = np.asarray(cam_pos, dtype=float)
        seg = p - a
        length = np.linalg.norm(seg, axis=1)
        t_end = np.clip(1.0 - _SIGHT_MARGIN / np.maximum(length, 1e-12), 0.0, 1.0)
        if len(self._box_lo):
            out |= _segment_hits_boxes(a, seg, t_end, self._box_lo, self._box_hi)
        if len(self._cyl):
            out |= _segment_hits_cylinders(a, seg, t_end, self._cyl)
        return out

    def visible(self, cam_pos, cam_heading: float, points) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        mask = self.in_view(cam_pos, cam_heading, p)
        if mask.any():
            idx = np.flatnonzero(mask)
            mask[idx[self.occluded(cam_pos, p[idx])]] = False
        return mask

    def static_scan(self, cam_pos, cam_heading: float, cam_rate: float, v_rob, rng,
                    window_center, half_extent) -> np.ndarray:
        """Visible static surface points within the map window, with range noise."""
        if self._tree is None:
            return np.empty((0, 3))
        c = np.asarray(window_center, dtype=float)
        half = np.asarray(half_extent, dtype=float)
        near = self._tree.query_ball_point(c, float(np.linalg.norm(half)))
        if not near:
            return np.empty((0, 3))
        pts = self.surface[np.sort(near)]
        pts = pts[np.all(np.abs(pts - c) <= half, axis=1)]
        pts = pts[self.visible(cam_pos, cam_heading, pts)]
        if not len(pts):
            return pts
        a = np.asarray(cam_pos, dtype=float)
        ray = pts - a
        r = np.linalg.norm(ray, axis=1)
        bearing = np.arctan2(ray[:, 1], ray[:, 0])
        v_cam = camera_relative_speed(np.hypot(ray[:, 0], ray[:, 1]), cam_rate, v_rob, 0.0, bearing)
        noisy = r + rng.standard_normal(len(r)) * self.sigma(v_cam)
        return a + ray * (np.maximum(noisy, 0.0) / r)[:, None]

    def detect(self, cam_pos, cam_heading: float, cam_rate: float, v_rob, obstacles, rng):
        """Camera messages for visible dynamic obstacles.

        ``obstacles`` yields ``(index, center, velocity, radius, height, label)``
        with ``center`` the middle of the cylinder.
        """
        out = []
        a = np.asarray(cam_pos, dtype=float)
        for idx, center, vel, radius, height, label in obstacles:
            center = np.asarray(center, dtype=float)
            if not self.in_view(a, cam_heading, center[None])[0]:
                continue
            if self.occluded(a, center[None])[0]:
                continue
            (u, v), depth = camera_projection(center, self.intrinsics, a, cam_heading)
            if depth <= 0:
                continue
            rel = center - a
            bearing = math.atan2(rel[1], rel[0])
            v_cam = camera_relative_speed(math.hypot(rel[0], rel[1]), cam_rate, v_rob, vel, bearing)
            noisy = depth + rng.standard_normal() * float(self.sigma(v_cam))
            fx, fy = self.intrinsics[:2]
            bbox = (2.0 * radius * fx / depth, height * fy / depth)
            out.append(CameraMessage((float(u), float(v)), max(float(noisy), 0.05), bbox, label, idx))
        return out


def _segment_hits_boxes(a, seg, t_end, lo, hi) -> np.ndarray:
    # Slab test for all segments against all boxes, (m, b).
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / seg[:, None, :]
        t0 = (lo[None] - a) * inv
        t1 = (hi[None] - a) * inv
    tmin = np.minimum(t0, t1)
    tmax = np.maximum(t0, t1)
    parallel = seg[:, None, :] == 0
    inside = (a >= lo) & (a <= hi)                       # (b, 3)
    tmin = np.where(parallel, np.where(inside[None], -np.inf, np.inf), tmin)
    tmax = np.where(parallel, np.where(inside[None], np.inf, -np.inf), tmax)
    enter = np.max(tmin, axis=2)
    leave = np.min(tmax, axis=2)
    lo_t = np.maximum(enter, 0.0)
    hi_t = np.minimum(leave, t_end[:, None])
    return np.any(lo_t < hi_t, axis=1)


def _segment_hits_cylinders(a, seg, t_end, cyl) -> np.ndarray:
    # Closest approach in the plane, then check height at that parameter.
    d = seg[:, None, :2]
    w = a[:2] - cyl[None, :, :2]
    dd = np.sum(d * d, axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(dd > 0, -np.sum(w * d, axis=2) / dd, 0.0)
    t = np.clip(t, 0.0, t_end[:, None])
    closest = w + t[..., None] * d
    z = a[2] + t * seg[:, None, 2]
    hit = (np.sum(closest * closest, axis=2) < cyl[None, :, 2] ** 2) & (z >= 0) & (z <= cyl[None, :, 3])
    return np.any(hit, axis=1)


def surface_points(statics, spacing: float = 0.1, z_spacing: float = 0.2) -> np.ndarray:
    """Points on the side faces and tops of boxes and cylinders."""
    chunks = []
    for s in statics:
        if isinstance(s, Box):
            chunks.append(_box_surface(s.lo, s.hi, spacing, z_spacing))
        elif isinstance(s, Cylinder):
            chunks.append(_cylinder_surface(s, spacing, z_spacing))
    if not chunks:
        return np.empty((0, 3))
    return np.vstack(chunks)


def _axis(lo, hi, step):
    n = max(int(math.ceil((hi - lo) / step)), 1)
    return np.linspace(lo, hi, n + 1)


def _box_surface(lo, hi, step, zstep):
    xs, ys, zs = _axis(lo[0], hi[0], step), _axis(lo[1], hi[1], step), _axis(lo[2], hi[2], zstep)
    faces = []
    for x in (lo[0], hi[0]):
        Y, Z = np.meshgrid(ys, zs, indexing="ij")
        faces.append(np.stack([np.full(Y.size, x), Y.ravel(), Z.ravel()], 1))
    for y in (lo[1], hi[1]):
        X, Z = np.meshgrid(xs, zs, indexing="ij")
        faces.append(np.stack([X.ravel(), np.full(X.size, y), Z.ravel()], 1))
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    faces.append(np.stack([X.ravel(), Y.ravel(), np.full(X.size, hi[2])], 1))
    return np.unique(np.vstack(faces), axis=0)


def _cylinder_surface(c: Cylinder, step, zstep):
    n = max(int(math.ceil(2 * math.pi * c.radius / step)), 8)
    ang = np.arange(n) * (2 * math.pi / n)
    zs = _axis(0.0, c.height, zstep)
    A, Z = np.meshgrid(ang, zs, indexing="ij")
    side = np.stack([c.center[0] + c.radius * np.cos(A.ravel()),
                     c.center[1] + c.radius * np.sin(A.ravel()), Z.ravel()], 1)
    rr = np.arange(0.0, c.radius, step)
    top = [np.array([[c.center[0], c.center[1], c.height]])]
    for r in rr[1:]:
        m = max(int(math.ceil(2 * math.pi * r / step)), 6)
        a = np.arange(m) * (2 * math.pi / m)
        top.append(np.stack([c.center[0] + r * np.cos(a), c.center[1] + r * np.sin(a),
                             np.full(m, c.height)], 1))
    return np.vstack([side, *top])
