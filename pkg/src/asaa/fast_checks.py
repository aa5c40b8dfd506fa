"""Compiled first-feasible search over ranked primitives.

Same decisions as the vectorized checks in :mod:`asaa.flight_planner`, but
candidates are visited one at a time in rank order and each check stops at
its first violating setpoint, so a typical replan touches a handful of
primitives instead of whole blocks.

Static distances are read from the occupancy array directly: cell offsets
inside the cap ball are sorted by distance and the first occupied one gives
the cell-center distance. Anything farther than the cap reads as the cap,
which leaves every verdict unchanged (see ``_static_cap``).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


def ball_offsets(cap: float, spacing) -> tuple[np.ndarray, np.ndarray]:
    """Integer cell offsets within ``cap`` (cell-center metric), nearest first."""
    from .static_map import _cell_distance, _lattice_ratio

    spacing = np.asarray(spacing, dtype=float)
    ratio = _lattice_ratio(spacing)
    reach = np.floor(cap / spacing + 1e-9).astype(int)
    axes = [np.arange(-r, r + 1) for r in reach]
    off = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    dist = _cell_distance(off, np.zeros(3, dtype=int), ratio, spacing[0])
    keep = dist <= cap
    off, dist = off[keep], dist[keep]
    order = np.lexsort((off[:, 2], off[:, 1], off[:, 0], dist))
    return np.ascontiguousarray(off[order]), np.ascontiguousarray(dist[order])


@njit(cache=True)
def _setpoint(c, t, out):
    for a in range(3):
        out[a] = (c[a, 0] + c[a, 1] * t + c[a, 2] * t ** 2 + c[a, 3] * t ** 3
                  + c[a, 4] * t ** 4 + c[a, 5] * t ** 5)


@njit(cache=True)
def _static_distance(p, occ, origin, spacing, off, offd, cap, saturation, memo):
    # ``memo`` holds per-cell results for this call (negative = not yet known).
    nx, ny, nz = occ.shape
    i = int(math.floor(p[0] / spacing[0])) - origin[0]
    j = int(math.floor(p[1] / spacing[1])) - origin[1]
    k = int(math.floor(p[2] / spacing[2])) - origin[2]
    if i < 0 or j < 0 or k < 0 or i >= nx or j >= ny or k >= nz:
        return min(saturation, cap)
    if memo[i, j, k] >= 0.0:
        return memo[i, j, k]
    out = min(cap, saturation)
    for n in range(off.shape[0]):
        a = i + off[n, 0]
        b = j + off[n, 1]
        c = k + off[n, 2]
        if 0 <= a < nx and 0 <= b < ny and 0 <= c < nz and occ[a, b, c]:
            out = min(offd[n], cap)
            break
    memo[i, j, k] = out
    return out


@njit(cache=True)
def _mahalanobis(p, h, pos, vel, p00, p01, p11, sig, height, r, floor):
    # Offset from the predicted cylinder axis (height pinned to the top when
    # the point is above it), shortened by the radius, then scaled per axis.
    dx = p[0] - (pos[0] + h * vel[0])
    dy = p[1] - (pos[1] + h * vel[1])
    dz = 0.0 if p[2] < height else p[2] - height
    n = math.sqrt(dx * dx + dy * dy + dz * dz)
    scale = 1.0 - r / n if n > r else 0.0
    out = 0.0
    for a in range(3):
        var = p00[a] + 2.0 * h * p01[a] + h * h * p11[a] + 0.25 * h ** 4 * sig[a] ** 2
        if var < floor:
            var = floor
        d = (dx, dy, dz)[a] * scale
        out += d * d / var
    return out


@njit(cache=True)
def first_feasible(coeffs, T, dt, occ, origin, spacing, off, offd, cap, saturation, d_static,
                   tr_pos, tr_vel, tr_p00, tr_p01, tr_p11, tr_sig, tr_h0, tr_r, tr_height,
                   floor, d_dynamic):
    """Index of the first candidate passing both checks (-1 if none), the
    number of static failures before it and the number of dynamic failures
    among those that passed the static check."""
    m = coeffs.shape[0]
    n_tr = tr_pos.shape[0]
    p = np.empty(3)
    memo = np.full(occ.shape, -1.0)
    n_sf = 0
    n_df = 0
    for ci in range(m):
        c = coeffs[ci]
        K = int(math.floor(T[ci] / dt + 1e-9))
        s_ok = True
        prev = 0.0
        for k in range(K + 1):
            t = min(k * dt, T[ci])
            _setpoint(c, t, p)
            D = _static_distance(p, occ, origin, spacing, off, offd, cap, saturation, memo)
            if k > 0 and not (D > d_static or D >= prev):
                s_ok = False
                break
            prev = D
        if not s_ok:
            n_sf += 1
            continue
        d_ok = True
        for j in range(n_tr):
            prev = 0.0
            for k in range(K + 1):
                t = min(k * dt, T[ci])
                _setpoint(c, t, p)
                h = tr_h0[j] + k * dt
                D = _mahalanobis(p, h, tr_pos[j], tr_vel[j], tr_p00[j], tr_p01[j], tr_p11[j],
                                 tr_sig[j], tr_height[j], tr_r[j], floor)
                if k > 0 and not (D > d_dynamic or D >= prev):
                    d_ok = False
                    break
                prev = D
            if not d_ok:
                break
        if d_ok:
            return ci, n_sf, n_df
        n_df += 1
    return -1, n_sf, n_df


@njit(cache=True)
def quintic_batch(p0, v0, a0, targets, T):
    """Rest-to-target quintic coefficients ``(m, 3, 6)``.

    Mirrors ``quintic_coefficients`` operation for operation (zero end
    velocity and acceleration) so both give identical bits.
    """
    m = targets.shape[0]
    out = np.empty((m, 3, 6))
    for i in range(m):
        t = T[i]
        t2 = t * t
        t3 = t2 * t
        t4 = t3 * t
        t5 = t4 * t
        for a in range(3):
            dp = targets[i, a] - p0[a] - v0[a] * t - 0.5 * a0[a] * t2
            dv = 0.0 - v0[a] - a0[a] * t
            da = 0.0 - a0[a]
            out[i, a, 0] = p0[a]
            out[i, a, 1] = v0[a]
            out[i, a, 2] = 0.5 * a0[a]
            out[i, a, 3] = (20 * dp - 8 * dv * t + da * t2) / (2 * t3)
            out[i, a, 4] = (-30 * dp + 14 * dv * t - 2 * da * t2) / (2 * t4)
            out[i, a, 5] = (12 * dp - 6 * dv * t + da * t2) / (2 * t5)
    return out
