"""Egocentric occupancy grid and Euclidean distance field for static obstacles.

The grid is a robot-centered box of ``n x n x nz`` cells. A cell is occupied
when a static point landed in it within the last ``hit_window`` seconds.
Cells inside (inflated) dynamic-obstacle cylinders are cleared after every
integration so moving obstacles do not leave trails. Cells outside the
window and never-observed cells read as free.

The distance field uses the cell-center metric. The dense array is computed
on demand with an exact separable transform. Point queries go through a
k-d tree over occupied cell centers, which returns the same per-cell value
without building the dense array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import InvalidArgument

_NEVER = -np.inf


@dataclass
class GridConfig:
    side: float = 6.4
    resolution: float = 0.1
    z_resolution: float = 0.4
    nz: int = 8
    hit_window: float = 1.0

    def __post_init__(self):
        n = self.side / self.resolution
        if abs(n - round(n)) > 1e-9:
            raise InvalidArgument("side/resolution must be an integer")
        if self.resolution <= 0 or self.z_resolution <= 0 or self.nz < 1:
            raise InvalidArgument("resolutions and nz must be positive")

    @property
    def n(self) -> int:
        return int(round(self.side / self.resolution))

    @property
    def spacing(self) -> np.ndarray:
        return np.array([self.resolution, self.resolution, self.z_resolution])


class OccupancyGrid:
    """Robot-centered occupancy grid with a sliding hit window."""

    def __init__(self, config: GridConfig | None = None, center=(0.0, 0.0, 0.0)):
        self.config = config or GridConfig()
        c = self.config
        self.last_hit = np.full((c.n, c.n, c.nz), _NEVER)
        self.now = 0.0
        self.origin_index = self._origin_for(center)

    # world <-> index -------------------------------------------------------
    def _origin_for(self, center) -> np.ndarray:
        c = self.config
        center_cell = np.floor(np.asarray(center, dtype=float) / c.spacing).astype(int)
        return center_cell - np.array([c.n // 2, c.n // 2, c.nz // 2])

    @property
    def origin(self) -> np.ndarray:
        """World position of the lower corner of cell ``(0, 0, 0)``."""
        return self.origin_index * self.config.spacing

    @property
    def shape(self):
        return self.last_hit.shape

    def world_to_index(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return np.floor(p / self.config.spacing).astype(int) - self.origin_index

    def cell_centers(self, idx) -> np.ndarray:
        return (np.asarray(idx) + self.origin_index + 0.5) * self.config.spacing

    def in_window(self, idx) -> np.ndarray:
        idx = np.asarray(idx)
        return np.all((idx >= 0) & (idx < np.array(self.shape)), axis=-1)

    # state -----------------------------------------------------------------
    @property
    def occupied(self) -> np.ndarray:
        return self.last_hit >= self.now - self.config.hit_window

    def recenter(self, center) -> None:
        """Shift the window to ``center`` keeping overlapping cells in place."""
        new_origin = self._origin_for(center)
        shift = new_origin - self.origin_index
        if not np.any(shift):
            return
        old = self.last_hit
        new = np.full_like(old, _NEVER)
        src, dst = [], []
        for s, size in zip(shift, old.shape):
            lo, hi = max(0, s), min(size, size + s)
            if lo >= hi:
                self.last_hit = new
                self.origin_index = new_origin
                return
            src.append(slice(lo, hi))
            dst.append(slice(lo - s, hi - s))
        new[tuple(dst)] = old[tuple(src)]
        self.last_hit = new
        self.origin_index = new_origin

    def mark(self, points, stamp: float) -> None:
        if len(points) == 0:
            return
        idx = self.world_to_index(np.asarray(points, dtype=float).reshape(-1, 3))
        idx = idx[self.in_window(idx)]
        self.last_hit[idx[:, 0], idx[:, 1], idx[:, 2]] = stamp

    def clear_cylinder(self, center, radius: float, height: float) -> None:
        """Free every cell whose center lies in the cylinder grown by one cell."""
        c = self.config
        r = radius + c.resolution
        center = np.asarray(center, dtype=float)
        lo = center - np.array([r, r, 0.5 * height + c.z_resolution])
        hi = center + np.array([r, r, 0.5 * height + c.z_resolution])
        ilo = np.maximum(self.world_to_index(lo), 0)
        ihi = np.minimum(self.world_to_index(hi) + 1, np.array(self.shape))
        if np.any(ihi <= ilo):
            return
        sp, org = c.spacing, self.origin_index
        cx, cy, cz = ((np.arange(a, b) + o + 0.5) * h for a, b, o, h in zip(ilo, ihi, org, sp))
        inside_xy = (cx[:, None] - center[0]) ** 2 + (cy[None, :] - center[1]) ** 2 <= r * r
        inside_z = np.abs(cz - center[2]) <= 0.5 * height + c.z_resolution
        mask = inside_xy[:, :, None] & inside_z[None, None, :]
        block = self.last_hit[ilo[0]:ihi[0], ilo[1]:ihi[1], ilo[2]:ihi[2]]
        block[mask] = _NEVER

    def copy(self) -> "OccupancyGrid":
        g = OccupancyGrid.__new__(OccupancyGrid)
        g.config = self.config
        g.last_hit = self.last_hit.copy()
        g.now = self.now
        g.origin_index = self.origin_index.copy()
        return g


def integrate_scan(grid: OccupancyGrid, points, dynamic_regions=(), center=None,
                   stamp: float | None = None) -> OccupancyGrid:
    """Recenter, mark hit cells, then clear dynamic-obstacle cylinders.

    ``dynamic_regions`` holds ``(center, radius, height)`` with ``center`` the
    cylinder's middle. Clearing runs last so it wins over static hits.
    Mutates and returns ``grid``.
    """
    if stamp is not None:
        grid.now = stamp
    if center is not None:
        grid.recenter(center)
    grid.mark(points, grid.now)
    for c, r, h in dynamic_regions:
        grid.clear_cylinder(c, r, h)
    return grid


class DistanceField:
    """Distance from each cell center to the nearest occupied cell center."""

    def __init__(self, occupied: np.ndarray, origin_index: np.ndarray, config: GridConfig):
        self.occupied = occupied
        self.origin_index = np.asarray(origin_index).copy()
        self.config = config
        self.saturation = float(config.side)
        self._dense = None
        # Lattice units (xy resolution = 1) keep squared distances integral.
        self._ratio = _lattice_ratio(config.spacing)
        self._occ_idx = None
        self._tree_built = False
        self._tree_obj = None

    @property
    def _tree(self):
        # Built on first point query; the compiled planner reads ``occupied`` directly.
        if not self._tree_built:
            self._occ_idx = np.argwhere(self.occupied)
            if len(self._occ_idx):
                self._tree_obj = cKDTree(self._occ_idx * self._ratio)
            self._tree_built = True
        return self._tree_obj

    @property
    def empty(self) -> bool:
        return not self.occupied.any()

    @property
    def distances(self) -> np.ndarray:
        if self._dense is None:
            self._dense = _dense_edt(self.occupied, self.config.spacing, self.saturation)
        return self._dense

    def query_cells(self, idx, cap: float | None = None) -> np.ndarray:
        """Distance per cell index; values above ``cap`` may be reported as ``cap``."""
        idx = np.asarray(idx).reshape(-1, 3)
        out = np.full(len(idx), self.saturation)
        inside = np.all((idx >= 0) & (idx < np.array(self.occupied.shape)), axis=-1)
        if self._tree is None or not inside.any():
            return out if cap is None else np.minimum(out, cap)
        if self._dense is not None:
            i = idx[inside]
            out[inside] = self._dense[i[:, 0], i[:, 1], i[:, 2]]
            return out if cap is None else np.minimum(out, cap)
        unit = self.config.spacing[0]
        if cap is None:
            _, nearest = self._tree.query(idx[inside] * self._ratio)
            out[inside] = _cell_distance(idx[inside], self._occ_idx[nearest], self._ratio, unit)
            return out
        # Bounded search: cells with no occupied cell within the cap read as the cap.
        bound = cap / unit + 1e-9
        sub = idx[inside]
        d, nearest = self._tree.query(sub * self._ratio, distance_upper_bound=bound)
        hit = np.isfinite(d)
        vals = np.full(len(sub), min(cap, self.saturation))
        if hit.any():
            exact = _cell_distance(sub[hit], self._occ_idx[nearest[hit]], self._ratio, unit)
            vals[hit] = np.minimum(exact, cap)
        out[inside] = vals
        return np.minimum(out, cap)

    def query(self, points, cap: float | None = None) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        idx = np.floor(p.reshape(-1, 3) / self.config.spacing).astype(int) - self.origin_index
        out = self.query_cells(idx, cap)
        return out.reshape(p.shape[:-1]) if p.ndim > 1 else out


def _lattice_ratio(spacing) -> np.ndarray:
    # Spacing in units of the xy resolution; snapped so 0.4/0.1 is exactly 4.
    r = np.asarray(spacing, dtype=float) / spacing[0]
    snapped = np.round(r)
    return np.where(np.abs(r - snapped) < 1e-9, snapped, r)


def _cell_distance(a, b, ratio, unit: float) -> np.ndarray:
    d = (np.asarray(a) - np.asarray(b)) * ratio
    return unit * np.sqrt(np.sum(d * d, axis=-1))


def _dense_edt(occupied: np.ndarray, spacing: np.ndarray, saturation: float) -> np.ndarray:
    if not occupied.any():
        return np.full(occupied.shape, saturation)
    ratio = _lattice_ratio(spacing)
    _, nearest = ndimage.distance_transform_edt(~occupied, sampling=ratio, return_indices=True)
    grid_idx = np.indices(occupied.shape)
    diff = (grid_idx - nearest) * ratio[:, None, None, None]
    return spacing[0] * np.sqrt(np.sum(diff * diff, axis=0))


def compute_edf(grid: OccupancyGrid) -> DistanceField:
    return DistanceField(grid.occupied, grid.origin_index, grid.config)


def edf_query(field: DistanceField, p):
    """Distance of the containing cell; the saturation value outside the window."""
    out = field.query(np.asarray(p, dtype=float))
    if np.ndim(p) == 1:
        return float(out[0])
    return out


def grid_to_rle(grid: OccupancyGrid) -> str:
    """Run-length encoded dump of the occupied flags, one line per z layer."""
    occ = grid.occupied
    lines = [f"origin {' '.join(str(int(v)) for v in grid.origin_index)} shape {' '.join(map(str, occ.shape))}"]
    for k in range(occ.shape[2]):
        flat = occ[:, :, k].ravel().astype(np.int8)
        runs = []
        start = 0
        for i in range(1, len(flat) + 1):
            if i == len(flat) or flat[i] != flat[start]:
                runs.append(f"{flat[start]}x{i - start}")
                start = i
        lines.append(f"z{k} " + ",".join(runs))
    return "\n".join(lines) + "\n"
