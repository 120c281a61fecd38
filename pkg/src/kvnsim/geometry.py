"""Bounded domains and cell-centered finite-volume grids.

Three shapes are supported: 1D intervals, axis-aligned boxes in 2D/3D, and
2D disks.  Disk grids mask a uniform box grid to the cells whose centers
lie strictly inside the circle; their boundary faces sit on the staircase
interface but carry the exact circle normal at the face centroid, so that
flux-sign classification of the boundary matches the continuum geometry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Domain", "Grid", "BoundaryFace", "build_grid", "contains"]


@dataclass(frozen=True)
class Domain:
    """A bounded open domain: interval, rectangle (box), or disk."""

    kind: str
    bounds: tuple[tuple[float, float], ...] = ()
    center: tuple[float, ...] = ()
    radius: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == "interval":
            if len(self.bounds) != 1:
                raise ValueError("interval needs exactly one bounds pair")
        elif self.kind == "rectangle":
            if len(self.bounds) not in (2, 3):
                raise ValueError("rectangle supports dimension 2 or 3")
        elif self.kind == "disk":
            if len(self.center) != 2:
                raise ValueError("disk center must be a 2D point")
            if not self.radius > 0.0:
                raise ValueError(f"disk radius must be positive, got {self.radius}")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        for lo, hi in self.bounds:
            if not hi > lo:
                raise ValueError(f"extent must be positive, got [{lo}, {hi}]")

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Domain":
        return cls(kind="interval", bounds=((float(lo), float(hi)),))

    @classmethod
    def rectangle(cls, *bounds: tuple[float, float]) -> "Domain":
        return cls(kind="rectangle", bounds=tuple((float(a), float(b)) for a, b in bounds))

    @classmethod
    def disk(cls, center: tuple[float, float] = (0.0, 0.0), radius: float = 1.0) -> "Domain":
        return cls(kind="disk", center=(float(center[0]), float(center[1])), radius=float(radius))

    @property
    def dim(self) -> int:
        return 2 if self.kind == "disk" else len(self.bounds)

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-axis (lower, upper) arrays of the tight bounding box."""
        if self.kind == "disk":
            c = np.asarray(self.center)
            r = self.radius
            return c - r, c + r
        b = np.asarray(self.bounds)
        return b[:, 0].copy(), b[:, 1].copy()

    @property
    def diameter(self) -> float:
        lo, hi = self.bounding_box
        if self.kind == "disk":
            return 2.0 * self.radius
        return float(np.linalg.norm(hi - lo))

    def contains(self, x) -> bool:
        """True iff x lies in the open domain (boundary points excluded)."""
        return bool(self.contains_points(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def contains_points(self, x: np.ndarray) -> np.ndarray:
        """Vectorized open-domain membership for an (n, d) array of points."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ValueError(f"expected points of shape (n, {self.dim})")
        if self.kind == "disk":
            c = np.asarray(self.center)
            return np.einsum("ij,ij->i", x - c, x - c) < self.radius**2
        lo, hi = self.bounding_box
        return np.all((x > lo) & (x < hi), axis=1)

    def exterior_distance(self, x: np.ndarray) -> np.ndarray:
        """Euclidean distance from each point to the closed domain (0 inside)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "disk":
            c = np.asarray(self.center)
            return np.maximum(np.linalg.norm(x - c, axis=1) - self.radius, 0.0)
        lo, hi = self.bounding_box
        excess = np.maximum(np.maximum(lo - x, x - hi), 0.0)
        return np.linalg.norm(excess, axis=1)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Nearest point of the closed domain, rowwise for (n, d) input."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "disk":
            c = np.asarray(self.center)
            rel = x - c
            dist = np.linalg.norm(rel, axis=1)
            out = dist > self.radius
            proj = x.copy()
            if np.any(out):
                proj[out] = c + rel[out] * (self.radius / dist[out])[:, None]
            return proj
        lo, hi = self.bounding_box
        return np.clip(x, lo, hi)


def contains(domain: Domain, x) -> bool:
    """Open-domain membership; thin functional alias for Domain.contains."""
    return domain.contains(x)


@dataclass(frozen=True)
class BoundaryFace:
    """One boundary face of a grid cell, with outward unit normal."""

    cell_index: int
    centroid: np.ndarray
    normal: np.ndarray
    area: float


class Grid:
    """Cell-centered grid over a Domain.

    Attributes
    ----------
    centers : (N, d) cell centers
    volumes : (N,) cell volumes (all equal to prod(h); cut cells are not used)
    h : (d,) per-axis spacing
    neighbors : (N, d, 2) compact cell index of the (minus, plus) neighbor
        along each axis, or -1 where none exists
    interior_mask : boolean array over the full tensor grid marking kept
        cells (disk only; None for interval/rectangle)
    """

    def __init__(self, domain, resolution, h, centers, volumes, neighbors,
                 interior_mask, face_cell, face_centroid, face_normal, face_area,
                 iface_left, iface_right, iface_axis, iface_centroid, iface_area):
        self.domain = domain
        self.resolution = resolution
        self.h = h
        self.centers = centers
        self.volumes = volumes
        self.neighbors = neighbors
        self.interior_mask = interior_mask
        self.face_cell = face_cell
        self.face_centroid = face_centroid
        self.face_normal = face_normal
        self.face_area = face_area
        self.iface_left = iface_left
        self.iface_right = iface_right
        self.iface_axis = iface_axis
        self.iface_centroid = iface_centroid
        self.iface_area = iface_area

    @property
    def n_cells(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def n_boundary_faces(self) -> int:
        return self.face_cell.shape[0]

    @property
    def boundary_faces(self) -> list[BoundaryFace]:
        return [
            BoundaryFace(int(self.face_cell[k]), self.face_centroid[k],
                         self.face_normal[k], float(self.face_area[k]))
            for k in range(self.n_boundary_faces)
        ]

    @property
    def total_volume(self) -> float:
        return float(self.volumes.sum())

    @property
    def total_boundary_area(self) -> float:
        return float(self.face_area.sum())


def build_grid(domain: Domain, resolution) -> Grid:
    """Build a uniform cell-centered grid with resolution cells per axis.

    resolution may be a single integer (applied to every axis) or one
    integer per axis; every entry must be at least 3.  Disk domains grid
    the bounding box and keep the cells whose centers fall inside the
    circle.
    """
    d = domain.dim
    if np.isscalar(resolution):
        res = (int(resolution),) * d
    else:
        res = tuple(int(r) for r in resolution)
    if len(res) != d:
        raise ValueError(f"resolution needs {d} entries, got {len(res)}")
    if any(r < 3 for r in res):
        raise ValueError(f"resolution must be >= 3 per axis, got {res}")

    lo, hi = domain.bounding_box
    h = (hi - lo) / np.asarray(res, dtype=float)
    axes = [lo[k] + (np.arange(res[k]) + 0.5) * h[k] for k in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    full_centers = np.stack([m.ravel() for m in mesh], axis=1)
    n_full = full_centers.shape[0]

    if domain.kind == "disk":
        keep = domain.contains_points(full_centers)
        interior_mask = keep.reshape(res)
    else:
        keep = np.ones(n_full, dtype=bool)
        interior_mask = None
    kept = np.flatnonzero(keep)
    if kept.size == 0:
        raise ValueError("grid resolution too coarse: no cell centers inside the domain")
    full_to_compact = np.full(n_full, -1, dtype=np.int64)
    full_to_compact[kept] = np.arange(kept.size)

    centers = full_centers[kept]
    n = kept.size
    cell_volume = float(np.prod(h))
    volumes = np.full(n, cell_volume)

    # Neighbor table via index arithmetic on the full tensor grid.
    multi = np.stack(np.unravel_index(kept, res), axis=1)  # (n, d)
    neighbors = np.full((n, d, 2), -1, dtype=np.int64)
    for k in range(d):
        for side, delta in ((0, -1), (1, +1)):
            shifted = multi.copy()
            shifted[:, k] += delta
            valid = (shifted[:, k] >= 0) & (shifted[:, k] < res[k])
            flat = np.ravel_multi_index(
                tuple(shifted[valid].T), res) if np.any(valid) else np.array([], dtype=np.int64)
            nb = np.full(n, -1, dtype=np.int64)
            nb[valid] = full_to_compact[flat]
            neighbors[:, k, side] = nb

    # Interior faces: one record per adjacent pair, oriented left -> right
    # along the +axis direction.
    il, ir, iaxis, icent, iarea = [], [], [], [], []
    for k in range(d):
        left = np.flatnonzero(neighbors[:, k, 1] >= 0)
        right = neighbors[left, k, 1]
        cent = centers[left].copy()
        cent[:, k] += 0.5 * h[k]
        il.append(left)
        ir.append(right)
        iaxis.append(np.full(left.size, k, dtype=np.int64))
        icent.append(cent)
        iarea.append(np.full(left.size, cell_volume / h[k]))
    iface_left = np.concatenate(il)
    iface_right = np.concatenate(ir)
    iface_axis = np.concatenate(iaxis)
    iface_centroid = np.concatenate(icent, axis=0)
    iface_area = np.concatenate(iarea)

    # Boundary faces: every missing neighbor slot.
    fc, fcent, fnorm, farea = [], [], [], []
    for k in range(d):
        for side, sgn in ((0, -1.0), (1, +1.0)):
            cells = np.flatnonzero(neighbors[:, k, side] < 0)
            if cells.size == 0:
                continue
            cent = centers[cells].copy()
            cent[:, k] += sgn * 0.5 * h[k]
            if domain.kind == "disk":
                rel = cent - np.asarray(domain.center)
                norm = rel / np.linalg.norm(rel, axis=1)[:, None]
            else:
                norm = np.zeros((cells.size, d))
                norm[:, k] = sgn
            fc.append(cells)
            fcent.append(cent)
            fnorm.append(norm)
            farea.append(np.full(cells.size, cell_volume / h[k]))
    face_cell = np.concatenate(fc)
    face_centroid = np.concatenate(fcent, axis=0)
    face_normal = np.concatenate(fnorm, axis=0)
    face_area = np.concatenate(farea)

    return Grid(domain, res, h, centers, volumes, neighbors, interior_mask,
                face_cell, face_centroid, face_normal, face_area,
                iface_left, iface_right, iface_axis, iface_centroid, iface_area)
