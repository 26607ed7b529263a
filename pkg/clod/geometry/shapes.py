"""PEC shapes, scenes and STL ingestion.

Points exactly on a surface count as inside. Triangle meshes are tested by
ray parity along +x. The ray is shifted off the query point by
``(0, sqrt(2), sqrt(3)) * 1e-10 * extent`` so that it never runs through a
mesh edge or vertex; a hit within ``1e-8 * extent`` of the query point marks
the point as on the surface (inside). Faces parallel to the ray are ignored,
so points lying on such faces are resolved by the shifted ray.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import trimesh

from clod.errors import GeometryError

logger = logging.getLogger(__name__)

RAY_SHIFT = 1e-10
SURFACE_TOL = 1e-8
WELD_DIGITS = 9  # vertices welded at 1e-9 m
_PAIR_BUDGET = 4_000_000


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    return pts.reshape(-1, 3)


@dataclass(frozen=True)
class Box:
    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]

    def __post_init__(self):
        if any(lo > hi for lo, hi in zip(self.min_corner, self.max_corner)):
            raise GeometryError("box min corner exceeds max corner")

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.min_corner, float), np.asarray(self.max_corner, float)

    def contains(self, points) -> np.ndarray:
        pts = _as_points(points)
        lo, hi = self.bounds
        return np.all((pts >= lo) & (pts <= hi), axis=1)


@dataclass(frozen=True)
class Sphere:
    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise GeometryError("sphere radius must be > 0")

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center, float)
        return c - self.radius, c + self.radius

    def contains(self, points) -> np.ndarray:
        pts = _as_points(points)
        d = pts - np.asarray(self.center, float)
        return np.einsum("ij,ij->i", d, d) <= self.radius ** 2


@dataclass(frozen=True)
class CylinderZ:
    center: tuple[float, float]
    radius: float
    zmin: float
    zmax: float

    def __post_init__(self):
        if self.radius <= 0 or self.zmax < self.zmin:
            raise GeometryError("cylinder needs radius > 0 and zmax >= zmin")

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        cx, cy = self.center
        r = self.radius
        return np.array([cx - r, cy - r, self.zmin]), np.array([cx + r, cy + r, self.zmax])

    def contains(self, points) -> np.ndarray:
        pts = _as_points(points)
        cx, cy = self.center
        rho2 = (pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2
        return (rho2 <= self.radius ** 2) & (pts[:, 2] >= self.zmin) & (pts[:, 2] <= self.zmax)


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray
    faces: np.ndarray
    name: str = ""
    _tri: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(f) == 0:
            raise GeometryError("triangle mesh has no faces")
        if f.min() < 0 or f.max() >= len(v):
            raise GeometryError("triangle mesh face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "_tri", v[f])

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def extent(self) -> float:
        lo, hi = self.bounds
        return float(max(np.max(hi - lo), 1e-12))

    def is_watertight(self) -> bool:
        return bool(trimesh.Trimesh(self.vertices, self.faces, process=False).is_watertight)

    def contains(self, points) -> np.ndarray:
        pts = _as_points(points)
        out = np.zeros(len(pts), dtype=bool)
        lo, hi = self.bounds
        tol = SURFACE_TOL * self.extent
        near = np.all((pts >= lo - tol) & (pts <= hi + tol), axis=1)
        idx = np.nonzero(near)[0]
        if idx.size == 0:
            return out
        chunk = max(1, _PAIR_BUDGET // len(self._tri))
        for start in range(0, idx.size, chunk):
            sel = idx[start:start + chunk]
            out[sel] = self._ray_parity(pts[sel])
        return out

    def _ray_parity(self, pts: np.ndarray) -> np.ndarray:
        ext = self.extent
        shift = RAY_SHIFT * ext * np.array([np.sqrt(2.0), np.sqrt(3.0)])
        q = pts[:, None, 1:] + shift  # (N, 1, 2) in the yz plane
        a, b, c = self._tri[:, 0], self._tri[:, 1], self._tri[:, 2]

        def cross2(u, w):
            return u[..., 0] * w[..., 1] - u[..., 1] * w[..., 0]

        area = cross2(b[:, 1:] - a[:, 1:], c[:, 1:] - a[:, 1:])
        d0 = cross2(b[:, 1:] - a[:, 1:], q - a[:, 1:])
        d1 = cross2(c[:, 1:] - b[:, 1:], q - b[:, 1:])
        d2 = cross2(a[:, 1:] - c[:, 1:], q - c[:, 1:])
        hit = ((d0 > 0) & (d1 > 0) & (d2 > 0)) | ((d0 < 0) & (d1 < 0) & (d2 < 0))
        hit &= area != 0.0
        safe = np.where(area != 0.0, area, 1.0)
        x_hit = (d1 * a[:, 0] + d2 * b[:, 0] + d0 * c[:, 0]) / safe
        px = pts[:, :1]
        on_surface = hit & (np.abs(x_hit - px) <= SURFACE_TOL * ext)
        crossings = np.count_nonzero(hit & (x_hit > px), axis=1)
        return (crossings % 2 == 1) | on_surface.any(axis=1)


Shape = Box | Sphere | CylinderZ | TriangleMesh


@dataclass(frozen=True)
class Scene:
    shapes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        for shape in self.shapes:
            if isinstance(shape, TriangleMesh) and not shape.is_watertight():
                label = shape.name or "triangle mesh"
                raise GeometryError(f"{label} is not watertight")

    @property
    def empty(self) -> bool:
        return not self.shapes

    def contains(self, points) -> np.ndarray:
        pts = _as_points(points)
        inside = np.zeros(len(pts), dtype=bool)
        for shape in self.shapes:
            todo = ~inside
            if not todo.any():
                break
            inside[todo] = shape.contains(pts[todo])
        return inside

    def touches_boxes(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Mask of axis-aligned boxes (rows of lo/hi) overlapping any shape's bounds."""
        hit = np.zeros(len(lo), dtype=bool)
        for shape in self.shapes:
            slo, shi = shape.bounds
            hit |= np.all((hi >= slo) & (lo <= shi), axis=1)
        return hit


def point_inside(scene: Scene, p) -> bool:
    return bool(scene.contains(np.asarray(p, dtype=float))[0])


def load_stl(path: str | Path, scale: float = 1.0, offset=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Read a binary or ASCII STL, weld vertices and return a TriangleMesh."""
    path = Path(path)
    try:
        mesh = trimesh.load(path, file_type="stl", force="mesh", process=False)
    except (ValueError, KeyError, IndexError) as exc:
        raise GeometryError(f"cannot read STL {path}: {exc}") from exc
    mesh.merge_vertices(digits_vertex=WELD_DIGITS)
    vertices = np.asarray(mesh.vertices, dtype=float) * scale + np.asarray(offset, dtype=float)
    faces = np.asarray(mesh.faces, dtype=np.int64)
    logger.info("Loaded %s: %d vertices, %d triangles", path.name, len(vertices), len(faces))
    return TriangleMesh(vertices, faces, name=path.name)
