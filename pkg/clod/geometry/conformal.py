"""Conformal edge lengths / face areas and the staircase PEC classification."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from clod.geometry.shapes import Scene
from clod.grid import (
    COMPONENT_AXIS,
    E_COMPONENTS,
    FACE_EDGES,
    H_COMPONENTS,
    GridSpec,
    component_shape,
)

logger = logging.getLogger(__name__)

EDGE_SAMPLES = 256
LINE_SAMPLES = 32
EDGE_REL_TOL = 1e-6
AREA_REL_TOL = 1e-4
AREA_ABS_TOL = 1e-12
AREA_START_RES = 8
AREA_MAX_RES = 1024
DEFAULT_EPS_AREA = 1e-6
_POINT_BUDGET = 2_000_000

_L_NAMES = {"Ex": "lx", "Ey": "ly", "Ez": "lz"}
_S_NAMES = {"Hx": "syz", "Hy": "sxz", "Hz": "sxy"}


@dataclass
class ConformalCoefficients:
    lx: np.ndarray
    ly: np.ndarray
    lz: np.ndarray
    syz: np.ndarray
    sxz: np.ndarray
    sxy: np.ndarray
    eps_area: float = DEFAULT_EPS_AREA

    def edge_length(self, name: str) -> np.ndarray:
        return getattr(self, _L_NAMES[name])

    def face_area(self, name: str) -> np.ndarray:
        return getattr(self, _S_NAMES[name])


@dataclass
class StaircaseMap:
    pec_ex: np.ndarray
    pec_ey: np.ndarray
    pec_ez: np.ndarray
    pec_hx: np.ndarray
    pec_hy: np.ndarray
    pec_hz: np.ndarray

    def edge_pec(self, name: str) -> np.ndarray:
        return getattr(self, f"pec_{name.lower()}")

    def face_pec(self, name: str) -> np.ndarray:
        return getattr(self, f"pec_{name.lower()}")


def _lattice(shape: tuple[int, int, int], grid: GridSpec) -> np.ndarray:
    """Lower corners (i*dx, j*dy, k*dz) of every node of a component, x fastest."""
    i, j, k = np.meshgrid(*(np.arange(n) for n in shape), indexing="ij")
    corners = np.stack([i.ravel(order="F"), j.ravel(order="F"), k.ravel(order="F")], axis=1)
    return np.asarray(grid.origin) + corners * np.asarray(grid.spacing)


def _full_area(name: str, grid: GridSpec) -> float:
    u, v = (a for a in range(3) if a != COMPONENT_AXIS[name])
    return grid.spacing[u] * grid.spacing[v]


# ── Edges ────────────────────────────────────────────────

def _edge_lengths(
    scene: Scene, starts: np.ndarray, axis: int, length: float, samples: int = EDGE_SAMPLES
) -> np.ndarray:
    direction = np.zeros(3)
    direction[axis] = length
    t = np.linspace(0.0, 1.0, samples + 1)
    h = 1.0 / samples
    out = np.empty(len(starts))
    chunk = max(1, _POINT_BUDGET // len(t))
    for begin in range(0, len(starts), chunk):
        s = starts[begin:begin + chunk]
        pts = s[:, None, :] + t[None, :, None] * direction
        inside = scene.contains(pts.reshape(-1, 3)).reshape(len(s), len(t))
        both_out = ~inside[:, :-1] & ~inside[:, 1:]
        free = both_out.sum(axis=1) * h
        m, q = np.nonzero(inside[:, :-1] != inside[:, 1:])
        if m.size:
            left_in = inside[m, q]
            lo = t[q].copy()
            hi = lo + h
            while (hi - lo).max() > EDGE_REL_TOL:
                mid = 0.5 * (lo + hi)
                mid_in = scene.contains(s[m] + mid[:, None] * direction)
                same = mid_in == left_in
                lo = np.where(same, mid, lo)
                hi = np.where(same, hi, mid)
            cross = 0.5 * (lo + hi)
            part = np.where(left_in, t[q] + h - cross, cross - t[q])
            np.add.at(free, m, part)
        frac = np.where(inside.any(axis=1), free, 1.0)
        frac = np.where(inside.all(axis=1), 0.0, frac)
        out[begin:begin + chunk] = np.clip(frac, 0.0, 1.0) * length
    return out


def edge_free_length(scene: Scene, start, axis: int, length: float) -> float:
    """Length of the axis-aligned edge ``start -> start + length * e_axis`` outside the scene."""
    starts = np.asarray(start, dtype=float).reshape(1, 3)
    return float(_edge_lengths(scene, starts, axis, length)[0])


# ── Faces ────────────────────────────────────────────────

def fejer_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Fejér's first rule on [0, 1]: nodes and weights summing to one.

    The nodes cluster toward both ends, so chords that open like a square root
    at a face border still converge quickly.
    """
    theta = (2.0 * np.arange(1, n + 1) - 1.0) * np.pi / (2.0 * n)
    j = np.arange(1, n // 2 + 1)
    series = (np.cos(2.0 * np.outer(theta, j)) / (4.0 * j * j - 1.0)).sum(axis=1)
    weights = (1.0 - 2.0 * series) / n
    return 0.5 * (1.0 - np.cos(theta)), weights


def _chord_fraction(scene: Scene, corners, u, v, du, dv, n) -> np.ndarray:
    nodes, weights = fejer_rule(n)
    offsets = np.zeros((n, 3))
    offsets[:, v] = nodes * dv
    frac = np.empty(len(corners))
    chunk = max(1, _POINT_BUDGET // (n * (LINE_SAMPLES + 1)))
    for begin in range(0, len(corners), chunk):
        c = corners[begin:begin + chunk]
        starts = (c[:, None, :] + offsets[None, :, :]).reshape(-1, 3)
        chords = _edge_lengths(scene, starts, u, du, LINE_SAMPLES).reshape(len(c), n) / du
        frac[begin:begin + chunk] = np.where((chords == 1.0).all(axis=1), 1.0, chords @ weights)
    return np.clip(frac, 0.0, 1.0)


def _face_areas(scene: Scene, corners: np.ndarray, normal: int, grid: GridSpec) -> np.ndarray:
    """Free face areas: exact chords along one face axis, Fejér quadrature across the other."""
    u, v = (a for a in range(3) if a != normal)
    du, dv = grid.spacing[u], grid.spacing[v]
    full = du * dv
    tol = max(AREA_REL_TOL * full, AREA_ABS_TOL)
    n = AREA_START_RES
    prev = _chord_fraction(scene, corners, u, v, du, dv, n) * full
    result = prev.copy()
    todo = np.arange(len(corners))
    while todo.size and n < AREA_MAX_RES:
        n *= 2
        new = _chord_fraction(scene, corners[todo], u, v, du, dv, n) * full
        result[todo] = new
        done = np.abs(new - prev[todo]) <= tol
        prev[todo] = new
        todo = todo[~done]
    if todo.size:
        logger.warning("%d faces reached the %d-chord cap before converging", todo.size, AREA_MAX_RES)
    return result


def face_free_area(scene: Scene, corner, normal: int, grid: GridSpec) -> float:
    """Area outside the scene of the Yee face with lower corner ``corner`` normal to ``normal``."""
    corners = np.asarray(corner, dtype=float).reshape(1, 3)
    return float(_face_areas(scene, corners, normal, grid)[0])


# ── Maps ─────────────────────────────────────────────────

def _edge_map(scene: Scene, name: str, grid: GridSpec) -> np.ndarray:
    shape = component_shape(name, grid)
    axis = COMPONENT_AXIS[name]
    length = grid.spacing[axis]
    out = np.full(int(np.prod(shape)), length)
    if not scene.empty:
        starts = _lattice(shape, grid)
        ends = starts.copy()
        ends[:, axis] += length
        cand = np.nonzero(scene.touches_boxes(starts, ends))[0]
        if cand.size:
            out[cand] = _edge_lengths(scene, starts[cand], axis, length)
    return out.reshape(shape, order="F")


def _face_map(scene: Scene, name: str, grid: GridSpec) -> np.ndarray:
    shape = component_shape(name, grid)
    normal = COMPONENT_AXIS[name]
    out = np.full(int(np.prod(shape)), _full_area(name, grid))
    if not scene.empty:
        corners = _lattice(shape, grid)
        far = corners + np.asarray(grid.spacing)
        far[:, normal] = corners[:, normal]
        cand = np.nonzero(scene.touches_boxes(corners, far))[0]
        if cand.size:
            out[cand] = _face_areas(scene, corners[cand], normal, grid)
    return out.reshape(shape, order="F")


def enforce_consistency(coeffs: ConformalCoefficients, grid: GridSpec) -> None:
    """Small-cell clamp, then zero the area of faces whose four edges are all zero."""
    for face in H_COMPONENTS:
        s = coeffs.face_area(face)
        small = (s < coeffs.eps_area * _full_area(face, grid)) | (s == 0.0)
        s[small] = 0.0
        for edge, sl in FACE_EDGES[face]:
            coeffs.edge_length(edge)[sl][small] = 0.0
    for face in H_COMPONENTS:
        dead = np.ones(component_shape(face, grid), dtype=bool)
        for edge, sl in FACE_EDGES[face]:
            dead &= coeffs.edge_length(edge)[sl] == 0.0
        coeffs.face_area(face)[dead] = 0.0


def build_conformal_map(
    scene: Scene, grid: GridSpec, eps_area: float = DEFAULT_EPS_AREA
) -> ConformalCoefficients:
    if not 0.0 <= eps_area < 0.5:
        raise ValueError("eps_area must lie in [0, 0.5)")
    edges = {name: _edge_map(scene, name, grid) for name in E_COMPONENTS}
    faces = {name: _face_map(scene, name, grid) for name in H_COMPONENTS}
    coeffs = ConformalCoefficients(
        lx=edges["Ex"], ly=edges["Ey"], lz=edges["Ez"],
        syz=faces["Hx"], sxz=faces["Hy"], sxy=faces["Hz"],
        eps_area=eps_area,
    )
    enforce_consistency(coeffs, grid)
    stats = coefficient_summary(coeffs, grid)
    logger.info("Conformal map built: %d partial edges, %d partial faces",
                stats["partial_edges"], stats["partial_faces"])
    return coeffs


def build_staircase_map(scene: Scene, grid: GridSpec) -> StaircaseMap:
    pec = {}
    for name in E_COMPONENTS:
        shape = component_shape(name, grid)
        mids = _lattice(shape, grid)
        mids[:, COMPONENT_AXIS[name]] += 0.5 * grid.spacing[COMPONENT_AXIS[name]]
        flags = scene.contains(mids) if not scene.empty else np.zeros(len(mids), dtype=bool)
        pec[name] = flags.reshape(shape, order="F")
    for face in H_COMPONENTS:
        frozen = np.ones(component_shape(face, grid), dtype=bool)
        for edge, sl in FACE_EDGES[face]:
            frozen &= pec[edge][sl]
        pec[face] = frozen
    return StaircaseMap(*(pec[name] for name in E_COMPONENTS + H_COMPONENTS))


def coefficient_summary(coeffs: ConformalCoefficients, grid: GridSpec) -> dict:
    partial_edges = 0
    l_max = 0.0
    for name in E_COMPONENTS:
        l = coeffs.edge_length(name)
        full = grid.spacing[COMPONENT_AXIS[name]]
        partial_edges += int(np.count_nonzero((l > 0) & (l < full)))
        l_max = max(l_max, float(l.max(initial=0.0)))
    partial_faces = 0
    s_min = np.inf
    frac_min = np.inf
    for name in H_COMPONENTS:
        s = coeffs.face_area(name)
        full = _full_area(name, grid)
        partial = (s > 0) & (s < full)
        partial_faces += int(np.count_nonzero(partial))
        live = s[s > 0]
        if live.size:
            s_min = min(s_min, float(live.min()))
            frac_min = min(frac_min, float(live.min() / full))
    return {
        "partial_edges": partial_edges,
        "partial_faces": partial_faces,
        "min_nonzero_s_fraction": frac_min if np.isfinite(frac_min) else 0.0,
        "l_max_over_s_min": l_max / s_min if np.isfinite(s_min) else 0.0,
    }


def partial_face_plane(coeffs: ConformalCoefficients, grid: GridSpec, axis: int, coord: float) -> np.ndarray:
    """Mask of partially filled faces lying in the grid plane nearest ``coord``."""
    face = H_COMPONENTS[axis]
    s = coeffs.face_area(face)
    idx = int(round((coord - grid.origin[axis]) / grid.spacing[axis]))
    idx = min(max(idx, 0), s.shape[axis] - 1)
    plane = np.take(s, idx, axis=axis)
    return (plane > 0) & (plane < _full_area(face, grid))


# ── Export ───────────────────────────────────────────────

_ARRAY_ORDER = ("lx", "ly", "lz", "syz", "sxz", "sxy")


def export_coefficients(coeffs: ConformalCoefficients, grid: GridSpec, path: str | Path) -> Path:
    """Text header, then the six arrays as little-endian float64, x fastest."""
    path = Path(path)
    lines = [
        "# clod conformal coefficients v1",
        f"grid {grid.nx} {grid.ny} {grid.nz}",
        f"spacing {grid.dx!r} {grid.dy!r} {grid.dz!r}",
        "origin " + " ".join(repr(float(v)) for v in grid.origin),
        f"eps_area {coeffs.eps_area!r}",
        "layout little-endian float64, x fastest, arrays in order " + " ".join(_ARRAY_ORDER),
    ]
    for key in _ARRAY_ORDER:
        lines.append(f"shape {key} " + " ".join(str(n) for n in getattr(coeffs, key).shape))
    lines.append("end_header")
    with path.open("wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        for key in _ARRAY_ORDER:
            fh.write(np.asarray(getattr(coeffs, key), dtype="<f8").ravel(order="F").tobytes())
    return path


def load_coefficients(path: str | Path) -> tuple[ConformalCoefficients, GridSpec]:
    raw = Path(path).read_bytes()
    marker = b"end_header\n"
    cut = raw.index(marker) + len(marker)
    header = raw[:cut].decode("ascii").splitlines()
    fields: dict[str, list[str]] = {}
    shapes: dict[str, tuple[int, ...]] = {}
    for line in header:
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "shape":
            shapes[parts[1]] = tuple(int(p) for p in parts[2:])
        else:
            fields[parts[0]] = parts[1:]
    nx, ny, nz = (int(v) for v in fields["grid"])
    dx, dy, dz = (float(v) for v in fields["spacing"])
    grid = GridSpec(nx, ny, nz, dx, dy, dz, origin=tuple(float(v) for v in fields["origin"]))
    arrays = {}
    offset = cut
    for key in _ARRAY_ORDER:
        count = int(np.prod(shapes[key]))
        flat = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
        arrays[key] = flat.reshape(shapes[key], order="F").astype(float)
        offset += 8 * count
    return ConformalCoefficients(eps_area=float(fields["eps_area"][0]), **arrays), grid
