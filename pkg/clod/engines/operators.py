"""Field pairs, effective edge/face maps and the discrete curl pieces.

Maxwell's curl equations split into six one-dimensional pairs. Each pair
couples one E component with one H component through a derivative along a
single axis, with a sign:

    eps * dE/dt = sign * dH/dw        mu * dH/dt = sign * dE/dw

The explicit schemes apply all six pairs per step. The split schemes solve
pairs 0-2 implicitly in the first substep and pairs 3-5 in the second.
"""

from dataclasses import dataclass

import numpy as np

from clod.errors import AssemblyError
from clod.geometry.conformal import ConformalCoefficients, StaircaseMap
from clod.grid import (
    COMPONENT_AXIS,
    E_COMPONENTS,
    FACE_EDGES,
    H_COMPONENTS,
    FieldState,
    GridSpec,
    MediumParams,
    component_shape,
)


@dataclass(frozen=True)
class Pair:
    e: str
    h: str
    axis: int
    sign: float
    substep: int


PAIRS = (
    Pair("Ex", "Hz", 1, +1.0, 1),
    Pair("Ey", "Hx", 2, +1.0, 1),
    Pair("Ez", "Hy", 0, +1.0, 1),
    Pair("Ex", "Hy", 2, -1.0, 2),
    Pair("Ey", "Hz", 0, -1.0, 2),
    Pair("Ez", "Hx", 1, -1.0, 2),
)


def pair_index(component: str, substep: int) -> int:
    for idx, pair in enumerate(PAIRS):
        if pair.e == component and pair.substep == substep:
            return idx
    raise ValueError(f"no field pair for {component!r} in substep {substep}")


def e_difference(h: np.ndarray, axis: int) -> np.ndarray:
    """H[j] - H[j-1] at every E node along ``axis``; H outside the box is zero."""
    return np.diff(h, axis=axis, prepend=0.0, append=0.0)


def h_difference(e: np.ndarray, axis: int) -> np.ndarray:
    return np.diff(e, axis=axis)


def shift_prev(a: np.ndarray, axis: int) -> np.ndarray:
    """a[j-1] along ``axis``, zero at j = 0."""
    out = np.zeros_like(a)
    dst = [slice(None)] * 3
    src = [slice(None)] * 3
    dst[axis] = slice(1, None)
    src[axis] = slice(None, -1)
    out[tuple(dst)] = a[tuple(src)]
    return out


def shift_next(a: np.ndarray, axis: int) -> np.ndarray:
    """a[j+1] along ``axis``, zero at the last node."""
    out = np.zeros_like(a)
    dst = [slice(None)] * 3
    src = [slice(None)] * 3
    dst[axis] = slice(None, -1)
    src[axis] = slice(1, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


def wall_mask(name: str, grid: GridSpec) -> np.ndarray:
    """True on E edges lying in a PEC outer wall (tangential to it)."""
    mask = np.zeros(component_shape(name, grid), dtype=bool)
    for axis in range(3):
        if axis == COMPONENT_AXIS[name]:
            continue
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = 0
        hi[axis] = -1
        mask[tuple(lo)] = True
        mask[tuple(hi)] = True
    return mask


def _dead_faces(lengths: dict, grid: GridSpec) -> dict:
    dead = {}
    for face in H_COMPONENTS:
        flags = np.ones(component_shape(face, grid), dtype=bool)
        for edge, sl in FACE_EDGES[face]:
            flags &= lengths[edge][sl] == 0.0
        dead[face] = flags
    return dead


@dataclass
class EdgeFaceMap:
    """Effective edge lengths and face areas seen by the steppers.

    Wall-tangential edges have zero length, faces whose four edges are all
    zero have zero area, and ``inv_areas`` is 1/S with 0 where S = 0.
    """

    lengths: dict
    areas: dict
    inv_areas: dict
    conformal: bool

    @classmethod
    def _build(cls, lengths: dict, areas: dict, grid: GridSpec, conformal: bool) -> "EdgeFaceMap":
        for name in E_COMPONENTS:
            lengths[name][wall_mask(name, grid)] = 0.0
        dead = _dead_faces(lengths, grid)
        for face in H_COMPONENTS:
            areas[face][dead[face]] = 0.0
        inv = {}
        for face in H_COMPONENTS:
            s = areas[face]
            safe = np.where(s > 0, s, 1.0)
            inv[face] = np.asfortranarray(np.where(s > 0, 1.0 / safe, 0.0))
        emap = cls(lengths, areas, inv, conformal)
        emap.validate(grid)
        return emap

    @classmethod
    def from_conformal(cls, coeffs: ConformalCoefficients, grid: GridSpec) -> "EdgeFaceMap":
        lengths = {name: np.array(coeffs.edge_length(name), dtype=float, order="F") for name in E_COMPONENTS}
        areas = {name: np.array(coeffs.face_area(name), dtype=float, order="F") for name in H_COMPONENTS}
        return cls._build(lengths, areas, grid, conformal=True)

    @classmethod
    def from_staircase(cls, stair: StaircaseMap, grid: GridSpec) -> "EdgeFaceMap":
        lengths = {}
        for name in E_COMPONENTS:
            full = grid.spacing[COMPONENT_AXIS[name]]
            lengths[name] = np.asfortranarray(np.where(stair.edge_pec(name), 0.0, full))
        areas = {}
        for face in H_COMPONENTS:
            u, v = (a for a in range(3) if a != COMPONENT_AXIS[face])
            areas[face] = np.full(component_shape(face, grid), grid.spacing[u] * grid.spacing[v], order="F")
        return cls._build(lengths, areas, grid, conformal=False)

    @classmethod
    def free_space(cls, grid: GridSpec, conformal: bool = False) -> "EdgeFaceMap":
        empty = StaircaseMap(*(np.zeros(component_shape(n, grid), dtype=bool) for n in E_COMPONENTS + H_COMPONENTS))
        emap = cls.from_staircase(empty, grid)
        emap.conformal = conformal
        return emap

    def validate(self, grid: GridSpec) -> None:
        for face in H_COMPONENTS:
            zero = self.areas[face] == 0.0
            for edge, sl in FACE_EDGES[face]:
                bad = zero & (self.lengths[edge][sl] > 0.0)
                if bad.any():
                    where = tuple(int(v) for v in np.argwhere(bad)[0])
                    raise AssemblyError(f"{face} face {where} has zero area next to a live {edge} edge")

    def live_e(self, name: str) -> np.ndarray:
        return self.lengths[name] > 0.0

    def live_h(self, name: str) -> np.ndarray:
        return self.areas[name] > 0.0


def edge_face_map(source, grid: GridSpec) -> EdgeFaceMap:
    if isinstance(source, EdgeFaceMap):
        return source
    if isinstance(source, ConformalCoefficients):
        return EdgeFaceMap.from_conformal(source, grid)
    if isinstance(source, StaircaseMap):
        return EdgeFaceMap.from_staircase(source, grid)
    raise TypeError(f"cannot build an edge/face map from {type(source).__name__}")


def energy_weights(emap: EdgeFaceMap, grid: GridSpec, medium: MediumParams) -> dict:
    """Per-node weights of the discrete energy: eps*l*A_dual for E, mu*S*L_dual for H."""
    weights = {}
    for name in E_COMPONENTS:
        u, v = (a for a in range(3) if a != COMPONENT_AXIS[name])
        weights[name] = medium.epsilon * emap.lengths[name] * grid.spacing[u] * grid.spacing[v]
    for name in H_COMPONENTS:
        weights[name] = medium.mu * emap.areas[name] * grid.spacing[COMPONENT_AXIS[name]]
    return weights


def field_energy(state: FieldState, emap: EdgeFaceMap, grid: GridSpec, medium: MediumParams) -> float:
    weights = energy_weights(emap, grid, medium)
    return 0.5 * sum(float(np.sum(w * state[name] ** 2)) for name, w in weights.items())
