"""Tridiagonal coefficients of the implicit E systems of the split schemes.

For the pair (E, H) swept along w with edge lengths l and inverse face
areas g = 1/S, substituting the H update into the E update gives

    C1 E'[j-1] + C2 E'[j] + C3 E'[j+1]
        = sign*dt/(eps*dw) (H[j] - H[j-1]) - C1 E[j-1] + C4 E[j] - C3 E[j+1]

    C1 = -k l[j-1] g[j-1]      C3 = -k l[j+1] g[j]
    C2 = 1 + k l[j] (g[j-1] + g[j])      C4 = 2 - C2
    k  = dt^2 / (4 mu eps dw kappa_e[j]),   g[f] = 1 / (kappa_h[f] S[f])

In the second substep the same four arrays play the role of C5..C8. Rows of
dead edges (l = 0) are Dirichlet rows: C1 = C3 = 0, C2 = C4 = 1.
"""

from dataclasses import dataclass

import numpy as np

from clod.boundaries import AxisProfile
from clod.engines.operators import PAIRS, EdgeFaceMap, edge_face_map, pair_index, shift_next, shift_prev
from clod.grid import GridSpec, MediumParams

DOMINANCE_RTOL = 1e-12


@dataclass
class SubstepCoefficients:
    component: str
    substep: int
    axis: int
    sign: float
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray
    dirichlet: np.ndarray
    kappa_e: np.ndarray | float = 1.0

    @property
    def pair(self) -> int:
        return pair_index(self.component, self.substep)

    def lines(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(lower, diag, upper) as (L, N) arrays with the sweep axis last."""
        return tuple(to_lines(c, self.axis) for c in (self.c1, self.c2, self.c3))


def to_lines(a: np.ndarray, axis: int) -> np.ndarray:
    moved = np.moveaxis(a, axis, -1)
    return np.ascontiguousarray(moved).reshape(-1, moved.shape[-1])


def from_lines(lines: np.ndarray, axis: int, shape: tuple) -> np.ndarray:
    moved_shape = tuple(n for a, n in enumerate(shape) if a != axis) + (shape[axis],)
    return np.asfortranarray(np.moveaxis(lines.reshape(moved_shape), -1, axis))


def _along(values, axis: int):
    if values is None:
        return 1.0
    shape = [1, 1, 1]
    shape[axis] = len(values)
    return np.asarray(values, dtype=float).reshape(shape)


def _padded_faces(g: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """g[j-1] and g[j] aligned to the E nodes, zero outside the box."""
    pad = [(0, 0)] * 3
    pad[axis] = (1, 1)
    gp = np.pad(g, pad)
    lo = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return gp[tuple(lo)], gp[tuple(hi)]


def assemble_substep_coeffs(
    coeffs,
    grid: GridSpec,
    medium: MediumParams,
    dt: float,
    substep: int,
    component: str,
    profiles: list[AxisProfile] | None = None,
) -> SubstepCoefficients:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if substep not in (1, 2):
        raise ValueError("substep must be 1 or 2")
    emap: EdgeFaceMap = edge_face_map(coeffs, grid)
    pair = PAIRS[pair_index(component, substep)]
    axis = pair.axis
    kappa_e = kappa_h = None
    if profiles is not None:
        kappa_e = profiles[axis].kappa_e
        kappa_h = profiles[axis].kappa_h
    ke = _along(kappa_e, axis)

    l = emap.lengths[pair.e]
    g = emap.inv_areas[pair.h] / _along(kappa_h, axis)
    g_lo, g_hi = _padded_faces(g, axis)
    k = dt ** 2 / (4.0 * medium.mu * medium.epsilon * grid.spacing[axis]) / ke

    c1 = -k * shift_prev(l, axis) * g_lo
    c3 = -k * shift_next(l, axis) * g_hi
    c2 = 1.0 + k * l * (g_lo + g_hi)
    dirichlet = l == 0.0
    c1 = np.where(dirichlet, 0.0, c1)
    c3 = np.where(dirichlet, 0.0, c3)
    c2 = np.where(dirichlet, 1.0, c2)
    c4 = 2.0 - c2

    sc = SubstepCoefficients(
        component, substep, axis, pair.sign,
        np.asfortranarray(c1), np.asfortranarray(c2), np.asfortranarray(c3), np.asfortranarray(c4),
        dirichlet, ke,
    )
    _check_column_dominance(sc)
    return sc


def column_margin(sc: SubstepCoefficients) -> np.ndarray:
    """Diagonal excess minus off-diagonal column sum, rows scaled by kappa_e."""
    scale = sc.kappa_e if isinstance(sc.kappa_e, np.ndarray) else 1.0
    d = (sc.c2 - 1.0) * scale
    off = shift_prev(np.abs(sc.c3) * scale, sc.axis) + shift_next(np.abs(sc.c1) * scale, sc.axis)
    return d - off


def _check_column_dominance(sc: SubstepCoefficients) -> None:
    scale = sc.kappa_e if isinstance(sc.kappa_e, np.ndarray) else 1.0
    margin = column_margin(sc)
    assert np.all(margin >= -DOMINANCE_RTOL * (np.abs(sc.c2) * scale)), (
        f"{sc.component} substep {sc.substep} system is not column diagonally dominant"
    )
