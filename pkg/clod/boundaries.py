"""
Outer boundaries: PEC walls and the convolutional perfectly matched layer.

Each face of the box is either a PEC wall or a CPML slab backed by a PEC
wall. Inside a slab the derivative along the slab normal is replaced by

    (1/kappa) * d/dw  +  psi,      psi <- b * psi + a * d/dw

with graded profiles over the depth d measured from the inner interface:

    sigma(d) = sigma_max * (d/delta)^m
    kappa(d) = 1 + (kappa_max - 1) * (d/delta)^m
    alpha(d) = alpha_max * (1 - d/delta)
    sigma_max = sigma_ratio * (m + 1) / (150 * pi * dw * sqrt(eps_r))

    b = exp(-(sigma/kappa + alpha) * dt / eps0)
    a = sigma * (b - 1) / (sigma*kappa + kappa^2*alpha)     (a = 0 where sigma = 0)
"""

import math
from dataclasses import dataclass, field

import numpy as np

from clod.grid import EPS0, GridSpec, MediumParams, component_shape

FACES = ("x_min", "x_max", "y_min", "y_max", "z_min", "z_max")


@dataclass(frozen=True)
class CpmlParams:
    thickness: int = 8
    order: float = 4.0
    sigma_ratio: float = 1.0
    kappa_max: float = 5.0
    alpha_max: float = 0.05

    def __post_init__(self):
        if self.thickness < 4:
            raise ValueError("CPML thickness must be >= 4 cells")
        if self.order < 1:
            raise ValueError("CPML order m must be >= 1")
        if self.kappa_max < 1:
            raise ValueError("CPML kappa_max must be >= 1")
        if self.alpha_max < 0 or self.sigma_ratio < 0:
            raise ValueError("CPML alpha_max and sigma_ratio must be >= 0")


@dataclass(frozen=True)
class BoundarySpec:
    """One entry per face in FACES order: None for PEC, CpmlParams for a CPML slab."""

    faces: tuple = (None,) * 6

    def __post_init__(self):
        if len(self.faces) != 6:
            raise ValueError("BoundarySpec needs exactly six faces")

    @classmethod
    def pec(cls) -> "BoundarySpec":
        return cls()

    @classmethod
    def cpml_all(cls, params: CpmlParams | None = None) -> "BoundarySpec":
        return cls((params or CpmlParams(),) * 6)

    @property
    def all_pec(self) -> bool:
        return all(f is None for f in self.faces)

    def face(self, axis: int, high: bool) -> CpmlParams | None:
        return self.faces[2 * axis + int(high)]


@dataclass
class AxisProfile:
    """Graded profiles along one axis at integer nodes (n+1) and half nodes (n)."""

    sigma_e: np.ndarray
    kappa_e: np.ndarray
    alpha_e: np.ndarray
    sigma_h: np.ndarray
    kappa_h: np.ndarray
    alpha_h: np.ndarray

    @property
    def active(self) -> bool:
        return bool((self.sigma_e > 0).any() or (self.kappa_e != 1).any()
                    or (self.sigma_h > 0).any() or (self.kappa_h != 1).any())


def _grade(pos: np.ndarray, n: int, params: tuple, spacing: float, eps_r: float):
    sigma = np.zeros_like(pos)
    kappa = np.ones_like(pos)
    alpha = np.zeros_like(pos)
    for side, p in enumerate(params):
        if p is None:
            continue
        delta = p.thickness * spacing
        if side == 0:
            d = p.thickness * spacing - pos * spacing
        else:
            d = pos * spacing - (n - p.thickness) * spacing
        inside = d > 0
        frac = np.clip(d / delta, 0.0, 1.0)
        sigma_max = p.sigma_ratio * (p.order + 1) / (150.0 * math.pi * spacing * math.sqrt(eps_r))
        sigma = np.where(inside, sigma_max * frac ** p.order, sigma)
        kappa = np.where(inside, 1.0 + (p.kappa_max - 1.0) * frac ** p.order, kappa)
        alpha = np.where(inside, p.alpha_max * (1.0 - frac), alpha)
    return sigma, kappa, alpha


def cpml_profiles(spec: BoundarySpec, grid: GridSpec, medium: MediumParams) -> list[AxisProfile]:
    profiles = []
    for axis in range(3):
        n = grid.cells[axis]
        params = (spec.face(axis, False), spec.face(axis, True))
        used = sum(p.thickness for p in params if p is not None)
        if used > n:
            raise ValueError(f"CPML slabs ({used} cells) exceed the {n} cells along axis {axis}")
        ints = np.arange(n + 1, dtype=float)
        halves = np.arange(n, dtype=float) + 0.5
        spacing = grid.spacing[axis]
        se, ke, ae = _grade(ints, n, params, spacing, medium.eps_r)
        sh, kh, ah = _grade(halves, n, params, spacing, medium.eps_r)
        profiles.append(AxisProfile(se, ke, ae, sh, kh, ah))
    return profiles


def recursion_coefficients(sigma, kappa, alpha, dt: float) -> tuple[np.ndarray, np.ndarray]:
    b = np.exp(-(sigma / kappa + alpha) * dt / EPS0)
    denom = sigma * kappa + kappa ** 2 * alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(sigma > 0, sigma * (b - 1.0) / np.where(denom > 0, denom, 1.0), 0.0)
    return b, a


@dataclass
class _PairMemory:
    axis: int
    index_e: tuple
    index_h: tuple
    shape_e: tuple
    shape_h: tuple
    b_e: np.ndarray
    a_e: np.ndarray
    b_h: np.ndarray
    a_h: np.ndarray
    inv_kappa_e: np.ndarray
    inv_kappa_h: np.ndarray
    psi_e: np.ndarray = field(repr=False, default=None)
    psi_h: np.ndarray = field(repr=False, default=None)


def _along(values: np.ndarray, axis: int) -> np.ndarray:
    shape = [1, 1, 1]
    shape[axis] = len(values)
    return values.reshape(shape)


class CpmlState:
    """Auxiliary psi accumulators for each field pair whose axis carries a CPML slab."""

    def __init__(self, profiles: list[AxisProfile], pairs, grid: GridSpec, dt: float):
        self.dt = dt
        self._mem: dict[int, _PairMemory] = {}
        for idx, pair in enumerate(pairs):
            prof = profiles[pair.axis]
            if not prof.active:
                continue
            sel_e = np.nonzero((prof.sigma_e > 0) | (prof.kappa_e != 1))[0]
            sel_h = np.nonzero((prof.sigma_h > 0) | (prof.kappa_h != 1))[0]
            b_e, a_e = recursion_coefficients(prof.sigma_e, prof.kappa_e, prof.alpha_e, dt)
            b_h, a_h = recursion_coefficients(prof.sigma_h, prof.kappa_h, prof.alpha_h, dt)
            index_e = (slice(None),) * pair.axis + (sel_e,)
            index_h = (slice(None),) * pair.axis + (sel_h,)
            shape_e = list(component_shape(pair.e, grid))
            shape_h = list(component_shape(pair.h, grid))
            shape_e[pair.axis] = len(sel_e)
            shape_h[pair.axis] = len(sel_h)
            self._mem[idx] = _PairMemory(
                axis=pair.axis, index_e=index_e, index_h=index_h,
                shape_e=tuple(shape_e), shape_h=tuple(shape_h),
                b_e=_along(b_e[sel_e], pair.axis), a_e=_along(a_e[sel_e], pair.axis),
                b_h=_along(b_h[sel_h], pair.axis), a_h=_along(a_h[sel_h], pair.axis),
                inv_kappa_e=_along(1.0 / prof.kappa_e, pair.axis),
                inv_kappa_h=_along(1.0 / prof.kappa_h, pair.axis),
                psi_e=np.zeros(shape_e), psi_h=np.zeros(shape_h),
            )

    def covers(self, pair_index: int) -> bool:
        return pair_index in self._mem

    def inv_kappa(self, pair_index: int, phase: str) -> np.ndarray | None:
        mem = self._mem.get(pair_index)
        if mem is None:
            return None
        return mem.inv_kappa_e if phase == "E" else mem.inv_kappa_h

    def advance(self, pair_index: int, phase: str, deriv: np.ndarray) -> None:
        mem = self._mem[pair_index]
        if phase == "E":
            mem.psi_e = mem.b_e * mem.psi_e + mem.a_e * deriv[mem.index_e]
        else:
            mem.psi_h = mem.b_h * mem.psi_h + mem.a_h * deriv[mem.index_h]

    def add_psi(self, pair_index: int, phase: str, target: np.ndarray, scale: float = 1.0) -> None:
        mem = self._mem[pair_index]
        if phase == "E":
            target[mem.index_e] += scale * mem.psi_e
        else:
            target[mem.index_h] += scale * mem.psi_h

    def psi_full(self, pair_index: int, phase: str, shape: tuple) -> np.ndarray:
        out = np.zeros(shape, order="F")
        self.add_psi(pair_index, phase, out)
        return out

    def reset(self) -> None:
        for mem in self._mem.values():
            mem.psi_e[...] = 0.0
            mem.psi_h[...] = 0.0


def cpml_apply(cpml: CpmlState | None, pair_index: int, phase: str, deriv: np.ndarray) -> np.ndarray:
    """Advance psi with ``deriv`` and return the stretched derivative (1/kappa)*deriv + psi."""
    if cpml is None or not cpml.covers(pair_index):
        return deriv
    cpml.advance(pair_index, phase, deriv)
    out = deriv * cpml.inv_kappa(pair_index, phase)
    cpml.add_psi(pair_index, phase, out)
    return out
