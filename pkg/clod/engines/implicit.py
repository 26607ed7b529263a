"""Split-step implicit steppers: staircase LOD and conformal CLOD.

Each substep solves its three field pairs with Crank-Nicolson over dt: the
E unknowns come from one batch of tridiagonal lines per pair, then H is
updated explicitly from the average of old and new E. Substep 1 carries
(Ex, Hz | y), (Ey, Hx | z), (Ez, Hy | x); substep 2 carries (Ex, Hy | z),
(Ey, Hz | x), (Ez, Hx | y) with the opposite sign.

Inside CPML slabs the derivative along the sweep axis is stretched by
1/kappa (folded into the tridiagonal coefficients) and the psi memory
terms enter lagged from the previous update of the same pair.
"""

import logging

import numpy as np

from clod.boundaries import BoundarySpec, CpmlState, cpml_profiles
from clod.engines.coefficients import SubstepCoefficients, assemble_substep_coeffs, from_lines, to_lines
from clod.engines.operators import PAIRS, EdgeFaceMap, e_difference, h_difference, shift_next, shift_prev
from clod.grid import FieldState, GridSpec, MediumParams
from clod.sources import source_deltas
from clod.tridiag import thomas_solve_lines

logger = logging.getLogger(__name__)


class LodStepper:
    def __init__(
        self,
        emap: EdgeFaceMap,
        grid: GridSpec,
        medium: MediumParams,
        dt: float,
        boundaries: BoundarySpec | None = None,
        sources=(),
    ):
        self.emap = emap
        self.grid = grid
        self.medium = medium
        self.dt = dt
        self.sources = tuple(sources)
        profiles = None
        self.cpml = None
        if boundaries is not None and not boundaries.all_pec:
            profiles = cpml_profiles(boundaries, grid, medium)
            self.cpml = CpmlState(profiles, PAIRS, grid, dt)
        self.systems: dict[int, SubstepCoefficients] = {}
        self._lines: dict[int, tuple] = {}
        for idx, pair in enumerate(PAIRS):
            sc = assemble_substep_coeffs(emap, grid, medium, dt, pair.substep, pair.e, profiles)
            self.systems[idx] = sc
            self._lines[idx] = sc.lines()
        self._live_e = {p.e: emap.live_e(p.e) for p in PAIRS}
        self._live_h = {p.h: emap.live_h(p.h) for p in PAIRS}
        logger.debug("Assembled %d tridiagonal systems", len(self.systems))

    def substep(self, state: FieldState, which: int, t: float) -> FieldState:
        dt = self.dt
        deltas = ()
        if self.sources:
            at = t + (0.25 if which == 1 else 0.75) * dt
            deltas = source_deltas(self.sources, at, dt, self.medium, 0.5)
        for idx, pair in enumerate(PAIRS):
            if pair.substep == which:
                self._solve_pair(state, idx, deltas)
        return state

    def step(self, state: FieldState, t: float) -> FieldState:
        self.substep(state, 1, t)
        return self.substep(state, 2, t)

    def reset(self) -> None:
        if self.cpml is not None:
            self.cpml.reset()

    def _solve_pair(self, state: FieldState, idx: int, deltas) -> None:
        pair = PAIRS[idx]
        sc = self.systems[idx]
        axis = pair.axis
        s = pair.sign
        dt = self.dt
        eps = self.medium.epsilon
        mu = self.medium.mu
        dw = self.grid.spacing[axis]
        cpml = self.cpml if self.cpml is not None and self.cpml.covers(idx) else None

        e_old = state[pair.e]
        h_old = state[pair.h]
        l = self.emap.lengths[pair.e]
        inv_s = self.emap.inv_areas[pair.h]
        ik_e = cpml.inv_kappa(idx, "E") if cpml else 1.0
        ik_h = cpml.inv_kappa(idx, "H") if cpml else 1.0

        rhs = (s * dt / (eps * dw)) * ik_e * e_difference(h_old, axis)
        rhs += sc.c4 * e_old - sc.c1 * shift_prev(e_old, axis) - sc.c3 * shift_next(e_old, axis)
        psi_h = None
        if cpml:
            psi_h = cpml.psi_full(idx, "H", h_old.shape)
            cpml.add_psi(idx, "E", rhs, s * dt / eps)
            rhs += (dt ** 2 / (2.0 * mu * eps * dw)) * ik_e * e_difference(psi_h, axis)
        for name, where, value in deltas:
            if name == pair.e:
                rhs[where] += value
        rhs[sc.dirichlet] = e_old[sc.dirichlet]

        lower, diag, upper = self._lines[idx]
        e_new = from_lines(thomas_solve_lines(lower, diag, upper, to_lines(rhs, axis)), axis, e_old.shape)
        e_new *= self._live_e[pair.e]

        w = e_old + e_new
        h_new = h_old + (s * dt / (2.0 * mu)) * ik_h * inv_s * h_difference(l * w, axis)
        if cpml:
            h_new += (s * dt / mu) * psi_h
        h_new *= self._live_h[pair.h]

        if cpml:
            cpml.advance(idx, "E", e_difference(0.5 * (h_old + h_new), axis) / dw)
            cpml.advance(idx, "H", inv_s * h_difference(0.5 * l * w, axis))

        state[pair.e] = e_new
        state[pair.h] = np.asfortranarray(h_new)


def lod_substep1(state: FieldState, stepper: LodStepper, t: float) -> FieldState:
    """First substep: E at n+1/2 from the (x|y, y|z, z|x) sweeps, then H."""
    return stepper.substep(state, 1, t)


def lod_substep2(state: FieldState, stepper: LodStepper, t: float) -> FieldState:
    return stepper.substep(state, 2, t)
