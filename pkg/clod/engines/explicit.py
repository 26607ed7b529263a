"""Explicit leapfrog steppers: staircase FDTD and conformal CFDTD.

The state holds (E^n, H^{n-1/2}). One step advances H to n+1/2 from E^n,
then E to n+1, injecting sources sampled at t + dt/2. The two schemes share
the stencil; CFDTD reads conformal l/S in the H update, FDTD a staircase map.
"""

import logging

from clod.boundaries import BoundarySpec, CpmlState, cpml_apply, cpml_profiles
from clod.engines.operators import PAIRS, EdgeFaceMap, e_difference, edge_face_map, h_difference
from clod.grid import E_COMPONENTS, H_COMPONENTS, FieldState, GridSpec, MediumParams, cfl_max_dt
from clod.sources import inject

logger = logging.getLogger(__name__)


class FdtdStepper:
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
        self.cpml = None
        if boundaries is not None and not boundaries.all_pec:
            self.cpml = CpmlState(cpml_profiles(boundaries, grid, medium), PAIRS, grid, dt)
        limit = cfl_max_dt(grid, medium)
        if dt > limit:
            logger.warning("dt %.4e s exceeds the explicit CFL limit %.4e s (CFLN %.3f)", dt, limit, dt / limit)
        self._live_e = {name: emap.live_e(name) for name in E_COMPONENTS}
        self._live_h = {name: emap.live_h(name) for name in H_COMPONENTS}

    def step(self, state: FieldState, t: float) -> FieldState:
        dt = self.dt
        mu = self.medium.mu
        eps = self.medium.epsilon
        for idx, pair in enumerate(PAIRS):
            curl = self.emap.inv_areas[pair.h] * h_difference(self.emap.lengths[pair.e] * state[pair.e], pair.axis)
            state[pair.h] += (pair.sign * dt / mu) * cpml_apply(self.cpml, idx, "H", curl)
        for name in H_COMPONENTS:
            state[name] *= self._live_h[name]
        for idx, pair in enumerate(PAIRS):
            deriv = e_difference(state[pair.h], pair.axis) / self.grid.spacing[pair.axis]
            state[pair.e] += (pair.sign * dt / eps) * cpml_apply(self.cpml, idx, "E", deriv)
        if self.sources:
            inject(state, self.sources, t, dt, self.medium)
        for name in E_COMPONENTS:
            state[name] *= self._live_e[name]
        return state

    def reset(self) -> None:
        if self.cpml is not None:
            self.cpml.reset()


def fdtd_step(state: FieldState, staircase, sources, t: float, *, grid: GridSpec, medium: MediumParams, dt: float) -> FieldState:
    """One staircase leapfrog step inside PEC walls."""
    return FdtdStepper(edge_face_map(staircase, grid), grid, medium, dt, sources=sources).step(state, t)


def cfdtd_step(state: FieldState, coeffs, sources, t: float, *, grid: GridSpec, medium: MediumParams, dt: float) -> FieldState:
    """One conformal leapfrog step inside PEC walls."""
    return FdtdStepper(edge_face_map(coeffs, grid), grid, medium, dt, sources=sources).step(state, t)
