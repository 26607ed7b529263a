"""Scheme dispatch and the time-stepping loop."""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from tqdm import tqdm

from clod.config import config
from clod.errors import DivergenceError
from clod.engines.explicit import FdtdStepper
from clod.engines.implicit import LodStepper
from clod.engines.operators import EdgeFaceMap, edge_face_map, field_energy
from clod.geometry.conformal import (
    ConformalCoefficients,
    StaircaseMap,
    build_conformal_map,
    build_staircase_map,
    coefficient_summary,
)
from clod.grid import FieldState, GridSpec, MediumParams, Timebase, make_timebase
from clod.sources import ProbeRecord, SliceResult, slice_dump, snap_probe, snap_source

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e30


class SchemeKind(str, Enum):
    FDTD = "FDTD"
    CFDTD = "CFDTD"
    LOD = "LOD"
    CLOD = "CLOD"

    @property
    def conformal(self) -> bool:
        return self in (SchemeKind.CFDTD, SchemeKind.CLOD)

    @property
    def implicit(self) -> bool:
        return self in (SchemeKind.LOD, SchemeKind.CLOD)


@dataclass
class StepReport:
    step: int
    wall_time: float
    max_e: float
    max_h: float
    finite: bool


@dataclass
class RunResult:
    scheme: SchemeKind
    timebase: Timebase
    probes: list[ProbeRecord]
    slices: list[SliceResult]
    reports: list[StepReport]
    steps_done: int = 0
    wall_time: float = 0.0
    energy: float = 0.0
    max_e_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    peak_e: float = 0.0
    peak_h: float = 0.0
    diverged: bool = False
    map_summary: dict = field(default_factory=dict)

    @property
    def seconds_per_step(self) -> float:
        return self.wall_time / self.steps_done if self.steps_done else 0.0


def _check_map(scheme: SchemeKind, geometry_map) -> None:
    if isinstance(geometry_map, ConformalCoefficients) and not scheme.conformal:
        raise TypeError(f"{scheme.value} needs a staircase map, not conformal coefficients")
    if isinstance(geometry_map, StaircaseMap) and scheme.conformal:
        raise TypeError(f"{scheme.value} needs conformal coefficients, not a staircase map")


def make_stepper(
    scheme: SchemeKind,
    geometry_map,
    grid: GridSpec,
    medium: MediumParams,
    dt: float,
    boundaries=None,
    sources=(),
):
    """Stepper for ``scheme``; conformal schemes take ConformalCoefficients, the others a StaircaseMap."""
    scheme = SchemeKind(scheme)
    _check_map(scheme, geometry_map)
    emap = edge_face_map(geometry_map, grid)
    cls = LodStepper if scheme.implicit else FdtdStepper
    return cls(emap, grid, medium, dt, boundaries=boundaries, sources=sources)


def geometry_for(scheme: SchemeKind, scene, grid: GridSpec, eps_area: float):
    if SchemeKind(scheme).conformal:
        return build_conformal_map(scene, grid, eps_area)
    return build_staircase_map(scene, grid)


def _slice_schedule(requests, timebase: Timebase) -> dict[int, list]:
    due: dict[int, list] = {}
    for req in requests:
        for at in req.times:
            n = int(round(at / timebase.dt)) if timebase.dt > 0 else 0
            if 0 <= n <= timebase.n_steps:
                due.setdefault(n, []).append(req)
            else:
                logger.warning("Slice at t = %.4e s lies past the last step, skipped", at)
    return due


def _dump_slices(state, grid, reqs, t) -> list[SliceResult]:
    out = []
    for req in reqs:
        for axis, coord in req.planes:
            out.append(slice_dump(state, grid, axis, coord, req.component, req.transform, time=t))
    return out


def run(cfg, scheme: SchemeKind | None = None, geometry_map=None, progress: bool | None = None) -> RunResult:
    """Advance the configured scenario and collect probes, slices and step reports.

    On divergence the collected artifacts are attached to the raised
    DivergenceError as ``.artifacts``.
    """
    scheme = SchemeKind(scheme or cfg.scheme)
    grid, medium = cfg.grid, cfg.medium
    timebase = make_timebase(grid, medium, cfg.cfln, duration=cfg.duration, n_steps=cfg.n_steps)
    if geometry_map is None:
        geometry_map = geometry_for(scheme, cfg.scene, grid, cfg.eps_area)
    _check_map(scheme, geometry_map)
    emap: EdgeFaceMap = edge_face_map(geometry_map, grid)
    sources = [snap_source(src, grid, emap.live_e(src.field_name)) for src in cfg.sources]
    stepper = make_stepper(scheme, emap, grid, medium, timebase.dt, cfg.boundaries, sources)
    logger.info("%s ready: dt = %.4e s, CFLN = %g, %d steps", scheme.value, timebase.dt, timebase.cfln, timebase.n_steps)

    state = FieldState.zeros(grid)
    probes = [snap_probe(p, grid, timebase.dt) for p in cfg.probes]
    schedule = _slice_schedule(cfg.slices, timebase)
    result = RunResult(scheme, timebase, probes, [], [], max_e_history=np.zeros(timebase.n_steps))
    if isinstance(geometry_map, ConformalCoefficients):
        result.map_summary = coefficient_summary(geometry_map, grid)

    for rec in probes:
        rec.sample(state)
    result.slices.extend(_dump_slices(state, grid, schedule.get(0, ()), 0.0))

    show = config.progress if progress is None else progress
    started = time.perf_counter()
    steps = range(timebase.n_steps)
    if show and timebase.n_steps:
        steps = tqdm(steps, desc=scheme.value, unit="step", leave=False)
    for n in steps:
        t = timebase.time(n)
        stepper.step(state, t)
        max_e, max_h = state.max_abs_e(), state.max_abs_h()
        finite = bool(np.isfinite(max_e) and np.isfinite(max_h))
        result.max_e_history[n] = max_e
        result.peak_e = max(result.peak_e, max_e)
        result.peak_h = max(result.peak_h, max_h)
        for rec in probes:
            rec.sample(state)
        result.steps_done = n + 1
        if not finite or max(max_e, max_h) > DIVERGENCE_LIMIT:
            result.wall_time = time.perf_counter() - started
            result.diverged = True
            result.max_e_history = result.max_e_history[: n + 1]
            result.reports.append(StepReport(n + 1, result.wall_time, max_e, max_h, finite))
            logger.warning("%s diverged at step %d (t = %.4e s)", scheme.value, n + 1, timebase.time(n + 1))
            err = DivergenceError(n + 1, timebase.time(n + 1), f"max |E| = {max_e:.3e}, max |H| = {max_h:.3e}")
            err.artifacts = result
            raise err
        if n + 1 in schedule:
            result.slices.extend(_dump_slices(state, grid, schedule[n + 1], timebase.time(n + 1)))
        if (n + 1) % config.log_every == 0 or n + 1 == timebase.n_steps:
            report = StepReport(n + 1, time.perf_counter() - started, max_e, max_h, finite)
            result.reports.append(report)
            logger.debug("step %d: max |E| = %.3e, max |H| = %.3e", report.step, max_e, max_h)

    result.wall_time = time.perf_counter() - started
    result.energy = field_energy(state, emap, grid, medium)
    logger.info("%s finished %d steps in %.2f s", scheme.value, result.steps_done, result.wall_time)
    return result
