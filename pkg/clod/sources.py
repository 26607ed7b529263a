"""Excitation waveforms, soft current sources, probes, spectra and field slices."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from clod.errors import ConfigError
from clod.grid import (
    AXIS_OF,
    COMPONENT_AXIS,
    COMPONENTS,
    FieldState,
    GridSpec,
    MediumParams,
    axis_coordinates,
    nearest_node,
    node_position,
)

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-30
_DFT_BUDGET = 4_000_000
SLICE_TRANSFORMS = ("identity", "log")


# ── Waveform ─────────────────────────────────────────────

@dataclass(frozen=True)
class DifferentiatedGaussian:
    tau: float
    amplitude: float = 1.0
    t0: float | None = None

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.t0 is None:
            object.__setattr__(self, "t0", 3.0 * self.tau)


def waveform_eval(w: DifferentiatedGaussian, t):
    """A * (t - t0) * exp(-(t - t0)^2 / tau^2); accepts scalars or arrays."""
    s = np.asarray(t, dtype=float) - w.t0
    value = w.amplitude * s * np.exp(-(s / w.tau) ** 2)
    return float(value) if value.ndim == 0 else value


# ── Sources ──────────────────────────────────────────────

@dataclass(frozen=True)
class SourceSpec:
    component: str
    location: tuple[float, float, float]
    waveform: DifferentiatedGaussian
    name: str = ""

    def __post_init__(self):
        if self.component not in AXIS_OF:
            raise ValueError(f"source component must be x, y or z, got {self.component!r}")
        object.__setattr__(self, "location", tuple(float(v) for v in self.location))

    @property
    def field_name(self) -> str:
        return "E" + self.component


@dataclass(frozen=True)
class SnappedSource:
    spec: SourceSpec
    index: tuple[int, int, int]
    distance: float
    dual_area: float

    @property
    def field_name(self) -> str:
        return self.spec.field_name

    def current(self, t: float) -> float:
        return waveform_eval(self.spec.waveform, t)


def snap_source(src: SourceSpec, grid: GridSpec, live_edges: np.ndarray | None = None) -> SnappedSource:
    """Snap to the nearest E-edge of the source's component.

    ``live_edges`` is a boolean mask over that component (True where the edge
    carries field); a source landing on a dead edge is a configuration error.
    """
    name = src.field_name
    idx, dist = nearest_node(name, src.location, grid)
    if live_edges is not None and not live_edges[idx]:
        raise ConfigError(f"source {src.name or name} at {src.location} snaps to a PEC edge {idx}")
    axis = COMPONENT_AXIS[name]
    u, v = (a for a in range(3) if a != axis)
    if dist > 0:
        logger.info("Source %s snapped to %s%s, %.3e m away", src.name or name, name, idx, dist)
    return SnappedSource(src, idx, dist, grid.spacing[u] * grid.spacing[v])


def source_deltas(sources, t: float, dt: float, medium: MediumParams, scale: float = 1.0):
    """Per-source increments ``scale * dt/eps * I(t) / A_dual`` as (component, index, value)."""
    out = []
    for src in sources:
        value = scale * dt / medium.epsilon * src.current(t) / src.dual_area
        out.append((src.field_name, src.index, value))
    return out


def inject(state: FieldState, sources, t: float, dt: float, medium: MediumParams, substep: int = 0) -> FieldState:
    """Soft-source addition into ``state`` in place.

    ``substep`` 0 is a full explicit step sampled at t + dt/2. Substeps 1 and 2
    of the split schemes each add half, sampled at t + dt/4 and t + 3dt/4.
    """
    if substep == 0:
        deltas = source_deltas(sources, t + 0.5 * dt, dt, medium)
    elif substep in (1, 2):
        deltas = source_deltas(sources, t + (0.25 if substep == 1 else 0.75) * dt, dt, medium, 0.5)
    else:
        raise ValueError("substep must be 0, 1 or 2")
    for name, idx, value in deltas:
        state[name][idx] += value
    return state


# ── Probes ───────────────────────────────────────────────

@dataclass(frozen=True)
class ProbeSpec:
    component: str
    location: tuple[float, float, float]
    name: str = ""

    def __post_init__(self):
        if self.component not in COMPONENTS:
            raise ValueError(f"probe component must be one of {COMPONENTS}, got {self.component!r}")
        object.__setattr__(self, "location", tuple(float(v) for v in self.location))


@dataclass
class ProbeRecord:
    name: str
    component: str
    index: tuple[int, int, int]
    location: tuple[float, float, float]
    dt: float
    values: list[float] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.dt

    def sample(self, state: FieldState) -> None:
        self.values.append(float(state[self.component][self.index]))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def snap_probe(probe: ProbeSpec, grid: GridSpec, dt: float) -> ProbeRecord:
    idx, dist = nearest_node(probe.component, probe.location, grid)
    where = tuple(float(v) for v in node_position(probe.component, *idx, grid))
    if dist > 0:
        logger.debug("Probe %s snapped to %s%s, %.3e m away", probe.name, probe.component, idx, dist)
    return ProbeRecord(probe.name or probe.component, probe.component, idx, where, dt)


# ── Spectrum ─────────────────────────────────────────────

@dataclass
class SpectrumResult:
    freqs: np.ndarray
    amplitudes: np.ndarray
    normalized: np.ndarray

    @property
    def peak_frequency(self) -> float:
        return float(self.freqs[int(np.argmax(self.normalized))])


def dft_spectrum(rec: ProbeRecord, f_min: float, f_max: float, n_freq: int) -> SpectrumResult:
    if n_freq < 2:
        raise ConfigError("spectrum needs n_freq >= 2")
    if not 0.0 <= f_min < f_max:
        raise ConfigError("spectrum band needs 0 <= f_min < f_max")
    nyquist = 0.5 / rec.dt
    if f_max > nyquist:
        raise ConfigError(f"spectrum f_max {f_max:.4e} Hz exceeds the Nyquist limit {nyquist:.4e} Hz")
    values = rec.as_array()
    times = rec.times
    freqs = np.linspace(f_min, f_max, n_freq)
    amplitudes = np.zeros(n_freq, dtype=complex)
    chunk = max(1, _DFT_BUDGET // max(len(values), 1))
    for start in range(0, n_freq, chunk):
        f = freqs[start:start + chunk, None]
        amplitudes[start:start + chunk] = (np.exp(-2j * math.pi * f * times) @ values) * rec.dt
    magnitude = np.abs(amplitudes)
    peak = magnitude.max(initial=0.0)
    normalized = magnitude / peak if peak > 0 else np.zeros_like(magnitude)
    return SpectrumResult(freqs, amplitudes, normalized)


# ── Slices ───────────────────────────────────────────────

@dataclass
class SliceResult:
    component: str
    axis: int
    index: int
    coord: float
    transform: str
    spacing: tuple[float, float]
    data: np.ndarray
    time: float | None = None


def slice_dump(
    state: FieldState,
    grid: GridSpec,
    axis: int,
    coord: float,
    component: str,
    transform: str = "identity",
    time: float | None = None,
) -> SliceResult:
    """Nearest-node plane of one component, optionally as log10(|v| + 1e-30)."""
    if transform not in SLICE_TRANSFORMS:
        raise ConfigError(f"unknown slice transform {transform!r}")
    if component not in COMPONENTS:
        raise ConfigError(f"unknown slice component {component!r}")
    lo = grid.origin[axis]
    hi = lo + grid.extent[axis]
    if not lo <= coord <= hi:
        raise ConfigError(f"slice plane {'xyz'[axis]}={coord} lies outside [{lo}, {hi}]")
    coords = axis_coordinates(component, axis, grid)
    index = int(np.argmin(np.abs(coords - coord)))
    plane = np.array(np.take(state[component], index, axis=axis), copy=True)
    if transform == "log":
        plane = np.log10(np.abs(plane) + LOG_FLOOR)
    u, v = (a for a in range(3) if a != axis)
    return SliceResult(component, axis, index, float(coords[index]), transform,
                       (grid.spacing[u], grid.spacing[v]), plane, time)
