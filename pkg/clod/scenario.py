"""Scenario files: TOML tables parsed into a validated SimulationConfig.

    [grid]        size = [x, y, z] (m), spacing (m), origin
    [medium]      eps_r, mu_r
    [time]        cfln, and exactly one of duration (s) / n_steps
    [scheme]      kind, compare (extra schemes run side by side), eps_area
    [[shapes]]    type = box | sphere | cylinder | stl
    [boundaries]  default = pec | cpml, optional per-face override, [boundaries.cpml]
    [[sources]]   component, location, tau, amplitude, t0
    [[probes]]    component, location, name
    [[slices]]    component, transform, times, x / y / z or through = [x, y, z]
    [spectrum]    probe, f_min, f_max, n_freq
    [stability]   meshes, cflns, iters
    [output]      dir, slice_format = binary | csv
"""

import logging
import re
import tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path

from clod.boundaries import FACES, BoundarySpec, CpmlParams
from clod.engines.runner import SchemeKind
from clod.errors import ConfigError, ConfigSyntaxError, GeometryError
from clod.geometry.conformal import DEFAULT_EPS_AREA
from clod.geometry.shapes import Box, CylinderZ, Scene, Sphere, load_stl
from clod.grid import COMPONENTS, EPS0, MU0, GridSpec, MediumParams, cfl_max_dt
from clod.sources import SLICE_TRANSFORMS, DifferentiatedGaussian, ProbeSpec, SourceSpec

logger = logging.getLogger(__name__)

_LINE_RE = re.compile(r"at line (\d+)")
SLICE_FORMATS = ("binary", "csv")


@dataclass(frozen=True)
class SliceRequest:
    component: str
    planes: tuple[tuple[int, float], ...]
    times: tuple[float, ...]
    transform: str = "identity"


@dataclass(frozen=True)
class SpectrumRequest:
    probe: str
    f_min: float
    f_max: float
    n_freq: int


@dataclass(frozen=True)
class StabilityRequest:
    meshes: tuple[float, ...]
    cflns: tuple[float, ...]
    iters: int = 500


@dataclass
class SimulationConfig:
    name: str
    grid: GridSpec
    medium: MediumParams
    cfln: float
    scheme: SchemeKind
    duration: float | None = None
    n_steps: int | None = None
    compare: tuple[SchemeKind, ...] = ()
    scene: Scene = field(default_factory=Scene)
    boundaries: BoundarySpec = field(default_factory=BoundarySpec)
    sources: tuple[SourceSpec, ...] = ()
    probes: tuple[ProbeSpec, ...] = ()
    slices: tuple[SliceRequest, ...] = ()
    spectrum: SpectrumRequest | None = None
    stability: StabilityRequest | None = None
    output_dir: str | None = None
    slice_format: str = "binary"
    eps_area: float = DEFAULT_EPS_AREA
    dense_limit: int | None = None
    path: Path | None = None

    @property
    def schemes(self) -> tuple[SchemeKind, ...]:
        return (self.scheme,) + tuple(s for s in self.compare if s != self.scheme)

    @property
    def extent(self) -> tuple[float, float, float]:
        return self.grid.extent

    def with_overrides(self, cfln: float | None = None, scheme: str | None = None) -> "SimulationConfig":
        changes = {}
        if cfln is not None:
            if cfln <= 0:
                raise ConfigError("time.cfln must be > 0")
            changes["cfln"] = cfln
            if self.spectrum is not None:
                problem = _nyquist_problem(self.spectrum, self.grid, self.medium, cfln)
                if problem:
                    raise ConfigError(problem)
        if scheme is not None:
            try:
                changes["scheme"] = SchemeKind(scheme.upper())
            except ValueError:
                raise ConfigError(f"unknown scheme {scheme!r}") from None
            changes["compare"] = ()
        return replace(self, **changes)


def _nyquist_problem(spectrum: SpectrumRequest, grid: GridSpec, medium: MediumParams, cfln: float) -> str | None:
    nyquist = 0.5 / (cfln * cfl_max_dt(grid, medium))
    if spectrum.f_max > nyquist:
        return f"spectrum.f_max {spectrum.f_max:.4e} Hz exceeds the Nyquist limit {nyquist:.4e} Hz at CFLN {cfln:g}"
    return None


class _Checker:
    """Collects every validation problem instead of stopping at the first."""

    def __init__(self):
        self.errors: list[str] = []

    def fail(self, msg: str) -> None:
        self.errors.append(msg)

    def number(self, table: dict, key: str, where: str, default=None, positive=False, required=False):
        if key not in table:
            if required:
                self.fail(f"{where}.{key} is required")
            return default
        value = table[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(f"{where}.{key} must be a number")
            return default
        if positive and value <= 0:
            self.fail(f"{where}.{key} must be > 0")
            return default
        return float(value)

    def vector(self, table: dict, key: str, where: str, size: int = 3, default=None, required=False):
        if key not in table:
            if required:
                self.fail(f"{where}.{key} is required")
            return default
        value = table[key]
        if (not isinstance(value, list) or len(value) != size
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)):
            self.fail(f"{where}.{key} must be a list of {size} numbers")
            return default
        return tuple(float(v) for v in value)

    def tables(self, raw: dict, key: str) -> list[tuple[int, dict]]:
        """Entries of an array of tables; anything that is not a table is reported."""
        items = raw.get(key, [])
        if not isinstance(items, list):
            self.fail(f"{key} must be an array of tables ([[{key}]])")
            return []
        out = []
        for n, item in enumerate(items):
            if isinstance(item, dict):
                out.append((n, item))
            else:
                self.fail(f"{key}[{n}] must be a table, got {type(item).__name__}")
        return out

    def numbers(self, table: dict, key: str, where: str, default=()):
        value = table.get(key, list(default))
        if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            self.fail(f"{where}.{key} must be a list of numbers")
            return tuple(default)
        return tuple(float(v) for v in value)


def _read_toml(path: Path) -> dict:
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        found = _LINE_RE.search(str(exc))
        raise ConfigSyntaxError(str(exc), int(found.group(1)) if found else None) from exc


def _grid(raw: dict, chk: _Checker) -> GridSpec | None:
    table = raw.get("grid")
    if not isinstance(table, dict):
        chk.fail("[grid] table is required")
        return None
    size = chk.vector(table, "size", "grid", required=True)
    spacing = chk.number(table, "spacing", "grid", positive=True, required=True)
    origin = chk.vector(table, "origin", "grid", default=(0.0, 0.0, 0.0))
    if size is None or spacing is None:
        return None
    try:
        return GridSpec.uniform(size, spacing, origin)
    except ValueError as exc:
        chk.fail(f"grid: {exc}")
        return None


def _medium(raw: dict, chk: _Checker) -> MediumParams:
    table = raw.get("medium", {})
    eps_r = chk.number(table, "eps_r", "medium", default=1.0, positive=True)
    mu_r = chk.number(table, "mu_r", "medium", default=1.0, positive=True)
    return MediumParams(EPS0 * eps_r, MU0 * mu_r)


def _shapes(raw: dict, chk: _Checker, base: Path) -> Scene:
    shapes = []
    for n, item in chk.tables(raw, "shapes"):
        where = f"shapes[{n}]"
        kind = item.get("type")
        try:
            if kind == "box":
                lo = chk.vector(item, "min", where, required=True)
                hi = chk.vector(item, "max", where, required=True)
                if lo and hi:
                    shapes.append(Box(lo, hi))
            elif kind == "sphere":
                center = chk.vector(item, "center", where, required=True)
                radius = chk.number(item, "radius", where, positive=True, required=True)
                if center and radius:
                    shapes.append(Sphere(center, radius))
            elif kind == "cylinder":
                center = chk.vector(item, "center", where, size=2, required=True)
                radius = chk.number(item, "radius", where, positive=True, required=True)
                zmin = chk.number(item, "zmin", where, required=True)
                zmax = chk.number(item, "zmax", where, required=True)
                if center and radius and zmin is not None and zmax is not None:
                    shapes.append(CylinderZ(center, radius, zmin, zmax))
            elif kind == "stl":
                rel = item.get("path")
                if not isinstance(rel, str):
                    chk.fail(f"{where}.path must be a string")
                    continue
                path = Path(rel) if Path(rel).is_absolute() else base / rel
                if not path.is_file():
                    chk.fail(f"{where}.path {path} does not exist")
                    continue
                scale = chk.number(item, "scale", where, default=1.0, positive=True)
                offset = chk.vector(item, "offset", where, default=(0.0, 0.0, 0.0))
                shapes.append(load_stl(path, scale, offset))
            else:
                chk.fail(f"{where}.type must be one of box, sphere, cylinder, stl")
        except GeometryError as exc:
            chk.fail(f"{where}: {exc}")
    try:
        return Scene(tuple(shapes))
    except GeometryError as exc:
        chk.fail(f"shapes: {exc}")
        return Scene()


def _boundaries(raw: dict, chk: _Checker) -> BoundarySpec:
    table = raw.get("boundaries", {})
    try:
        params = CpmlParams(**table.get("cpml", {}))
    except (TypeError, ValueError) as exc:
        chk.fail(f"boundaries.cpml: {exc}")
        params = CpmlParams()
    default = table.get("default", "pec")
    faces = []
    for name in FACES:
        kind = table.get(name, default)
        if kind == "pec":
            faces.append(None)
        elif kind == "cpml":
            faces.append(params)
        else:
            chk.fail(f"boundaries.{name} must be pec or cpml, got {kind!r}")
            faces.append(None)
    return BoundarySpec(tuple(faces))


def _sources(raw: dict, chk: _Checker) -> tuple[SourceSpec, ...]:
    out = []
    for n, item in chk.tables(raw, "sources"):
        where = f"sources[{n}]"
        location = chk.vector(item, "location", where, required=True)
        tau = chk.number(item, "tau", where, positive=True, required=True)
        amplitude = chk.number(item, "amplitude", where, default=1.0)
        t0 = chk.number(item, "t0", where)
        component = item.get("component", "z")
        if location is None or tau is None:
            continue
        try:
            out.append(SourceSpec(component, location, DifferentiatedGaussian(tau, amplitude, t0),
                                  item.get("name", f"source{n}")))
        except ValueError as exc:
            chk.fail(f"{where}: {exc}")
    return tuple(out)


def _probes(raw: dict, chk: _Checker) -> tuple[ProbeSpec, ...]:
    out = []
    for n, item in chk.tables(raw, "probes"):
        where = f"probes[{n}]"
        location = chk.vector(item, "location", where, required=True)
        if location is None:
            continue
        try:
            out.append(ProbeSpec(item.get("component", "Ez"), location, item.get("name", f"probe{n}")))
        except ValueError as exc:
            chk.fail(f"{where}: {exc}")
    names = [p.name for p in out]
    if len(set(names)) != len(names):
        chk.fail("probe names must be unique")
    return tuple(out)


def _slices(raw: dict, chk: _Checker, grid: GridSpec | None) -> tuple[SliceRequest, ...]:
    out = []
    for n, item in chk.tables(raw, "slices"):
        where = f"slices[{n}]"
        planes = []
        through = chk.vector(item, "through", where)
        if through is not None:
            planes.extend(enumerate(through))
        for axis, key in enumerate("xyz"):
            coord = chk.number(item, key, where)
            if coord is not None:
                planes.append((axis, coord))
        if not planes:
            chk.fail(f"{where} needs x, y, z or through")
        if grid is not None:
            for axis, coord in planes:
                lo = grid.origin[axis]
                hi = lo + grid.extent[axis]
                if not lo <= coord <= hi:
                    chk.fail(f"{where}: plane {'xyz'[axis]}={coord} lies outside [{lo}, {hi}]")
        component = item.get("component", "Ex")
        if component not in COMPONENTS:
            chk.fail(f"{where}.component must be one of {', '.join(COMPONENTS)}, got {component!r}")
        transform = item.get("transform", "identity")
        if transform not in SLICE_TRANSFORMS:
            chk.fail(f"{where}.transform must be one of {', '.join(SLICE_TRANSFORMS)}")
        times = chk.numbers(item, "times", where, default=(0.0,))
        if any(t < 0 for t in times):
            chk.fail(f"{where}.times must be >= 0")
        out.append(SliceRequest(component, tuple(planes), times, transform))
    return tuple(out)


def parse_config(path: str | Path) -> SimulationConfig:
    """Read and validate a scenario; every semantic problem is reported together."""
    path = Path(path)
    raw = _read_toml(path)
    chk = _Checker()

    grid = _grid(raw, chk)
    medium = _medium(raw, chk)

    time_table = raw.get("time", {})
    cfln = chk.number(time_table, "cfln", "time", required=True)
    if cfln is not None and cfln <= 0:
        chk.fail("time.cfln must be > 0")
    duration = chk.number(time_table, "duration", "time", positive=True)
    n_steps = time_table.get("n_steps")
    if n_steps is not None and (not isinstance(n_steps, int) or isinstance(n_steps, bool) or n_steps < 0):
        chk.fail("time.n_steps must be a non-negative integer")
        n_steps = None
    if ("duration" in time_table) == ("n_steps" in time_table):
        chk.fail("time needs exactly one of duration and n_steps")

    scheme_table = raw.get("scheme", {})
    scheme = SchemeKind.CLOD
    compare = []
    try:
        scheme = SchemeKind(str(scheme_table.get("kind", "CLOD")).upper())
        compare = [SchemeKind(str(s).upper()) for s in scheme_table.get("compare", [])]
    except ValueError as exc:
        chk.fail(f"scheme: {exc}")
    eps_area = chk.number(scheme_table, "eps_area", "scheme", default=DEFAULT_EPS_AREA)
    if not 0.0 <= eps_area < 0.5:
        chk.fail("scheme.eps_area must lie in [0, 0.5)")

    scene = _shapes(raw, chk, path.parent)
    boundaries = _boundaries(raw, chk)
    sources = _sources(raw, chk)
    probes = _probes(raw, chk)
    slices = _slices(raw, chk, grid)

    spectrum = None
    if "spectrum" in raw:
        table = raw["spectrum"]
        probe = table.get("probe", probes[0].name if probes else "")
        if probe not in {p.name for p in probes}:
            chk.fail(f"spectrum.probe {probe!r} names no probe")
        f_min = chk.number(table, "f_min", "spectrum", default=0.0)
        f_max = chk.number(table, "f_max", "spectrum", positive=True, required=True)
        if f_max is not None and not f_min < f_max:
            chk.fail("spectrum band needs f_min < f_max")
        n_freq = table.get("n_freq", 1000)
        if not isinstance(n_freq, int) or n_freq < 2:
            chk.fail("spectrum.n_freq must be an integer >= 2")
        if f_max is not None:
            spectrum = SpectrumRequest(probe, f_min, f_max, n_freq)
            if grid is not None and cfln is not None and cfln > 0:
                problem = _nyquist_problem(spectrum, grid, medium, cfln)
                if problem:
                    chk.fail(problem)

    stability = None
    if "stability" in raw:
        table = raw["stability"]
        meshes = chk.numbers(table, "meshes", "stability", default=(grid.dx,) if grid else ())
        cflns = chk.numbers(table, "cflns", "stability", default=(cfln,) if cfln else ())
        if any(m <= 0 for m in meshes) or any(c <= 0 for c in cflns):
            chk.fail("stability meshes and cflns must be > 0")
        iters = table.get("iters", 500)
        if not isinstance(iters, int) or iters < 100:
            chk.fail("stability.iters must be an integer >= 100")
        stability = StabilityRequest(meshes, cflns, iters)

    output = raw.get("output", {})
    slice_format = output.get("slice_format", "binary")
    if slice_format not in SLICE_FORMATS:
        chk.fail(f"output.slice_format must be one of {', '.join(SLICE_FORMATS)}")
    dense_limit = raw.get("stability", {}).get("dense_limit")

    if chk.errors:
        raise ConfigError(chk.errors)
    cfg = SimulationConfig(
        name=str(raw.get("name", path.stem)),
        grid=grid,
        medium=medium,
        cfln=cfln,
        scheme=scheme,
        duration=duration,
        n_steps=n_steps,
        compare=tuple(compare),
        scene=scene,
        boundaries=boundaries,
        sources=sources,
        probes=probes,
        slices=slices,
        spectrum=spectrum,
        stability=stability,
        output_dir=output.get("dir"),
        slice_format=slice_format,
        eps_area=eps_area,
        dense_limit=dense_limit,
        path=path,
    )
    logger.info("Loaded scenario %s: %dx%dx%d cells, %s", cfg.name, *grid.cells, scheme.value)
    return cfg
