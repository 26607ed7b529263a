"""Yee grid, field storage, vacuum constants and the CFL time-step limit.

Every field component is a Fortran-ordered float64 array indexed ``[i, j, k]``,
so the flat offset of node (i, j, k) is ``i + n0 * (j + n1 * k)`` (x fastest).
Node positions:

    Ex (i+1/2, j, k)      Hx (i, j+1/2, k+1/2)
    Ey (i, j+1/2, k)      Hy (i+1/2, j, k+1/2)
    Ez (i, j, k+1/2)      Hz (i+1/2, j+1/2, k)
"""

import math
from dataclasses import dataclass, field

import numpy as np

from clod.errors import GridIndexError

EPS0 = 8.8541878128e-12
MU0 = 4.0e-7 * math.pi

E_COMPONENTS = ("Ex", "Ey", "Ez")
H_COMPONENTS = ("Hx", "Hy", "Hz")
COMPONENTS = E_COMPONENTS + H_COMPONENTS

AXIS_OF = {"x": 0, "y": 1, "z": 2}

# half-cell offsets of each component's nodes along x, y, z
_STAGGER = {
    "Ex": (0.5, 0.0, 0.0),
    "Ey": (0.0, 0.5, 0.0),
    "Ez": (0.0, 0.0, 0.5),
    "Hx": (0.0, 0.5, 0.5),
    "Hy": (0.5, 0.0, 0.5),
    "Hz": (0.5, 0.5, 0.0),
}


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1:
            raise ValueError("cell counts must be >= 1")
        if min(self.dx, self.dy, self.dz) <= 0:
            raise ValueError("cell sizes must be > 0")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))

    @property
    def cells(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    @property
    def extent(self) -> tuple[float, float, float]:
        return (self.nx * self.dx, self.ny * self.dy, self.nz * self.dz)

    @classmethod
    def uniform(cls, size, spacing: float, origin=(0.0, 0.0, 0.0)) -> "GridSpec":
        """Grid covering ``size`` (3 lengths) with cubic cells of ``spacing``."""
        counts = []
        for length in size:
            n = round(length / spacing)
            if n < 1 or abs(n * spacing - length) > 1e-9 * max(length, spacing):
                raise ValueError(f"extent {length} is not a multiple of spacing {spacing}")
            counts.append(n)
        return cls(*counts, spacing, spacing, spacing, origin=tuple(origin))


@dataclass(frozen=True)
class MediumParams:
    epsilon: float = EPS0
    mu: float = MU0
    c: float = field(init=False)

    def __post_init__(self):
        if self.epsilon <= 0 or self.mu <= 0:
            raise ValueError("epsilon and mu must be > 0")
        object.__setattr__(self, "c", 1.0 / math.sqrt(self.epsilon * self.mu))

    @property
    def eps_r(self) -> float:
        return self.epsilon / EPS0


VACUUM = MediumParams()


@dataclass(frozen=True)
class Timebase:
    dt: float
    cfln: float
    n_steps: int

    def time(self, n: int) -> float:
        return n * self.dt


def cfl_max_dt(grid: GridSpec, medium: MediumParams = VACUUM) -> float:
    return 1.0 / (medium.c * math.sqrt(grid.dx ** -2 + grid.dy ** -2 + grid.dz ** -2))


def steps_for_duration(duration: float, dt: float) -> int:
    return int(math.floor(duration / dt * (1.0 + 1e-9)))


def make_timebase(
    grid: GridSpec,
    medium: MediumParams,
    cfln: float,
    duration: float | None = None,
    n_steps: int | None = None,
) -> Timebase:
    if (duration is None) == (n_steps is None):
        raise ValueError("give exactly one of duration and n_steps")
    if cfln <= 0:
        raise ValueError("cfln must be > 0")
    dt = cfln * cfl_max_dt(grid, medium)
    if n_steps is None:
        n_steps = steps_for_duration(duration, dt)
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    return Timebase(dt=dt, cfln=cfln, n_steps=int(n_steps))


# ── Staggered layout ─────────────────────────────────────

_LO = slice(None, -1)
_HI = slice(1, None)
_ALL = slice(None)

# the four edges bounding each face: (edge component, slice aligning it to the face array)
FACE_EDGES = {
    "Hx": (("Ey", (_ALL, _ALL, _LO)), ("Ey", (_ALL, _ALL, _HI)),
           ("Ez", (_ALL, _LO, _ALL)), ("Ez", (_ALL, _HI, _ALL))),
    "Hy": (("Ex", (_ALL, _ALL, _LO)), ("Ex", (_ALL, _ALL, _HI)),
           ("Ez", (_LO, _ALL, _ALL)), ("Ez", (_HI, _ALL, _ALL))),
    "Hz": (("Ex", (_ALL, _LO, _ALL)), ("Ex", (_ALL, _HI, _ALL)),
           ("Ey", (_LO, _ALL, _ALL)), ("Ey", (_HI, _ALL, _ALL))),
}

# axis along which each E component points / to which each H face is normal
COMPONENT_AXIS = {"Ex": 0, "Ey": 1, "Ez": 2, "Hx": 0, "Hy": 1, "Hz": 2}


def component_shape(name: str, grid: GridSpec) -> tuple[int, int, int]:
    nx, ny, nz = grid.cells
    return {
        "Ex": (nx, ny + 1, nz + 1),
        "Ey": (nx + 1, ny, nz + 1),
        "Ez": (nx + 1, ny + 1, nz),
        "Hx": (nx + 1, ny, nz),
        "Hy": (nx, ny + 1, nz),
        "Hz": (nx, ny, nz + 1),
    }[name]


def component_size(name: str, grid: GridSpec) -> int:
    n0, n1, n2 = component_shape(name, grid)
    return n0 * n1 * n2


def node_index(name: str, i: int, j: int, k: int, grid: GridSpec) -> int:
    n0, n1, n2 = component_shape(name, grid)
    if not (0 <= i < n0 and 0 <= j < n1 and 0 <= k < n2):
        raise GridIndexError(f"{name} node ({i}, {j}, {k}) outside {n0}x{n1}x{n2}")
    return i + n0 * (j + n1 * k)


def node_coords(name: str, offset: int, grid: GridSpec) -> tuple[int, int, int]:
    n0, n1, n2 = component_shape(name, grid)
    if not 0 <= offset < n0 * n1 * n2:
        raise GridIndexError(f"{name} offset {offset} outside 0..{n0 * n1 * n2 - 1}")
    i = offset % n0
    j = (offset // n0) % n1
    k = offset // (n0 * n1)
    return i, j, k


def node_position(name: str, i: float, j: float, k: float, grid: GridSpec) -> np.ndarray:
    sx, sy, sz = _STAGGER[name]
    ox, oy, oz = grid.origin
    return np.array([ox + (i + sx) * grid.dx, oy + (j + sy) * grid.dy, oz + (k + sz) * grid.dz])


def axis_coordinates(name: str, axis: int, grid: GridSpec) -> np.ndarray:
    """Physical coordinates of the component's nodes along one axis."""
    n = component_shape(name, grid)[axis]
    return grid.origin[axis] + (np.arange(n) + _STAGGER[name][axis]) * grid.spacing[axis]


def nearest_node(name: str, point, grid: GridSpec) -> tuple[tuple[int, int, int], float]:
    """Closest node of a component to ``point``; returns (index, distance)."""
    idx = []
    for axis in range(3):
        coords = axis_coordinates(name, axis, grid)
        idx.append(int(np.argmin(np.abs(coords - point[axis]))))
    where = node_position(name, *idx, grid)
    return tuple(idx), float(np.linalg.norm(where - np.asarray(point, dtype=float)))


# ── Field storage ────────────────────────────────────────

@dataclass
class FieldState:
    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    hz: np.ndarray

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FieldState":
        arrays = [np.zeros(component_shape(name, grid), order="F") for name in COMPONENTS]
        return cls(*arrays)

    def __getitem__(self, name: str) -> np.ndarray:
        return getattr(self, name.lower())

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        setattr(self, name.lower(), value)

    def copy(self) -> "FieldState":
        return FieldState(*(np.array(self[name], order="F", copy=True) for name in COMPONENTS))

    def max_abs_e(self) -> float:
        return max(float(np.max(np.abs(self[name]), initial=0.0)) for name in E_COMPONENTS)

    def max_abs_h(self) -> float:
        return max(float(np.max(np.abs(self[name]), initial=0.0)) for name in H_COMPONENTS)

    def is_finite(self) -> bool:
        return all(bool(np.isfinite(self[name]).all()) for name in COMPONENTS)
