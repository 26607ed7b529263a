"""Amplification matrices, eigenvalue spectra and CFLN sweeps.

The one-step operator is assembled by column probing: each canonical basis
state is advanced one full step by the production stepper (PEC walls, no
sources) and the result becomes one column. Grids too large for a dense
eigensolve fall back to power iteration in the discrete energy norm.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from tqdm import tqdm

from clod.config import config
from clod.engines.operators import edge_face_map, energy_weights
from clod.engines.runner import SchemeKind, geometry_for, make_stepper
from clod.errors import ClodError, NumericalError, SizeLimitError
from clod.grid import COMPONENTS, FieldState, GridSpec, MediumParams, VACUUM, cfl_max_dt, component_shape, component_size

logger = logging.getLogger(__name__)

EIGEN_TOL = 1e-9


# ── State packing ────────────────────────────────────────

def state_size(grid: GridSpec) -> int:
    return sum(component_size(name, grid) for name in COMPONENTS)


def pack_state(state: FieldState) -> np.ndarray:
    """Concatenate [Ex, Ey, Ez, Hx, Hy, Hz], each flattened x fastest."""
    return np.concatenate([state[name].ravel(order="F") for name in COMPONENTS])


def unpack_state(u: np.ndarray, grid: GridSpec) -> FieldState:
    if u.shape != (state_size(grid),):
        raise ValueError(f"packed state has {u.size} entries, grid needs {state_size(grid)}")
    arrays = []
    start = 0
    for name in COMPONENTS:
        shape = component_shape(name, grid)
        size = int(np.prod(shape))
        arrays.append(np.array(u[start:start + size].reshape(shape, order="F"), order="F"))
        start += size
    return FieldState(*arrays)


# ── Dense analysis ───────────────────────────────────────

@dataclass
class AmplificationMatrix:
    matrix: np.ndarray
    scheme: SchemeKind
    grid: GridSpec
    cfln: float
    dt: float
    coefficient_source: str

    @property
    def n_tot(self) -> int:
        return self.matrix.shape[0]

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.matrix @ u


@dataclass
class StabilityReport:
    eigenvalues: np.ndarray
    max_modulus: float
    cfln: float
    stable: bool
    scheme: SchemeKind | None = None

    @property
    def verdict(self) -> str:
        return "stable" if self.stable else "unstable"


def _stepper(scheme, grid, geometry_map, medium, cfln):
    dt = cfln * cfl_max_dt(grid, medium)
    return make_stepper(scheme, geometry_map, grid, medium, dt), dt


def assemble_amplification(
    scheme: SchemeKind,
    grid: GridSpec,
    geometry_map,
    medium: MediumParams = VACUUM,
    cfln: float = 1.0,
    dense_limit: int | None = None,
    progress: bool | None = None,
) -> AmplificationMatrix:
    scheme = SchemeKind(scheme)
    n_tot = state_size(grid)
    limit = config.dense_limit if dense_limit is None else dense_limit
    if n_tot > limit:
        raise SizeLimitError(
            f"{n_tot} unknowns exceed the dense limit {limit}; use spectral_radius_estimate instead"
        )
    stepper, dt = _stepper(scheme, grid, geometry_map, medium, cfln)
    matrix = np.zeros((n_tot, n_tot))
    show = config.progress if progress is None else progress
    columns = tqdm(range(n_tot), desc=f"{scheme.value} columns", leave=False) if show else range(n_tot)
    basis = np.zeros(n_tot)
    for j in columns:
        basis[j] = 1.0
        state = unpack_state(basis, grid)
        basis[j] = 0.0
        matrix[:, j] = pack_state(stepper.step(state, 0.0))
    source = "conformal" if scheme.conformal else "staircase"
    logger.info("Assembled %s amplification matrix: %d x %d, CFLN %g", scheme.value, n_tot, n_tot, cfln)
    return AmplificationMatrix(matrix, scheme, grid, cfln, dt, source)


def eigen_spectrum(m: AmplificationMatrix | np.ndarray, cfln: float | None = None) -> StabilityReport:
    matrix = m.matrix if isinstance(m, AmplificationMatrix) else np.asarray(m, dtype=float)
    if not np.isfinite(matrix).all():
        raise NumericalError("amplification matrix has non-finite entries")
    try:
        eigenvalues = scipy.linalg.eigvals(matrix, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver did not converge: {exc}") from exc
    rho = float(np.max(np.abs(eigenvalues), initial=0.0))
    scheme = m.scheme if isinstance(m, AmplificationMatrix) else None
    if cfln is None:
        cfln = m.cfln if isinstance(m, AmplificationMatrix) else float("nan")
    return StabilityReport(eigenvalues, rho, cfln, rho <= 1.0 + EIGEN_TOL, scheme)


# ── Matrix-free estimate ─────────────────────────────────

@dataclass
class SpectralEstimate:
    estimate: float
    growth: np.ndarray = field(repr=False)
    iters: int = 0


def spectral_radius_estimate(
    scheme: SchemeKind,
    grid: GridSpec,
    geometry_map,
    cfln: float,
    iters: int = 500,
    medium: MediumParams = VACUUM,
    seed: int = 0,
    progress: bool | None = None,
) -> SpectralEstimate:
    """Power iteration on the one-step operator in the discrete energy norm.

    Returns the geometric-mean growth factor over the second half of the
    iterations together with the per-iteration growth log.
    """
    if iters < 100:
        raise ValueError("power iteration needs iters >= 100")
    scheme = SchemeKind(scheme)
    stepper, _ = _stepper(scheme, grid, geometry_map, medium, cfln)
    weights = energy_weights(edge_face_map(geometry_map, grid), grid, medium)
    w = np.concatenate([weights[name].ravel(order="F") for name in COMPONENTS])

    def norm(u: np.ndarray) -> float:
        return float(np.sqrt(np.sum(w * u * u)))

    rng = np.random.default_rng(seed)
    u = rng.standard_normal(state_size(grid))
    u /= norm(u)
    growth = np.zeros(iters)
    show = config.progress if progress is None else progress
    loop = tqdm(range(iters), desc=f"{scheme.value} power", leave=False) if show else range(iters)
    for it in loop:
        u = pack_state(stepper.step(unpack_state(u, grid), 0.0))
        g = norm(u)
        if not np.isfinite(g) or g == 0.0:
            growth[it:] = g if np.isfinite(g) else np.inf
            break
        growth[it] = g
        u /= g
    tail = growth[iters // 2:]
    if np.all(tail > 0) and np.all(np.isfinite(tail)):
        estimate = float(np.exp(np.mean(np.log(tail))))
    else:
        estimate = float(np.inf) if np.any(~np.isfinite(tail)) else 0.0
    return SpectralEstimate(estimate, growth, iters)


# ── Sweeps ───────────────────────────────────────────────

@dataclass
class SweepRow:
    scheme: str
    mesh: float
    cfln: float
    n_tot: int
    max_modulus: float
    verdict: str
    method: str = "dense"
    eigenvalues: np.ndarray | None = field(default=None, repr=False)


def cfln_sweep(
    scheme: SchemeKind,
    scene,
    extent,
    meshes,
    cflns,
    origin=(0.0, 0.0, 0.0),
    medium: MediumParams = VACUUM,
    eps_area: float = 1e-6,
    dense_limit: int | None = None,
    iters: int = 500,
    keep_spectra: bool = False,
) -> list[SweepRow]:
    """One row per (mesh, CFLN); a failing row is recorded and the sweep goes on."""
    scheme = SchemeKind(scheme)
    limit = config.dense_limit if dense_limit is None else dense_limit
    rows = []
    for mesh in meshes:
        try:
            grid = GridSpec.uniform(extent, mesh, origin)
            geometry_map = geometry_for(scheme, scene, grid, eps_area)
        except (ClodError, ValueError) as exc:
            logger.error("Mesh %g failed: %s", mesh, exc)
            rows.extend(SweepRow(scheme.value, mesh, c, 0, float("nan"), "error", "none") for c in cflns)
            continue
        n_tot = state_size(grid)
        for cfln in cflns:
            try:
                if n_tot <= limit:
                    report = eigen_spectrum(assemble_amplification(scheme, grid, geometry_map, medium, cfln, limit))
                    row = SweepRow(scheme.value, mesh, cfln, n_tot, report.max_modulus, report.verdict, "dense",
                                   report.eigenvalues if keep_spectra else None)
                else:
                    est = spectral_radius_estimate(scheme, grid, geometry_map, cfln, iters, medium)
                    verdict = "stable" if est.estimate <= 1.0 + EIGEN_TOL else "unstable"
                    row = SweepRow(scheme.value, mesh, cfln, n_tot, est.estimate, verdict, "power")
            except (ClodError, ArithmeticError) as exc:
                logger.error("%s mesh %g CFLN %g failed: %s", scheme.value, mesh, cfln, exc)
                row = SweepRow(scheme.value, mesh, cfln, n_tot, float("nan"), "error", "none")
            logger.info("%s mesh %g CFLN %g: max |lambda| = %.12f (%s)",
                        scheme.value, mesh, cfln, row.max_modulus, row.verdict)
            rows.append(row)
    return rows
