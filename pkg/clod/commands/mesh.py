import logging

from clod.artifacts import write_mask_csv
from clod.commands.run import run_dir_for
from clod.errors import EXIT_OK, ConfigError
from clod.geometry.conformal import build_conformal_map, coefficient_summary, export_coefficients, partial_face_plane
from clod.scenario import SimulationConfig

logger = logging.getLogger(__name__)


def parse_plane(text: str) -> tuple[int, float]:
    """'z=1.0' -> (2, 1.0)"""
    key, _, value = text.partition("=")
    key = key.strip().lower()
    if key not in ("x", "y", "z") or not value:
        raise ConfigError(f"plane must look like z=1.0, got {text!r}")
    try:
        return "xyz".index(key), float(value)
    except ValueError:
        raise ConfigError(f"plane coordinate {value!r} is not a number") from None


def cmd_mesh_export(cfg: SimulationConfig, out: str | None = None, plane: str | None = None) -> int:
    coeffs = build_conformal_map(cfg.scene, cfg.grid, cfg.eps_area)
    run_dir = run_dir_for(cfg, out)
    path = export_coefficients(coeffs, cfg.grid, run_dir / "coefficients.bin")
    stats = coefficient_summary(coeffs, cfg.grid)
    print(f"partial edges:           {stats['partial_edges']}")
    print(f"partial faces:           {stats['partial_faces']}")
    print(f"min nonzero S fraction:  {stats['min_nonzero_s_fraction']:.6e}")
    print(f"l_max / S_min (1/m):     {stats['l_max_over_s_min']:.6e}")
    if plane:
        axis, coord = parse_plane(plane)
        mask = partial_face_plane(coeffs, cfg.grid, axis, coord)
        write_mask_csv(mask, run_dir / f"partial_{'xyz'[axis]}{coord:g}.csv")
        print(f"partial faces on {'xyz'[axis]}={coord:g}: {int(mask.sum())}")
    logger.info("Coefficients written to %s", path)
    return EXIT_OK
