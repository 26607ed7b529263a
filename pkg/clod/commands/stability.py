import logging

from clod.artifacts import write_eigenvalues_csv, write_stability_csv
from clod.commands.run import run_dir_for
from clod.errors import EXIT_OK
from clod.scenario import SimulationConfig
from clod.stability import cfln_sweep

logger = logging.getLogger(__name__)


def cmd_stability(
    cfg: SimulationConfig,
    out: str | None = None,
    meshes: list[float] | None = None,
    cflns: list[float] | None = None,
    dump_spectra: bool = False,
) -> int:
    """Sweep the configured geometry over meshes x CFLNs and write the report CSV."""
    req = cfg.stability
    meshes = meshes or (req.meshes if req else (cfg.grid.dx,))
    cflns = cflns or (req.cflns if req else (cfg.cfln,))
    iters = req.iters if req else 500
    run_dir = run_dir_for(cfg, out)
    rows = []
    for scheme in cfg.schemes:
        rows.extend(cfln_sweep(
            scheme, cfg.scene, cfg.extent, meshes, cflns,
            origin=cfg.grid.origin, medium=cfg.medium, eps_area=cfg.eps_area,
            dense_limit=cfg.dense_limit, iters=iters, keep_spectra=dump_spectra,
        ))
    write_stability_csv(rows, run_dir / "stability.csv")
    for row in rows:
        print(f"{row.scheme:6s} mesh {row.mesh:<8g} CFLN {row.cfln:<6g} N {row.n_tot:<6d} "
              f"max|lambda| {row.max_modulus:.12f}  {row.verdict} ({row.method})")
        if dump_spectra and row.eigenvalues is not None:
            write_eigenvalues_csv(row.eigenvalues, run_dir / f"eigs_{row.scheme}_{row.mesh:g}_{row.cfln:g}.csv")
    logger.info("Stability report written to %s", run_dir)
    return EXIT_OK
