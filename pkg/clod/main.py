import argparse
import logging
import sys

import numba

from clod.commands import mesh, run, scenarios, stability
from clod.config import config
from clod.errors import (
    EXIT_DIVERGENCE,
    EXIT_IO,
    EXIT_VALIDATION,
    ClodError,
    ConfigError,
    DivergenceError,
    GeometryError,
)
from clod.scenario import parse_config

logging.basicConfig(
    level=getattr(logging, config.log_level, logging.INFO),
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
)
logger = logging.getLogger(__name__)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clod", description="Conformal LOD-FDTD solver and stability lab")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario file or bundled scenario name")
    common.add_argument("--cfln", type=float, help="override time.cfln")
    common.add_argument("--scheme", choices=["FDTD", "CFDTD", "LOD", "CLOD"], type=str.upper,
                        help="override scheme.kind (drops scheme.compare)")
    common.add_argument("--out", help="run directory")
    common.add_argument("--threads", type=int, default=config.threads, help="numba threads (0: default)")
    common.add_argument("--seed", type=int, help="reserved; the solver is deterministic")

    sub.add_parser("run", parents=[common], help="time-domain run")
    stab = sub.add_parser("stability", parents=[common], help="eigenvalue / power-iteration sweep")
    stab.add_argument("--meshes", type=_floats, help="comma-separated mesh sizes (m)")
    stab.add_argument("--cflns", type=_floats, help="comma-separated CFLN values")
    stab.add_argument("--dump-spectra", action="store_true", help="write (Re, Im) eigenvalue CSVs")
    mesh_p = sub.add_parser("mesh-export", parents=[common], help="export conformal coefficients")
    mesh_p.add_argument("--plane", help="also write the partial-face mask of a plane, e.g. z=1.0")
    sub.add_parser("scenarios", help="list bundled scenarios")
    return parser


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "scenarios":
        return scenarios.cmd_scenarios()
    if args.threads:
        numba.set_num_threads(args.threads)
    cfg = parse_config(scenarios.resolve_scenario(args.config)).with_overrides(args.cfln, args.scheme)
    if args.command == "run":
        return run.cmd_run(cfg, args.out)
    if args.command == "stability":
        return stability.cmd_stability(cfg, args.out, args.meshes, args.cflns, args.dump_spectra)
    return mesh.cmd_mesh_export(cfg, args.out, args.plane)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return dispatch(args)
    except (ConfigError, GeometryError) as exc:
        logger.error("Invalid input: %s", exc)
        return EXIT_VALIDATION
    except DivergenceError as exc:
        logger.error("%s", exc)
        return EXIT_DIVERGENCE
    except OSError as exc:
        logger.error("I/O failure: %s", exc)
        return EXIT_IO
    except ClodError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
