import logging
from pathlib import Path

from clod.artifacts import (
    copy_config,
    make_run_dir,
    run_summary,
    write_failure_marker,
    write_run_artifacts,
    write_spectrum_csv,
)
from clod.config import config
from clod.engines.runner import run
from clod.errors import EXIT_DIVERGENCE, EXIT_OK, DivergenceError
from clod.scenario import SimulationConfig
from clod.sources import dft_spectrum

logger = logging.getLogger(__name__)


def run_dir_for(cfg: SimulationConfig, out: str | None) -> Path:
    if out:
        return make_run_dir(out, cfg.name, explicit=True)
    return make_run_dir(cfg.output_dir or config.output_dir, cfg.name)


def cmd_run(cfg: SimulationConfig, out: str | None = None) -> int:
    run_dir = run_dir_for(cfg, out)
    copy_config(cfg.path, run_dir)
    multi = len(cfg.schemes) > 1
    status = EXIT_OK
    for scheme in cfg.schemes:
        prefix = f"{scheme.value.lower()}_" if multi else ""
        try:
            result = run(cfg, scheme)
        except DivergenceError as exc:
            if exc.artifacts is not None:
                write_run_artifacts(exc.artifacts, run_dir, cfg.slice_format, prefix)
            write_failure_marker(run_dir, f"{scheme.value}: {exc}")
            print(f"{scheme.value}: {exc}")
            status = EXIT_DIVERGENCE
            continue
        write_run_artifacts(result, run_dir, cfg.slice_format, prefix)
        if cfg.spectrum is not None:
            rec = next(p for p in result.probes if p.name == cfg.spectrum.probe)
            spec = dft_spectrum(rec, cfg.spectrum.f_min, cfg.spectrum.f_max, cfg.spectrum.n_freq)
            write_spectrum_csv(spec, run_dir / f"{prefix}spectrum_{rec.name}.csv")
            logger.info("%s spectral peak of %s at %.6e Hz", scheme.value, rec.name, spec.peak_frequency)
        summary = run_summary(result)
        print(f"{scheme.value}: {summary['steps_done']} steps, dt {summary['dt_s']} s, "
              f"wall {summary['wall_time_s']} s, max |E| {summary.get('max_abs_e', '0')}, "
              f"max |H| {summary.get('max_abs_h', '0')}")
    print(f"artifacts in {run_dir}")
    return status
