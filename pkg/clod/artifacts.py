"""Run directory layout and the file writers/readers for every artifact."""

import csv
import datetime
import logging
import shutil
from pathlib import Path

import numpy as np

from clod.sources import ProbeRecord, SliceResult, SpectrumResult

logger = logging.getLogger(__name__)

FAILURE_MARKER = "FAILED"


def make_run_dir(base: str | Path, name: str, explicit: bool = False) -> Path:
    """``base`` itself when given explicitly, else ``base/<name>-<timestamp>``."""
    base = Path(base)
    if explicit:
        path = base
    else:
        stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S")
        path = base / f"{name}-{stamp}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def copy_config(src: Path | None, run_dir: Path) -> None:
    if src is not None:
        shutil.copyfile(src, run_dir / Path(src).name)


def _fmt(v: float) -> str:
    return repr(float(v))


# ── Probes ───────────────────────────────────────────────

def write_probe_csv(rec: ProbeRecord, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# component {rec.component}\n")
        fh.write("# location " + " ".join(_fmt(v) for v in rec.location) + "\n")
        fh.write(f"# dt {_fmt(rec.dt)}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "value"])
        for t, v in zip(rec.times, rec.values):
            writer.writerow([_fmt(t), _fmt(v)])
    return path


def read_probe_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    rows = [line for line in Path(path).read_text().splitlines() if line and not line.startswith("#")]
    data = np.array([[float(x) for x in row.split(",")] for row in rows[1:]]).reshape(-1, 2)
    return data[:, 0], data[:, 1]


# ── Slices ───────────────────────────────────────────────

def write_slice(sl: SliceResult, path: str | Path, fmt: str = "binary") -> Path:
    """Text header then little-endian float64 samples, first axis fastest; or plain CSV."""
    path = Path(path)
    plane = "yz" if sl.axis == 0 else "xz" if sl.axis == 1 else "xy"
    header = [
        "# clod field slice v1",
        f"component {sl.component}",
        f"plane {plane} {'xyz'[sl.axis]} {_fmt(sl.coord)} index {sl.index}",
        f"dims {sl.data.shape[0]} {sl.data.shape[1]}",
        f"spacing {_fmt(sl.spacing[0])} {_fmt(sl.spacing[1])}",
        f"transform {sl.transform}",
        f"time {_fmt(sl.time) if sl.time is not None else 'none'}",
    ]
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            fh.write("\n".join("# " + h if not h.startswith("#") else h for h in header) + "\n")
            writer = csv.writer(fh)
            for row in sl.data.T:
                writer.writerow([_fmt(v) for v in row])
        return path
    with path.open("wb") as fh:
        fh.write(("\n".join(header) + "\nend_header\n").encode("ascii"))
        fh.write(np.asarray(sl.data, dtype="<f8").ravel(order="F").tobytes())
    return path


def read_slice(path: str | Path) -> SliceResult:
    raw = Path(path).read_bytes()
    marker = b"end_header\n"
    cut = raw.index(marker) + len(marker)
    fields = {}
    for line in raw[:cut].decode("ascii").splitlines():
        parts = line.split()
        if parts and not parts[0].startswith("#"):
            fields[parts[0]] = parts[1:]
    n0, n1 = (int(v) for v in fields["dims"])
    data = np.frombuffer(raw[cut:], dtype="<f8", count=n0 * n1).reshape((n0, n1), order="F")
    axis = "xyz".index(fields["plane"][1])
    time = None if fields["time"][0] == "none" else float(fields["time"][0])
    return SliceResult(
        component=fields["component"][0],
        axis=axis,
        index=int(fields["plane"][4]),
        coord=float(fields["plane"][2]),
        transform=fields["transform"][0],
        spacing=(float(fields["spacing"][0]), float(fields["spacing"][1])),
        data=np.array(data),
        time=time,
    )


def slice_filename(sl: SliceResult, fmt: str) -> str:
    t = "t0" if not sl.time else f"t{sl.time * 1e9:.3f}ns"
    ext = "csv" if fmt == "csv" else "bin"
    return f"slice_{sl.component}_{'xyz'[sl.axis]}{sl.index}_{t}.{ext}"


# ── Tables ───────────────────────────────────────────────

STABILITY_COLUMNS = ["scheme", "mesh", "cfln", "n_tot", "max_modulus", "verdict", "method"]


def write_stability_csv(rows, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STABILITY_COLUMNS)
        for row in rows:
            writer.writerow([row.scheme, _fmt(row.mesh), _fmt(row.cfln), row.n_tot,
                             _fmt(row.max_modulus), row.verdict, row.method])
    return path


def write_eigenvalues_csv(eigenvalues: np.ndarray, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re", "im"])
        for lam in eigenvalues:
            writer.writerow([_fmt(lam.real), _fmt(lam.imag)])
    return path


def write_spectrum_csv(spec: SpectrumResult, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["f", "magnitude", "normalized", "re", "im"])
        for f, a, m in zip(spec.freqs, spec.amplitudes, spec.normalized):
            writer.writerow([_fmt(f), _fmt(abs(a)), _fmt(m), _fmt(a.real), _fmt(a.imag)])
    return path


def write_mask_csv(mask: np.ndarray, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(mask, dtype=int).T:
            writer.writerow(row.tolist())
    return path


# ── Summary ──────────────────────────────────────────────

def write_summary(lines: dict, path: str | Path) -> Path:
    path = Path(path)
    width = max((len(k) for k in lines), default=0)
    with path.open("a") as fh:
        for key, value in lines.items():
            fh.write(f"{key:<{width}}  {value}\n")
        fh.write("\n")
    return path


def run_summary(result) -> dict:
    tb = result.timebase
    out = {
        "scheme": result.scheme.value,
        "status": "diverged" if result.diverged else "ok",
        "dt_s": _fmt(tb.dt),
        "cfln": _fmt(tb.cfln),
        "steps_planned": tb.n_steps,
        "steps_done": result.steps_done,
        "wall_time_s": f"{result.wall_time:.3f}",
        "seconds_per_step": f"{result.seconds_per_step:.6e}",
    }
    if result.steps_done:
        out["max_abs_e"] = f"{result.peak_e:.6e}"
        out["max_abs_h"] = f"{result.peak_h:.6e}"
    if result.reports:
        last = result.reports[-1]
        out["final_abs_e"] = f"{last.max_e:.6e}"
        out["final_abs_h"] = f"{last.max_h:.6e}"
    if not result.diverged:
        out["field_energy_j"] = f"{result.energy:.6e}"
    for key, value in result.map_summary.items():
        out[key] = value
    return out


def write_failure_marker(run_dir: Path, message: str) -> Path:
    path = run_dir / FAILURE_MARKER
    path.write_text(message + "\n")
    return path


def write_run_artifacts(result, run_dir: Path, slice_format: str = "binary", prefix: str = "") -> list[Path]:
    """Probe CSVs, slices and a summary block for one scheme's run."""
    written = []
    for rec in result.probes:
        written.append(write_probe_csv(rec, run_dir / f"{prefix}probe_{rec.name}.csv"))
    for sl in result.slices:
        written.append(write_slice(sl, run_dir / f"{prefix}{slice_filename(sl, slice_format)}", slice_format))
    written.append(write_summary(run_summary(result), run_dir / "summary.txt"))
    logger.info("Wrote %d artifacts to %s", len(written), run_dir)
    return written
