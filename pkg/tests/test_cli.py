"""Command line entry point and exit codes."""

from __future__ import annotations

from pathlib import Path

import pytest

from clod.artifacts import FAILURE_MARKER, read_probe_csv
from clod.commands.mesh import parse_plane
from clod.errors import EXIT_DIVERGENCE, EXIT_OK, EXIT_VALIDATION, ConfigError
from clod.main import main

SMALL = """
name = "small"

[grid]
size = [1.0, 1.0, 1.0]
spacing = 0.25

[time]
cfln = {cfln}
n_steps = {steps}

[scheme]
kind = "{scheme}"

[[shapes]]
type = "sphere"
center = [0.5, 0.5, 0.5]
radius = 0.2

[[sources]]
component = "z"
location = [0.25, 0.25, 0.5]
tau = 1.0e-9

[[probes]]
name = "ez"
component = "Ez"
location = [0.75, 0.75, 0.5]

[[slices]]
component = "Ez"
z = 0.5
transform = "log"
times = [0.0]
"""


def _write_cfg(tmp_path: Path, scheme: str = "CLOD", cfln: float = 4.0, steps: int = 20) -> Path:
    path = tmp_path / "small.cfg"
    path.write_text(SMALL.format(scheme=scheme, cfln=cfln, steps=steps))
    return path


class TestRun:
    def test_run(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--config", str(_write_cfg(tmp_path)), "--out", str(out)]) == EXIT_OK
        t, v = read_probe_csv(out / "probe_ez.csv")
        assert len(t) == 21
        assert (out / "summary.txt").exists()
        assert (out / "small.cfg").exists()
        assert list(out.glob("slice_Ez_z*.bin"))

    def test_scheme_override(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = str(_write_cfg(tmp_path))
        assert main(["run", "--config", cfg, "--out", str(out), "--scheme", "fdtd", "--cfln", "0.9"]) == EXIT_OK
        assert "FDTD" in capsys.readouterr().out

    def test_divergence_exit(self, tmp_path):
        out = tmp_path / "out"
        cfg = _write_cfg(tmp_path, scheme="FDTD", cfln=1.5, steps=2000)
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_DIVERGENCE
        assert (out / FAILURE_MARKER).exists()
        assert (out / "probe_ez.csv").exists()

    def test_validation_exit(self, tmp_path):
        cfg = _write_cfg(tmp_path, cfln=0.0)
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")]) == EXIT_VALIDATION

    def test_bad_override(self, tmp_path):
        cfg = _write_cfg(tmp_path)
        assert main(["run", "--config", str(cfg), "--cfln", "-1"]) == EXIT_VALIDATION


class TestOtherCommands:
    def test_scenarios(self, capsys):
        assert main(["scenarios"]) == EXIT_OK
        listing = capsys.readouterr().out
        assert "cavity_cylinder" in listing and "missile_desk" in listing

    def test_stability(self, tmp_path):
        out = tmp_path / "out"
        cfg = str(_write_cfg(tmp_path))
        code = main(["stability", "--config", cfg, "--out", str(out), "--meshes", "0.5", "--cflns", "1,8",
                     "--dump-spectra"])
        assert code == EXIT_OK
        lines = (out / "stability.csv").read_text().splitlines()
        assert len(lines) == 3
        assert all(line.endswith("stable,dense") for line in lines[1:])
        assert len(list(out.glob("eigs_CLOD_*.csv"))) == 2

    def test_mesh_export(self, tmp_path):
        out = tmp_path / "out"
        code = main(["mesh-export", "--config", str(_write_cfg(tmp_path)), "--out", str(out), "--plane", "z=0.5"])
        assert code == EXIT_OK
        assert (out / "coefficients.bin").exists()
        assert (out / "partial_z0.5.csv").exists()

    def test_parse_plane(self):
        assert parse_plane("y=0.25") == (1, 0.25)
        with pytest.raises(ConfigError):
            parse_plane("w=1")
        with pytest.raises(ConfigError):
            parse_plane("z=abc")
