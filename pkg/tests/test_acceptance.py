"""Long end-to-end runs on the bundled cavity scenarios.

All tests here are marked slow; most take minutes, the CFLN 1 cavity run takes hours.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from clod.commands.scenarios import resolve_scenario
from clod.engines.runner import SchemeKind, run
from clod.errors import DivergenceError
from clod.scenario import parse_config
from clod.sources import dft_spectrum

pytestmark = pytest.mark.slow

SMALL_CAVITY = """
name = "small_cavity"

[grid]
size = [1.0, 1.0, 1.0]
spacing = {spacing}

[time]
cfln = 1.0
duration = 300.0e-9

[scheme]
kind = "{scheme}"

[[shapes]]
type = "cylinder"
center = [0.5, 0.5]
radius = 0.25
zmin = 0.25
zmax = 0.75

[[sources]]
component = "z"
location = [0.25, 0.25, 0.5]
tau = 1.0e-9

[[probes]]
name = "hy"
component = "Hy"
location = [0.75, 0.75, 0.5]
"""


def _peak(tmp_path: Path, scheme: str, spacing: float) -> float:
    path = tmp_path / f"{scheme}_{spacing}.cfg"
    path.write_text(SMALL_CAVITY.format(scheme=scheme, spacing=spacing))
    result = run(parse_config(path), progress=False)
    return dft_spectrum(result.probes[0], 100e6, 400e6, 3001).peak_frequency


@pytest.mark.parametrize("cfln", [1.0, 4.0, 8.0, 64.0])
def test_clod_run_stays_bounded(cfln):
    cfg = parse_config(resolve_scenario("stability_timedomain")).with_overrides(cfln=cfln)
    result = run(cfg, progress=False)
    assert result.steps_done == pytest.approx(5841 * 64.0 / cfln, rel=1.5e-3)
    assert result.timebase.time(result.steps_done) == pytest.approx(36e-6, rel=1e-3)
    history = result.max_e_history
    cut = int(0.9 * len(history))
    assert np.isfinite(history).all()
    assert history[cut:].max() <= history[:cut].max()


def test_cfdtd_blows_up_where_clod_does_not():
    cfg = parse_config(resolve_scenario("cfdtd_blowup"))
    with pytest.raises(DivergenceError) as info:
        run(cfg, progress=False)
    assert info.value.time < 1.8e-6
    assert info.value.artifacts.diverged

    result = run(cfg.with_overrides(cfln=1.0, scheme="CLOD"), progress=False)
    assert not result.diverged
    assert result.timebase.time(result.steps_done) == pytest.approx(1.8e-6, rel=1e-3)


def test_conformal_resonance_closer_to_reference(tmp_path):
    reference = _peak(tmp_path, "LOD", 0.0125)
    staircase = _peak(tmp_path, "LOD", 0.05)
    conformal = _peak(tmp_path, "CLOD", 0.05)
    assert abs(conformal - reference) < abs(staircase - reference)
    assert abs(conformal - reference) <= 0.4 * abs(staircase - reference)


def test_schemes_share_the_source_timing():
    cfg = parse_config(resolve_scenario("free_space"))
    lod = run(cfg, SchemeKind.LOD, progress=False)
    clod = run(cfg, SchemeKind.CLOD, progress=False)
    assert np.allclose(lod.probes[0].as_array(), clod.probes[0].as_array(), rtol=0, atol=1e-14 * max(
        np.abs(lod.probes[0].as_array()).max(), 1e-300))
