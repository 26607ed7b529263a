"""Waveform, source injection, probes, spectra and slices."""

from __future__ import annotations

import math

import numpy as np
import pytest

from clod.errors import ConfigError
from clod.grid import VACUUM, FieldState, GridSpec
from clod.sources import (
    DifferentiatedGaussian,
    ProbeRecord,
    ProbeSpec,
    SourceSpec,
    dft_spectrum,
    inject,
    slice_dump,
    snap_probe,
    snap_source,
    waveform_eval,
)

TAU = 10e-9


def _make_grid() -> GridSpec:
    return GridSpec.uniform((1.0, 1.0, 1.0), 0.1)


def _make_record(dt: float = 0.5e-9, n: int = 400) -> ProbeRecord:
    rec = ProbeRecord("probe", "Ez", (0, 0, 0), (0.0, 0.0, 0.0), dt)
    rec.values.extend(waveform_eval(DifferentiatedGaussian(TAU), np.arange(n) * dt).tolist())
    return rec


class TestWaveform:
    def test_values(self):
        w = DifferentiatedGaussian(TAU, amplitude=2.0)
        assert w.t0 == pytest.approx(3 * TAU)
        assert waveform_eval(w, w.t0) == 0.0
        assert waveform_eval(w, w.t0 + TAU) == pytest.approx(2.0 * TAU * math.exp(-1.0))
        assert waveform_eval(w, w.t0 - TAU) == pytest.approx(-2.0 * TAU * math.exp(-1.0))
        assert abs(waveform_eval(w, w.t0 + 10 * TAU)) < 1e-40

    def test_array_input(self):
        out = waveform_eval(DifferentiatedGaussian(TAU), np.array([0.0, 3 * TAU]))
        assert out.shape == (2,)
        assert out[1] == 0.0

    def test_rejects_tau(self):
        with pytest.raises(ValueError):
            DifferentiatedGaussian(0.0)


class TestSources:
    def test_snaps_to_nearest_edge(self):
        src = SourceSpec("z", (0.52, 0.5, 0.5), DifferentiatedGaussian(TAU))
        snapped = snap_source(src, _make_grid())
        assert snapped.index == (5, 5, 4) or snapped.index == (5, 5, 5)
        assert snapped.distance == pytest.approx(math.hypot(0.02, 0.05))
        assert snapped.dual_area == pytest.approx(0.01)

    def test_dead_edge_rejected(self):
        grid = _make_grid()
        src = SourceSpec("x", (0.55, 0.5, 0.5), DifferentiatedGaussian(TAU), name="feed")
        live = np.ones((10, 11, 11), dtype=bool)
        live[5, 5, 5] = False
        with pytest.raises(ConfigError, match="feed"):
            snap_source(src, grid, live)

    def test_bad_component(self):
        with pytest.raises(ValueError):
            SourceSpec("w", (0.0, 0.0, 0.0), DifferentiatedGaussian(TAU))

    def test_explicit_increment(self):
        grid = _make_grid()
        w = DifferentiatedGaussian(TAU)
        snapped = snap_source(SourceSpec("y", (0.5, 0.55, 0.5), w), grid)
        state = FieldState.zeros(grid)
        dt, t = 1e-10, 25e-9
        inject(state, [snapped], t, dt, VACUUM)
        expected = dt / VACUUM.epsilon * waveform_eval(w, t + 0.5 * dt) / 0.01
        assert state["Ey"][snapped.index] == pytest.approx(expected, rel=1e-14)
        assert np.count_nonzero(state["Ey"]) == 1

    def test_split_halves_sum_to_midpoint_rule(self):
        grid = _make_grid()
        w = DifferentiatedGaussian(TAU)
        snapped = snap_source(SourceSpec("z", (0.5, 0.5, 0.55), w), grid)
        dt, t = 1e-10, 25e-9
        state = FieldState.zeros(grid)
        inject(state, [snapped], t, dt, VACUUM, substep=1)
        inject(state, [snapped], t, dt, VACUUM, substep=2)
        avg = 0.5 * (waveform_eval(w, t + 0.25 * dt) + waveform_eval(w, t + 0.75 * dt))
        assert state["Ez"][snapped.index] == pytest.approx(dt / VACUUM.epsilon * avg / 0.01, rel=1e-14)

    def test_bad_substep(self):
        with pytest.raises(ValueError):
            inject(FieldState.zeros(_make_grid()), [], 0.0, 1e-10, VACUUM, substep=3)


class TestProbes:
    def test_snap_and_sample(self):
        grid = _make_grid()
        rec = snap_probe(ProbeSpec("Hy", (0.55, 0.5, 0.55), name="p"), grid, 1e-10)
        assert rec.index == (5, 5, 5)
        assert rec.location == pytest.approx((0.55, 0.5, 0.55))
        state = FieldState.zeros(grid)
        state["Hy"][5, 5, 5] = 3.0
        rec.sample(state)
        rec.sample(FieldState.zeros(grid))
        assert rec.values == [3.0, 0.0]
        assert rec.times.tolist() == pytest.approx([0.0, 1e-10])

    def test_default_name(self):
        rec = snap_probe(ProbeSpec("Ex", (0.0, 0.0, 0.0)), _make_grid(), 1e-10)
        assert rec.name == "Ex"

    def test_bad_component(self):
        with pytest.raises(ValueError):
            ProbeSpec("Bx", (0.0, 0.0, 0.0))


class TestSpectrum:
    def test_peak_of_differentiated_gaussian(self):
        spec = dft_spectrum(_make_record(), 0.0, 100e6, 201)
        expected = 1.0 / (math.sqrt(2.0) * math.pi * TAU)
        assert expected == pytest.approx(22.5e6, rel=1e-3)
        assert abs(spec.peak_frequency - expected) <= 0.5e6
        assert spec.normalized.max() == 1.0
        assert spec.amplitudes[0] == pytest.approx(0.0, abs=1e-3 * np.abs(spec.amplitudes).max())

    def test_zero_record(self):
        rec = ProbeRecord("z", "Ez", (0, 0, 0), (0.0, 0.0, 0.0), 1e-9, [0.0] * 16)
        spec = dft_spectrum(rec, 1e6, 10e6, 4)
        assert not spec.normalized.any()

    @pytest.mark.parametrize("f_min, f_max, n_freq", [(0.0, 1e6, 1), (5e6, 1e6, 8), (0.0, 2e9, 8)])
    def test_rejects(self, f_min, f_max, n_freq):
        with pytest.raises(ConfigError):
            dft_spectrum(_make_record(), f_min, f_max, n_freq)


class TestSlices:
    def test_identity_plane(self):
        grid = _make_grid()
        state = FieldState.zeros(grid)
        state["Ez"][3, 4, 5] = 7.0
        sl = slice_dump(state, grid, 2, 0.55, "Ez", time=1e-9)
        assert sl.index == 5
        assert sl.coord == pytest.approx(0.55)
        assert sl.data.shape == (11, 11)
        assert sl.data[3, 4] == 7.0
        assert sl.spacing == (0.1, 0.1)
        sl.data[3, 4] = 0.0
        assert state["Ez"][3, 4, 5] == 7.0

    def test_log_floor(self):
        grid = _make_grid()
        state = FieldState.zeros(grid)
        state["Hx"][0, 0, 0] = -100.0
        sl = slice_dump(state, grid, 0, 0.0, "Hx", transform="log")
        assert sl.data[0, 0] == pytest.approx(2.0)
        assert sl.data[1, 1] == pytest.approx(-30.0)

    def test_rejects(self):
        grid = _make_grid()
        state = FieldState.zeros(grid)
        with pytest.raises(ConfigError):
            slice_dump(state, grid, 1, 1.5, "Ex")
        with pytest.raises(ConfigError):
            slice_dump(state, grid, 1, 0.5, "Ex", transform="sqrt")
        with pytest.raises(ConfigError):
            slice_dump(state, grid, 1, 0.5, "Dx")
