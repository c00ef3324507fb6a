from __future__ import annotations

import math

import numpy as np
import pytest

from holosta import units
from holosta.dynamics import NoiseModel
from holosta.gates import GateSpec, compile_nhqc_baseline, compile_noncyclic_gate, pulse_area
from holosta.sweeps import (
    SweepResult,
    area_vs_A,
    compare_schemes,
    default_theta_grid,
    default_workers,
    grid_statistics,
    population_trace,
    robustness_amplitude,
    robustness_grid,
    robustness_schedule,
    smin_vs_theta,
)

SPEC = GateSpec(math.pi / 2, math.pi / 2)


@pytest.fixture(scope="module")
def coarse():
    # 500 steps per segment: enough for relative comparisons, fast to evolve
    return compile_noncyclic_gate(SPEC, 0.46, 29.5, dt=29.5 / 1000)


# -- results ------------------------------------------------------------------------


def test_sweep_result_shape_check():
    with pytest.raises(ValueError):
        SweepResult({"a": [0, 1], "b": [0, 1, 2]}, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        SweepResult({"a": [0, 1]}, [0.5, 1.2], {"quantity": "fidelity"})
    r = SweepResult({"a": [0, 1]}, [0.5, np.nan], {"quantity": "fidelity"})
    assert r.values.shape == (2,)


def test_default_workers_env(monkeypatch):
    monkeypatch.delenv("HOLOSTA_WORKERS", raising=False)
    assert default_workers() == 1
    monkeypatch.setenv("HOLOSTA_WORKERS", "3")
    assert default_workers() == 3


# -- area sweeps ----------------------------------------------------------------------


def test_area_vs_A_records_failures():
    res = area_vs_A(math.pi / 2, 29.5, [0.3, 0.46, 3.5])
    assert np.isnan(res.values[2]) and np.all(np.isfinite(res.values[:2]))
    assert res.metadata["failures"][0]["A"] == 3.5


def test_area_curve_refinement():
    coarse_grid = np.linspace(0.3, 0.8, 11)
    fine_grid = np.linspace(0.3, 0.8, 21)
    a = coarse_grid[np.argmin(area_vs_A(math.pi / 2, 29.5, coarse_grid).values)]
    b = fine_grid[np.argmin(area_vs_A(math.pi / 2, 29.5, fine_grid).values)]
    assert abs(a - b) < coarse_grid[1] - coarse_grid[0]


def test_theta_grid():
    g = default_theta_grid(33)
    assert len(g) == 33 and g[0] > 0 and g[-1] == math.pi


def test_smin_vs_theta_small():
    res = smin_vs_theta([math.pi / 4, math.pi / 2])
    assert res.extra["A_star"][0] == pytest.approx(0.38, abs=0.02)
    assert res.values[1] <= math.pi
    assert res.metadata["theta_mean_smin"] == pytest.approx(res.values.mean())
    with pytest.raises(ValueError):
        smin_vs_theta([0.0, 1.0])


# -- robustness schedules --------------------------------------------------------------------


def test_robustness_schedules_have_area_pi():
    for theta in (math.pi / 2, math.pi / 4):
        for scheme in ("noncyclic", "nhqc"):
            s = robustness_schedule(GateSpec(theta, 0.0), scheme)
            assert pulse_area(s) == pytest.approx(math.pi, rel=0.01)
            assert s.peak_coupling("element") == pytest.approx(units.RABI_CAP)
    assert robustness_amplitude(math.pi / 2) == 0.46
    with pytest.raises(ValueError):
        robustness_schedule(SPEC, "cyclic")


# -- robustness grids --------------------------------------------------------------------------


def test_zero_error_noiseless_fidelity(coarse):
    res = robustness_grid(SPEC, "noncyclic", [0.0], [0.0], NoiseModel(), schedule=coarse)
    assert res.values[0, 0] >= 1 - 1e-6
    nh = compile_nhqc_baseline(SPEC)
    res = robustness_grid(SPEC, "nhqc", [0.0], [0.0], NoiseModel(), schedule=nh)
    assert res.values[0, 0] >= 1 - 1e-6


def test_parallel_equals_serial(coarse):
    eps = np.linspace(-0.2, 0.2, 9)
    a = robustness_grid(SPEC, "noncyclic", eps, eps[:5], schedule=coarse, workers=1)
    b = robustness_grid(SPEC, "noncyclic", eps, eps[:5], schedule=coarse, workers=3)
    assert np.array_equal(a.values, b.values)
    assert a.metadata == b.metadata


def test_grid_is_deterministic_and_cell_reproducible(coarse):
    eps = np.linspace(-0.2, 0.2, 5)
    a = robustness_grid(SPEC, "noncyclic", eps, eps, schedule=coarse)
    b = robustness_grid(SPEC, "noncyclic", eps, eps, schedule=coarse)
    assert np.array_equal(a.values, b.values)
    # any single cell can be re-run from the metadata alone
    one = robustness_grid(SPEC, "noncyclic", eps[3:4], eps[1:2], schedule=coarse)
    assert one.values[0, 0] == pytest.approx(a.values[3, 1], abs=1e-14)
    for key in ("gate", "scheme", "noise", "A", "T", "dt", "metric", "n_states", "code_version"):
        assert key in a.metadata
    assert 0 <= a.values.min() and a.values.max() <= 1


def test_state_metric(coarse):
    res = robustness_grid(SPEC, "noncyclic", [0.0, 0.1], [0.0], NoiseModel(), "state", schedule=coarse)
    assert res.values[0, 0] >= 1 - 1e-6 and res.values[1, 0] < res.values[0, 0]


def test_rejects_empty_grid(coarse):
    with pytest.raises(ValueError):
        robustness_grid(SPEC, "noncyclic", [], [0.0], schedule=coarse)


def test_statistics_and_comparison():
    axes = {"eps0": [-1, 0, 1], "eps1": [-1, 0, 1]}
    a = SweepResult(axes, np.full((3, 3), 0.9), {"quantity": "fidelity"})
    b_vals = np.full((3, 3), 0.8)
    b_vals[0, 0] = 0.95
    b = SweepResult(axes, b_vals, {"quantity": "fidelity"})
    st = grid_statistics(b)
    assert st["center"] == 0.8 and st["min"] == 0.8
    # corner cells carry a quarter of the interior trapezoid weight
    assert st["area_mean"] == pytest.approx(0.8 + 0.15 / 16)
    cmp = compare_schemes(a, b)
    assert cmp["win_fraction"] == pytest.approx(8 / 9)
    assert cmp["mean"] > cmp["baseline_mean"]


# -- population traces ------------------------------------------------------------------------------


def test_population_trace(coarse):
    tr = population_trace(SPEC, (1.0, 0.0), NoiseModel.reference(), schedule=coarse)
    total = tr.p0 + tr.pe + tr.p1
    assert np.max(np.abs(total - 1)) <= 1e-8
    assert tr.fidelity[0] == pytest.approx(0.5)
    assert tr.fidelity[-1] == pytest.approx(0.9991, abs=1e-3)
    assert set(tr.columns()) == {"t", "P0", "Pe", "P1", "F"}
