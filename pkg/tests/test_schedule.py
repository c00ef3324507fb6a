from __future__ import annotations

import math

import numpy as np
import pytest

from holosta.schedule import PulseSchedule, ScheduleError


def small(n=8, T=10.0):
    t = np.linspace(0, T, 2 * n + 1)
    o0 = np.sin(math.pi * t / T)
    o1 = np.cos(math.pi * t / T) ** 2
    return PulseSchedule(t, o0, o1, 0.3, 0.3 + math.pi)


def test_geometry():
    s = small()
    assert s.T == 10.0
    assert s.dt == pytest.approx(10.0 / 16)
    assert s.n_per_segment == 8
    assert s.segment_of(5.0) == 1 and s.segment_of(5.01) == 2
    assert s.phases_at(7.0) == (0.0, 0.3 + math.pi)


def test_arrays_are_read_only():
    s = small()
    with pytest.raises(ValueError):
        s.omega0[0] = 1.0


@pytest.mark.parametrize(
    "t",
    [
        np.linspace(0, 1, 4),  # even length
        np.array([0, 1, 2]),  # too short
        np.array([0, 1, 3, 4, 5]),  # nonuniform
        np.array([0, 1, 2, 3, np.nan]),
    ],
)
def test_rejects_bad_grids(t):
    z = np.zeros(len(t))
    with pytest.raises(ScheduleError):
        PulseSchedule(t, z, z, 0.0, math.pi)


def test_rejects_nonfinite_couplings():
    t = np.linspace(0, 1, 5)
    with pytest.raises(ScheduleError):
        PulseSchedule(t, np.array([0, 1, np.inf, 0, 0]), np.zeros(5), 0.0, math.pi)


def test_couplings_at_grid_and_off_grid():
    s = small()
    assert s.couplings_at(s.t[3]) == (s.omega0[3], s.omega1[3])
    with pytest.raises(ScheduleError):
        s.couplings_at(0.5 * (s.t[3] + s.t[4]))


def test_peak_norms():
    t = np.linspace(0, 1, 5)
    s = PulseSchedule(t, np.array([0, 3.0, 0, 0, 0]), np.array([0, 4.0, 0, 1, 0]), 0, 0)
    assert s.peak_coupling("element") == 2.0
    assert s.peak_coupling("channel") == 4.0
    assert s.peak_coupling("total") == 5.0
    with pytest.raises(ValueError):
        s.peak_coupling("bogus")


def test_rescale_preserves_products():
    s = small()
    r = s.rescaled(2.5)
    assert r.T == pytest.approx(25.0)
    assert np.allclose(r.omega0 * r.dt, s.omega0 * s.dt)
    assert s.rescaled(1.0) is s
    with pytest.raises(ScheduleError):
        s.rescaled(0.0)


def test_rabi_errors_scale_channels():
    s = small()
    e = s.with_rabi_errors(0.1, -0.2)
    assert np.allclose(e.omega0, 1.1 * s.omega0)
    assert np.allclose(e.omega1, 0.8 * s.omega1)


def test_hamiltonian_error_scaling_matches_rescaled_schedule():
    s = small()
    t = s.t[5]
    assert np.allclose(s.hamiltonian_at(t, 0.1, 0.1), 1.1 * s.hamiltonian_at(t))


def test_same_samples():
    s = small()
    assert s.same_samples(small())
    assert not s.same_samples(s.with_rabi_errors(1e-3, 0))
    assert not s.same_samples(PulseSchedule.zeros(10.0))


def test_zero_schedule():
    z = PulseSchedule.zeros(5.0)
    assert z.T == 5.0 and not np.any(z.omega0)
