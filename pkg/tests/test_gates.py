from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holosta import units
from holosta.dynamics import QUBIT, gate_overlap, propagate_unitary, qubit_block
from holosta.errors import CompileError
from holosta.gates import (
    GateSpec,
    area_at,
    area_matched_amplitude,
    compile_nhqc_baseline,
    compile_noncyclic_gate,
    golden_section,
    minimize_area,
    pulse_area,
    reference_envelope,
    scale_to_rabi_cap,
    segment_grid,
    target_unitary,
)
from holosta.schedule import PulseSchedule, ScheduleError

thetas = st.floats(0.0, math.pi)
phis = st.floats(0.0, 2 * math.pi, exclude_max=True)


def rx(theta):
    """x rotation ``exp(+i theta sigma_x / 2)``; the axis at phi = pi/2 is -sigma_x."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, 1j * s], [1j * s, c]])


# -- target -----------------------------------------------------------------------


@given(thetas, phis)
def test_target_is_special_unitary(theta, phi):
    U = target_unitary(GateSpec(theta, phi))
    assert np.allclose(U.conj().T @ U, np.eye(2), atol=1e-14)
    assert np.linalg.det(U) == pytest.approx(1.0, abs=1e-14)


def test_target_examples():
    assert np.allclose(target_unitary(GateSpec(0.0, 1.3)), np.eye(2))
    assert np.allclose(target_unitary(GateSpec(math.pi, 0.0)), [[0, -1], [1, 0]])
    # R[theta, pi/2] is an x rotation up to global phase
    U = target_unitary(GateSpec(math.pi / 2, math.pi / 2))
    assert gate_overlap(U, rx(math.pi / 2)) == pytest.approx(1.0, abs=1e-14)


def test_gatespec_validation():
    with pytest.raises(ValueError):
        GateSpec(-0.1)
    with pytest.raises(ValueError):
        GateSpec(3.5)
    assert GateSpec(1.0, 2 * math.pi + 0.5).phi == pytest.approx(0.5)
    assert GateSpec(1.0, -0.5).phi == pytest.approx(2 * math.pi - 0.5)


# -- compilation --------------------------------------------------------------------


def test_segment_grid_hits_midpoint():
    t = segment_grid(29.5, 4000)
    assert len(t) == 8001 and t[4000] == 29.5 / 2 and t[-1] == 29.5


def test_compile_structure(reference_schedule):
    s = reference_schedule
    assert s.phi_segment2 == pytest.approx((s.phi_segment1 + math.pi) % (2 * math.pi))
    n = s.n_per_segment
    for k in (0, n, 2 * n):
        assert abs(s.omega0[k]) <= 1e-9 and abs(s.omega1[k]) <= 1e-9
    assert s.dt == pytest.approx(29.5 / 8000)


def test_reference_area_is_pi(reference_schedule):
    assert pulse_area(reference_schedule) == pytest.approx(math.pi, rel=0.01)


def test_theta_zero_gives_identity():
    s = compile_noncyclic_gate(GateSpec(0.0, 0.0), 0.3, 30.0)
    assert not np.any(s.omega1)
    gd = s.source.params_at(7.0).gamma_dot
    assert s.couplings_at(7.0)[0] == pytest.approx(2 * gd, rel=1e-12)
    U = propagate_unitary(s)
    assert gate_overlap(qubit_block(U), np.eye(2)) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=8, deadline=None)
@given(thetas, phis, st.floats(0.15, 1.2))
def test_compiled_gate_matches_target(theta, phi, A):
    spec = GateSpec(theta, phi)
    U = propagate_unitary(compile_noncyclic_gate(spec, A))
    assert gate_overlap(spec.unitary(), qubit_block(U)) >= 1 - 1e-6
    assert np.sum(np.abs(U[1, QUBIT]) ** 2) <= 1e-6


@pytest.mark.parametrize("A", [0.0, -0.1, math.pi, 4.0])
def test_compile_rejects_bad_amplitude(A):
    with pytest.raises(CompileError):
        compile_noncyclic_gate(GateSpec(1.0), A)


def test_compile_rejects_incompatible_dt():
    with pytest.raises(CompileError):
        compile_noncyclic_gate(GateSpec(1.0), 0.5, 29.5, dt=0.7)
    s = compile_noncyclic_gate(GateSpec(1.0), 0.5, 29.5, dt=29.5 / 400)
    assert s.n_per_segment == 200


# -- area ------------------------------------------------------------------------------


def test_area_of_zero_schedule():
    assert pulse_area(PulseSchedule.zeros(10.0)) == 0.0


def test_area_grid_convergence():
    coarse = area_at(math.pi / 2, 0.46, 29.5)
    fine = area_at(math.pi / 2, 0.46, 29.5, dt=29.5 / 16000)
    assert abs(coarse - fine) / fine < 1e-6


def test_area_independent_of_T():
    assert area_at(1.0, 0.5, 10.0) == pytest.approx(area_at(1.0, 0.5, 50.0), rel=1e-12)


def test_area_nonnegative_small_theta():
    A = np.linspace(0.05, 1.5, 12)
    S = [area_at(1e-3, a) for a in A]
    assert min(S) >= 0
    # with beta frozen S = int |gamma_dot| dt: gamma runs 0 -> A -> 0 twice
    assert S[-1] == pytest.approx(4 * A[-1], rel=1e-2)


def test_golden_section_quadratic():
    x, fx = golden_section(lambda x: (x - 0.3) ** 2 + 1, 0.0, 1.0, tol=1e-8)
    assert x == pytest.approx(0.3, abs=1e-7)
    assert fx == pytest.approx(1.0)


def test_minimize_area_beats_grid():
    best = minimize_area(math.pi / 2)
    assert best.unimodal
    assert best.S <= np.nanmin(best.grid_S) + 1e-12


def test_minimize_area_warns_when_not_unimodal(monkeypatch):
    import holosta.gates as g

    bumpy = lambda theta, A, T=None, dt=None: math.cos(12 * A) + 0.1 * A  # noqa: E731
    monkeypatch.setattr(g, "area_at", bumpy)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        best = g.minimize_area(1.0)
    assert not best.unimodal
    assert any("local minima" in str(x.message) for x in w)


def test_area_matched_amplitude_root():
    A = area_matched_amplitude(math.pi / 4, math.pi, branch="below")
    assert area_at(math.pi / 4, A) == pytest.approx(math.pi, abs=1e-8)
    A_up = area_matched_amplitude(math.pi / 4, math.pi, branch="above")
    assert A_up > A


# -- rabi cap -------------------------------------------------------------------------


def test_cap_scaling_doubles_T():
    s = compile_noncyclic_gate(GateSpec(1.0), 0.5, 10.0)
    s = scale_to_rabi_cap(s, 2 * math.pi * 0.04)
    out = scale_to_rabi_cap(s, 2 * math.pi * 0.02)
    assert out.T == pytest.approx(2 * s.T, rel=1e-12)
    assert pulse_area(out) == pytest.approx(pulse_area(s), abs=1e-10)
    assert scale_to_rabi_cap(out, 2 * math.pi * 0.02).T == pytest.approx(out.T, rel=1e-12)


def test_cap_area_invariance_random():
    rng = np.random.default_rng(5)
    for _ in range(50):
        s = compile_noncyclic_gate(
            GateSpec(rng.uniform(0.1, math.pi), rng.uniform(0, 6)), rng.uniform(0.1, 1.2), 20.0,
            dt=20.0 / 400,
        )
        cap = rng.uniform(0.01, 1.0)
        out = scale_to_rabi_cap(s, cap, norm=rng.choice(["element", "channel", "total"]))
        assert pulse_area(out) == pytest.approx(pulse_area(s), abs=1e-10)


@pytest.mark.parametrize("norm", ["element", "channel", "total"])
def test_cap_is_respected(norm):
    s = scale_to_rabi_cap(compile_noncyclic_gate(GateSpec(1.0), 0.5), units.RABI_CAP, norm)
    assert s.peak_coupling(norm) == pytest.approx(units.RABI_CAP, rel=1e-12)
    assert s.metadata["cap_norm"] == norm


def test_cap_rejects_zero_schedule():
    with pytest.raises(ScheduleError):
        scale_to_rabi_cap(PulseSchedule.zeros(1.0))


def test_reference_duration_at_cap(reference_schedule):
    # the per-channel cap puts the A = 0.46 gate at about 29.5 ns
    out = scale_to_rabi_cap(reference_schedule)
    assert out.T == pytest.approx(29.5, abs=0.1)


# -- baseline -------------------------------------------------------------------------------


@pytest.mark.parametrize(
    "theta, phi", [(math.pi / 2, math.pi / 2), (math.pi / 4, math.pi / 2), (math.pi / 2, 0.0), (2.0, 4.0)]
)
def test_nhqc_gate_and_area(theta, phi):
    spec = GateSpec(theta, phi)
    s = compile_nhqc_baseline(spec)
    assert pulse_area(s) == pytest.approx(math.pi, abs=1e-6)
    U = propagate_unitary(s)
    assert gate_overlap(spec.unitary(), qubit_block(U)) >= 1 - 1e-6
    assert np.allclose(s.omega0, s.omega1)


def test_nhqc_rx_correspondence():
    U = propagate_unitary(compile_nhqc_baseline(GateSpec(math.pi / 2, math.pi / 2)))
    assert gate_overlap(qubit_block(U), rx(math.pi / 2)) >= 1 - 1e-6


def test_nhqc_uses_reference_envelope():
    t, env = reference_envelope()
    s = compile_nhqc_baseline(GateSpec(1.0, 0.0))
    ratio = s.omega0[env > 1e-3 * env.max()] / env[env > 1e-3 * env.max()]
    n = s.n_per_segment
    assert np.allclose(ratio[: n // 2], ratio[0])


def test_nhqc_rejects_bad_envelope():
    t = np.linspace(0, 1, 9)
    with pytest.raises(CompileError):
        compile_nhqc_baseline(GateSpec(1.0), (t, np.zeros(9)))
    with pytest.raises(CompileError):
        compile_nhqc_baseline(GateSpec(1.0), (t, -np.ones(9)))
