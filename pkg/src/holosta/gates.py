"""Gate compilation: noncyclic two-segment schedules, pulse area and its
minimization over the profile amplitude, Rabi-cap rescaling, and the
single-loop baseline used for comparison.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, optimize

from . import units
from .dynamics import QUBIT, gate_overlap, propagate_unitary, qubit_block
from .errors import CompileError
from .invariant import NoncyclicShape, SingularityError
from .schedule import PulseSchedule, ScheduleError

__all__ = [
    "GateSpec",
    "AreaMinimum",
    "target_unitary",
    "segment_grid",
    "compile_noncyclic_gate",
    "pulse_area",
    "area_at",
    "golden_section",
    "minimize_area",
    "area_matched_amplitude",
    "scale_to_rabi_cap",
    "reference_envelope",
    "compile_nhqc_baseline",
]


@dataclass(frozen=True)
class GateSpec:
    """Rotation by ``theta`` about the axis ``cos(phi) Y - sin(phi) X``."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi + 1e-12:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        object.__setattr__(self, "phi", math.fmod(self.phi, 2 * math.pi) % (2 * math.pi))

    def unitary(self) -> np.ndarray:
        return target_unitary(self)

    def as_dict(self) -> dict:
        return {"theta": self.theta, "phi": self.phi}


def target_unitary(spec: GateSpec) -> np.ndarray:
    """2x2 target over ``(|0>, |1>)``; determinant 1."""
    c = math.cos(spec.theta / 2)
    s = math.sin(spec.theta / 2)
    e = np.exp(1j * spec.phi)
    return np.array([[c, -s / e], [s * e, c]], dtype=complex)


def segment_grid(T: float, n: int) -> np.ndarray:
    """Uniform grid over ``[0, T]`` with ``2n`` intervals and ``T/2`` hit exactly."""
    half = 0.5 * T
    return np.concatenate([np.linspace(0.0, half, n + 1), np.linspace(half, T, n + 1)[1:]])


def _steps_for(T: float, dt: float | None) -> int:
    if dt is None:
        return units.STEPS_PER_SEGMENT
    ratio = 0.5 * T / dt
    n = int(round(ratio))
    if n < 2 or abs(ratio - n) > 1e-9 * ratio or n % 2:
        raise CompileError(f"dt={dt} must divide T/2={0.5 * T} into an even number of steps")
    return n


def compile_noncyclic_gate(
    spec: GateSpec,
    A: float,
    T: float = units.REFERENCE_T,
    dt: float | None = None,
) -> PulseSchedule:
    """Sample the inverse-engineered couplings of both segments.

    Segment 2 runs at drive phase ``phi + pi``. ``dt`` defaults to
    ``T / (2 * STEPS_PER_SEGMENT)``.
    """
    if not A > 0 or not T > 0:
        raise CompileError(f"A and T must be positive (A={A}, T={T})")
    if A >= math.pi:
        # gamma would cross a multiple of pi inside the segment
        raise CompileError(f"A={A} >= pi makes the couplings singular inside the segments")
    n = _steps_for(T, dt)
    t = segment_grid(T, n)
    shape = NoncyclicShape(spec.theta, spec.phi, A, T)
    try:
        o0a, o1a = shape.couplings(t[: n + 1], 1)
        o0b, o1b = shape.couplings(t[n + 1 :], 2)
    except SingularityError as exc:
        raise CompileError(str(exc)) from exc
    omega0 = np.concatenate([o0a, o0b])
    omega1 = np.concatenate([o1a, o1b])
    if not (np.all(np.isfinite(omega0)) and np.all(np.isfinite(omega1))):
        raise CompileError(f"non-finite couplings for A={A}")
    return PulseSchedule(
        t,
        omega0,
        omega1,
        phi_segment1=spec.phi,
        phi_segment2=(spec.phi + math.pi) % (2 * math.pi),
        scheme="noncyclic",
        metadata={"theta": spec.theta, "phi": spec.phi, "A": A, "T_compiled": T},
        source=shape,
    )


def pulse_area(schedule: PulseSchedule) -> float:
    """``S = (1/2) int sqrt(omega0^2 + omega1^2) dt``, composite Simpson per segment."""
    total = 0.0
    for sl, _, _ in schedule.segments():
        amp = np.hypot(schedule.omega0[sl], schedule.omega1[sl])
        total += integrate.simpson(amp, x=schedule.t[sl])
    return 0.5 * float(total)


def area_at(theta: float, A: float, T: float = units.REFERENCE_T, dt: float | None = None) -> float:
    """Pulse area of the noncyclic schedule; the drive phase does not enter."""
    return pulse_area(compile_noncyclic_gate(GateSpec(theta, 0.0), A, T, dt))


_INV_PHI = (math.sqrt(5) - 1) / 2


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = 1e-4):
    """Golden-section search for the minimum of a unimodal ``f`` on ``[a, b]``.

    Returns ``(x, f(x))`` with the bracket narrowed below ``tol``.
    """
    a, b = min(a, b), max(a, b)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


class AreaMinimum(NamedTuple):
    A: float
    S: float
    unimodal: bool
    grid_A: np.ndarray
    grid_S: np.ndarray


def minimize_area(
    theta: float,
    T: float = units.REFERENCE_T,
    A_range: tuple[float, float] = (0.0, 1.5),
    *,
    n_grid: int = 60,
    tol: float = 1e-4,
    dt: float | None = None,
) -> AreaMinimum:
    """Profile amplitude minimizing the pulse area for rotation angle ``theta``.

    A coarse scan of ``n_grid`` points over ``(lo, hi]`` brackets the minimum,
    then golden-section search narrows it to ``tol``. If the scan has more
    than one local minimum the best grid point is returned with
    ``unimodal=False`` and a warning. The area does not depend on ``T``.
    """
    lo, hi = A_range
    grid = lo + (hi - lo) * np.arange(1, n_grid + 1) / n_grid

    def S(A: float) -> float:
        try:
            return area_at(theta, A, T, dt)
        except CompileError:
            return math.inf

    values = np.array([S(A) for A in grid])
    i = int(np.argmin(values))
    d = np.diff(values)
    n_minima = int(np.sum((d[:-1] < 0) & (d[1:] > 0)))
    if n_minima > 1:
        warnings.warn(
            f"S(A) has {n_minima} local minima on the coarse grid for theta={theta}; "
            "returning the best grid point",
            RuntimeWarning,
            stacklevel=2,
        )
        return AreaMinimum(float(grid[i]), float(values[i]), False, grid, values)
    a = grid[i - 1] if i > 0 else max(lo, grid[0] - (grid[1] - grid[0]) + 1e-12)
    b = grid[min(i + 1, n_grid - 1)]
    A_star, S_min = golden_section(S, a, b, tol)
    if values[i] < S_min:
        A_star, S_min = grid[i], values[i]
    return AreaMinimum(float(A_star), float(S_min), True, grid, values)


def area_matched_amplitude(
    theta: float,
    target: float = math.pi,
    *,
    branch: str = "below",
    T: float = units.REFERENCE_T,
) -> float:
    """Amplitude ``A`` with ``S(A) = target`` on one side of the area minimum.

    ``branch="below"`` picks the root with ``A < A*``, ``"above"`` the other.
    """
    best = minimize_area(theta, T)
    if best.S > target:
        raise CompileError(f"minimum area {best.S:.6f} at theta={theta} exceeds {target:.6f}")
    f = lambda A: area_at(theta, A, T) - target  # noqa: E731
    if branch == "below":
        lo = best.A
        while f(lo) < 0:
            lo *= 0.5
            if lo < 1e-6:
                raise CompileError("no area-matching amplitude below the minimum")
        return float(optimize.brentq(f, lo, best.A, xtol=1e-12))
    if branch == "above":
        hi = best.A
        while f(hi) < 0:
            hi = min(0.5 * (hi + math.pi), hi + 0.5)
            if math.pi - hi < 1e-3:
                raise CompileError("no area-matching amplitude above the minimum")
        return float(optimize.brentq(f, best.A, hi, xtol=1e-12))
    raise ValueError(f"branch must be 'below' or 'above', got {branch!r}")


def scale_to_rabi_cap(
    schedule: PulseSchedule,
    omega_max: float = units.RABI_CAP,
    norm: str = "element",
) -> PulseSchedule:
    """Stretch time so the peak coupling equals ``omega_max``; area is unchanged.

    ``norm`` selects the peak measure (see ``PulseSchedule.peak_coupling``).
    The default caps the largest Hamiltonian matrix element, max |omega_k|/2.
    """
    if not omega_max > 0:
        raise ValueError("omega_max must be positive")
    peak = schedule.peak_coupling(norm)
    if peak == 0.0:
        raise ScheduleError("cannot rescale an all-zero schedule")
    out = schedule.rescaled(peak / omega_max)
    if out is not schedule:
        out.metadata.update(rabi_cap=omega_max, cap_norm=norm)
    return out


def reference_envelope(dt: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``|omega1(t)|`` of the theta = pi/2, A = 0.46, T = 29.5 ns schedule."""
    sched = compile_noncyclic_gate(
        GateSpec(math.pi / 2, math.pi / 2), units.REFERENCE_A, units.REFERENCE_T, dt
    )
    return sched.t.copy(), np.abs(sched.omega1)


def compile_nhqc_baseline(
    spec: GateSpec,
    envelope: tuple[np.ndarray, np.ndarray] | None = None,
    *,
    tol: float = 1e-6,
) -> PulseSchedule:
    """Conventional single-loop holonomic schedule for ``spec``.

    Both channels carry the same envelope (fixed 1:1 mixing), so the bright
    state is ``(|0> - i e^{i phi}|1>)/sqrt(2)``, whose projector is the
    rotation axis. Each half of the envelope is normalized to Rabi area pi,
    giving total pulse area pi, and the second half is driven with an extra
    common phase ``theta - pi``. The holonomy on the qubit is then
    ``|d><d| + e^{i theta} |b><b|``, equal to the target up to global phase;
    this is checked by propagation before returning.

    ``envelope`` is ``(t, shape)`` on a uniform grid with an even number of
    intervals per half; it defaults to :func:`reference_envelope`.
    """
    t, env = reference_envelope() if envelope is None else envelope
    t = np.asarray(t, dtype=float)
    env = np.asarray(env, dtype=float)
    if t.shape != env.shape or len(t) % 2 == 0:
        raise CompileError("envelope must be sampled on an odd-length grid matching t")
    if np.any(env < 0):
        raise CompileError("envelope must be nonnegative")
    n = (len(t) - 1) // 2
    halves = (slice(0, n + 1), slice(n, 2 * n + 1))
    areas = [integrate.simpson(env[sl], x=t[sl]) for sl in halves]
    if min(areas) <= 0:
        raise CompileError("envelope has zero area on at least one half")
    rabi = np.empty_like(env)
    rabi[: n + 1] = env[: n + 1] * (math.pi / areas[0])
    rabi[n + 1 :] = env[n + 1 :] * (math.pi / areas[1])
    if env[n] > 1e-9 * env.max() and not math.isclose(areas[0], areas[1], rel_tol=1e-9):
        # the midpoint sample is shared by both halves
        raise CompileError("envelope must vanish at the midpoint or have equal half areas")

    omega = rabi / math.sqrt(2)
    drive = spec.phi - math.pi / 2
    jump = spec.theta - math.pi
    sched = PulseSchedule(
        t,
        omega,
        omega.copy(),
        phi_segment1=drive % (2 * math.pi),
        phi_segment2=(drive + jump) % (2 * math.pi),
        phase0_segment1=0.0,
        phase0_segment2=jump % (2 * math.pi),
        scheme="nhqc",
        metadata={"theta": spec.theta, "phi": spec.phi},
    )
    U = propagate_unitary(sched)
    overlap = gate_overlap(spec.unitary(), qubit_block(U))
    leak = float(np.max(np.abs(U[1, QUBIT]) ** 2))
    if overlap < 1 - tol or leak > tol:
        raise CompileError(
            f"baseline check failed: overlap {overlap:.9f}, leakage {leak:.2e}"
        )
    return sched
