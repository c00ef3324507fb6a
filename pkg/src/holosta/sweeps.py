"""Batch experiments: area curves, minimum-area curves, Rabi-error
robustness grids and population traces.

Robustness grids are split into fixed blocks of ``eps0`` rows. The block
layout never depends on the worker count, so serial and parallel runs
perform the same floating-point operations and agree bit for bit.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import lru_cache

import numpy as np

from . import __version__, units
from .dynamics import (
    NoiseModel,
    _real_family_fidelity,
    embed_qubit_state,
    evolve_density,
    lindblad_evolve,
    process_map,
    real_input_angles,
)
from .errors import CompileError, NumericalError
from .gates import (
    GateSpec,
    area_at,
    area_matched_amplitude,
    compile_nhqc_baseline,
    compile_noncyclic_gate,
    minimize_area,
    scale_to_rabi_cap,
)
from .schedule import PulseSchedule

__all__ = [
    "SCHEMES",
    "SweepResult",
    "PopulationTrace",
    "default_workers",
    "fidelity_schedule",
    "robustness_amplitude",
    "robustness_schedule",
    "area_vs_A",
    "smin_vs_theta",
    "robustness_grid",
    "grid_statistics",
    "compare_schemes",
    "population_trace",
]

SCHEMES = ("noncyclic", "nhqc")
WORKERS_ENV = "HOLOSTA_WORKERS"
ROWS_PER_BLOCK = 4


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        return max(1, int(value))
    return 1


def _provenance(deterministic: bool = True, **extra) -> dict:
    meta = {"code_version": __version__}
    if not deterministic:
        meta["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    meta.update(extra)
    return meta


@dataclass
class SweepResult:
    """Dense array of values over named axes, plus provenance.

    ``values.shape`` equals the tuple of axis lengths, in axis order.
    ``extra`` holds further arrays of the same shape (e.g. the minimizing
    amplitude next to the minimum area).
    """

    axes: dict[str, np.ndarray]
    values: np.ndarray
    metadata: dict = field(default_factory=dict)
    extra: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.axes = {k: np.asarray(v, dtype=float) for k, v in self.axes.items()}
        self.values = np.asarray(self.values, dtype=float)
        shape = tuple(len(v) for v in self.axes.values())
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} does not match axes {shape}")
        for k, v in self.extra.items():
            if np.shape(v) != shape:
                raise ValueError(f"extra array {k!r} has shape {np.shape(v)}, expected {shape}")
        if self.metadata.get("quantity") == "fidelity":
            finite = self.values[np.isfinite(self.values)]
            if np.any((finite < -1e-9) | (finite > 1 + 1e-9)):
                raise ValueError("fidelities must lie in [0, 1]")


@dataclass(frozen=True)
class PopulationTrace:
    t: np.ndarray
    p0: np.ndarray
    pe: np.ndarray
    p1: np.ndarray
    fidelity: np.ndarray
    metadata: dict = field(default_factory=dict)

    def columns(self) -> dict[str, np.ndarray]:
        return {"t": self.t, "P0": self.p0, "Pe": self.pe, "P1": self.p1, "F": self.fidelity}


# -- schedules used by the reference experiments ----------------------------


def fidelity_schedule(
    spec: GateSpec,
    A: float | None = None,
    rabi_cap: float = units.RABI_CAP,
    cap_norm: str = "element",
) -> PulseSchedule:
    """Noncyclic schedule at the area-minimizing ``A`` (unless given), capped."""
    if A is None:
        A = minimize_area(spec.theta).A
    return scale_to_rabi_cap(compile_noncyclic_gate(spec, A), rabi_cap, cap_norm)


@lru_cache(maxsize=None)
def robustness_amplitude(theta: float) -> float:
    """Amplitude giving pulse area pi: 0.46 at theta = pi/2, else root-solved.

    The root is taken on the small-amplitude side of the area minimum,
    the same side on which 0.46 lies for theta = pi/2.
    """
    if math.isclose(theta, math.pi / 2, rel_tol=0, abs_tol=1e-12):
        return units.REFERENCE_A
    return area_matched_amplitude(theta, math.pi, branch="below")


def robustness_schedule(
    spec: GateSpec,
    scheme: str,
    rabi_cap: float = units.RABI_CAP,
    cap_norm: str = "element",
) -> PulseSchedule:
    """Area-pi schedule of either scheme, rescaled to the Rabi cap."""
    if scheme == "noncyclic":
        sched = compile_noncyclic_gate(spec, robustness_amplitude(spec.theta))
    elif scheme == "nhqc":
        sched = compile_nhqc_baseline(spec)
    else:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    return scale_to_rabi_cap(sched, rabi_cap, cap_norm)


# -- area sweeps ------------------------------------------------------------


def area_vs_A(theta: float, T: float, A_grid) -> SweepResult:
    """Pulse area over a grid of amplitudes; failed compiles become NaN."""
    A_grid = np.asarray(A_grid, dtype=float)
    values = np.full(len(A_grid), np.nan)
    failures = []
    for i, A in enumerate(A_grid):
        try:
            values[i] = area_at(theta, A, T)
        except CompileError as exc:
            failures.append({"A": float(A), "error": str(exc)})
    meta = _provenance(kind="area_vs_A", quantity="area", theta=theta, T=T, failures=failures)
    return SweepResult({"A": A_grid}, values, meta)


def default_theta_grid(n: int = 33) -> np.ndarray:
    """``n`` equally spaced angles in ``(0, pi]``."""
    return math.pi * np.arange(1, n + 1) / n


def smin_vs_theta(theta_grid=None, T: float = units.REFERENCE_T) -> SweepResult:
    """Minimum pulse area and the minimizing amplitude for each angle."""
    theta_grid = default_theta_grid() if theta_grid is None else np.asarray(theta_grid, dtype=float)
    if np.any(theta_grid <= 0) or np.any(theta_grid > math.pi + 1e-12):
        raise ValueError("theta grid must lie in (0, pi]")
    s_min = np.full(len(theta_grid), np.nan)
    a_star = np.full(len(theta_grid), np.nan)
    unimodal = []
    for i, th in enumerate(theta_grid):
        best = minimize_area(float(th), T)
        s_min[i], a_star[i] = best.S, best.A
        unimodal.append(best.unimodal)
    meta = _provenance(
        kind="smin_vs_theta",
        quantity="area",
        T=T,
        unimodal=unimodal,
        theta_mean_smin=float(np.mean(s_min)),
    )
    return SweepResult({"theta": theta_grid}, s_min, meta, extra={"A_star": a_star})


# -- robustness grids -------------------------------------------------------


def _grid_block(schedule, target, noise, metric, n_states, eps0_rows, eps1):
    e0, e1 = np.meshgrid(eps0_rows, eps1, indexing="ij")
    if metric == "gate":
        pm = process_map(schedule, noise, basis="real", eps0=e0, eps1=e1)
        return _real_family_fidelity(pm.images, target, real_input_angles(n_states))
    if metric == "state":
        psi0 = embed_qubit_state([1.0, 0.0])
        rho0 = np.broadcast_to(np.outer(psi0, psi0.conj()), e0.shape + (3, 3)).copy()
        rho = evolve_density(schedule, rho0, noise, eps0=e0, eps1=e1)
        f = embed_qubit_state(target @ np.array([1.0, 0.0]))
        return np.real(np.einsum("i,...ij,j->...", f.conj(), rho, f))
    raise ValueError(f"unknown fidelity metric {metric!r}")


def _run_block(args):
    try:
        return _grid_block(*args), None
    except NumericalError as exc:
        return None, str(exc)


def robustness_grid(
    spec: GateSpec,
    scheme: str,
    eps0,
    eps1,
    noise: NoiseModel | None = None,
    fidelity: str = "gate",
    *,
    schedule: PulseSchedule | None = None,
    n_states: int = 1001,
    workers: int | None = None,
    rabi_cap: float = units.RABI_CAP,
) -> SweepResult:
    """Fidelity over an ``eps0 x eps1`` grid of static Rabi errors.

    ``fidelity="gate"`` averages over real input superpositions (one
    process-map propagation per cell); ``"state"`` starts from |0>.
    ``noise`` supplies the decoherence rates (its own eps are ignored) and
    defaults to the reference rates. Blocks that fail numerically are
    recorded as NaN with the error message in the metadata.
    """
    noise = NoiseModel.reference() if noise is None else noise
    noise = NoiseModel(noise.gamma1, noise.gamma2)
    eps0 = np.asarray(eps0, dtype=float)
    eps1 = np.asarray(eps1, dtype=float)
    if eps0.size == 0 or eps1.size == 0:
        raise ValueError("error grids must not be empty")
    if schedule is None:
        schedule = robustness_schedule(spec, scheme, rabi_cap)
    target = spec.unitary()
    workers = default_workers() if workers is None else max(1, int(workers))

    blocks = [eps0[i : i + ROWS_PER_BLOCK] for i in range(0, len(eps0), ROWS_PER_BLOCK)]
    jobs = [(schedule, target, noise, fidelity, n_states, rows, eps1) for rows in blocks]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, jobs))
    else:
        results = [_run_block(job) for job in jobs]

    values = np.full((len(eps0), len(eps1)), np.nan)
    failures = []
    for i, (rows, (block, err)) in enumerate(zip(blocks, results)):
        start = i * ROWS_PER_BLOCK
        if err is None:
            values[start : start + len(rows)] = block
        else:
            failures.append({"eps0": rows.tolist(), "error": err})

    meta = _provenance(
        kind="robustness_grid",
        quantity="fidelity",
        metric=fidelity,
        scheme=schedule.scheme,
        gate=spec.as_dict(),
        noise={"gamma1": noise.gamma1, "gamma2": noise.gamma2},
        A=schedule.metadata.get("A"),
        T=schedule.T,
        dt=schedule.dt,
        n_states=n_states,
        rabi_cap=schedule.metadata.get("rabi_cap"),
        failures=failures,
    )
    return SweepResult({"eps0": eps0, "eps1": eps1}, values, meta)


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    if len(x) == 1:
        return np.ones(1)
    w = np.zeros(len(x))
    dx = np.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w / w.sum()


def grid_statistics(result: SweepResult) -> dict:
    """Cell mean, area-weighted (trapezoid) mean and minimum of a 2-d grid."""
    v = result.values
    w0, w1 = (_trapezoid_weights(a) for a in result.axes.values())
    return {
        "mean": float(np.nanmean(v)),
        "area_mean": float(np.einsum("i,ij,j->", w0, v, w1)),
        "min": float(np.nanmin(v)),
        "center": float(v[len(w0) // 2, len(w1) // 2]),
    }


def compare_schemes(ours: SweepResult, baseline: SweepResult) -> dict:
    """Grid means of both schemes and the fraction of cells where ours wins."""
    if ours.values.shape != baseline.values.shape:
        raise ValueError("grids must have the same shape")
    a, b = grid_statistics(ours), grid_statistics(baseline)
    return {
        "mean": a["mean"],
        "baseline_mean": b["mean"],
        "area_mean": a["area_mean"],
        "baseline_area_mean": b["area_mean"],
        "win_fraction": float(np.mean(ours.values > baseline.values)),
    }


# -- population dynamics ----------------------------------------------------


def population_trace(
    spec: GateSpec,
    psi0=(1.0, 0.0),
    noise: NoiseModel | None = None,
    *,
    schedule: PulseSchedule | None = None,
) -> PopulationTrace:
    """Level populations and fidelity to the ideal final state versus time."""
    noise = NoiseModel.reference() if noise is None else noise
    schedule = fidelity_schedule(spec) if schedule is None else schedule
    psi0 = np.asarray(psi0, dtype=complex)
    psi0 = psi0 / np.linalg.norm(psi0)
    v = embed_qubit_state(psi0)
    _, rec = lindblad_evolve(schedule, np.outer(v, v.conj()), noise, record=True)
    f = embed_qubit_state(spec.unitary() @ psi0)
    fid = np.real(np.einsum("i,kij,j->k", f.conj(), rec.rho, f))
    pops = rec.populations
    meta = _provenance(
        kind="population_trace",
        gate=spec.as_dict(),
        psi0=[[z.real, z.imag] for z in psi0],
        A=schedule.metadata.get("A"),
        T=schedule.T,
        noise={"gamma1": noise.gamma1, "gamma2": noise.gamma2, "eps0": noise.eps0, "eps1": noise.eps1},
    )
    return PopulationTrace(rec.t, pops[:, 0], pops[:, 1], pops[:, 2], fid, meta)
