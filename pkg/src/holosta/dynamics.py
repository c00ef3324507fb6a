"""Closed and open evolution of the three-level system under a schedule.

Basis ordering is ``(|0>, |e>, |1>)`` throughout. The master equation is

    drho/dt = i [rho, H] + (1/2) [G1 L(s1) + G2 L(s2)],
    L(A)    = 2 A rho A^+ - A^+ A rho - rho A^+ A,

with ``s1 = |0><e| + |1><e|`` and ``s2 = diag(-1, 2, -1)``.

Both integrators are classical RK4 on the sampled schedule. One RK4 step
spans two sample intervals so that the stage midpoint is an actual sample;
no interpolation is involved.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NumericalError
from .schedule import PulseSchedule
from .units import DECAY_RATE, DEPHASING_RATE

__all__ = [
    "IntegratorError",
    "NoiseModel",
    "CollapseOperators",
    "COLLAPSE",
    "EvolutionRecord",
    "ProcessMap",
    "error_hamiltonian",
    "propagate_unitary",
    "evolve_density",
    "lindblad_evolve",
    "state_fidelity",
    "embed_qubit_state",
    "gate_overlap",
    "qubit_block",
    "hermitian_basis",
    "process_map",
    "real_input_angles",
    "avg_gate_fidelity",
    "bloch_average_fidelity",
]

POSITIVITY_TOL = 1e-6
QUBIT = [0, 2]


class IntegratorError(NumericalError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    """Decoherence rates (rad/ns) and static Rabi error fractions."""

    gamma1: float = 0.0
    gamma2: float = 0.0
    eps0: float = 0.0
    eps1: float = 0.0

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ValueError("decay and dephasing rates must be nonnegative")
        for e in (self.eps0, self.eps1):
            if not -1.0 <= e <= 1.0:
                raise ValueError(f"Rabi error fractions must lie in [-1, 1], got {e}")

    @classmethod
    def reference(cls, eps0: float = 0.0, eps1: float = 0.0) -> "NoiseModel":
        """The 2pi x 5 kHz decay and dephasing used for the quoted fidelities."""
        return cls(DECAY_RATE, DEPHASING_RATE, eps0, eps1)

    @property
    def closed(self) -> bool:
        return self.gamma1 == 0.0 and self.gamma2 == 0.0


class CollapseOperators(NamedTuple):
    sigma1: np.ndarray
    sigma2: np.ndarray


COLLAPSE = CollapseOperators(
    sigma1=np.array([[0, 1, 0], [0, 0, 0], [0, 1, 0]], dtype=complex),
    sigma2=np.diag([-1.0, 2.0, -1.0]).astype(complex),
)

# L(s2)_ij = -(d_i - d_j)^2 rho_ij for diagonal s2 = diag(d)
_d = np.real(np.diag(COLLAPSE.sigma2))
_DEPHASE = -((_d[:, None] - _d[None, :]) ** 2)
del _d


def _dephase_first(ndim: int) -> np.ndarray:
    return _DEPHASE.reshape((3, 3) + (1,) * ndim)


def error_hamiltonian(schedule: PulseSchedule, t: float, eps0: float = 0.0, eps1: float = 0.0):
    """Hamiltonian at ``t`` with couplings scaled by ``(1 + eps_k)``."""
    return schedule.hamiltonian_at(t, eps0, eps1)


def _segment_elements(schedule: PulseSchedule):
    """Per segment: ``(t, h01, h12)`` with h01 = H[0,1], h12 = H[1,2]."""
    out = []
    for sl, phase0, phi in schedule.segments():
        t = schedule.t[sl]
        h01 = 0.5 * schedule.omega0[sl] * np.exp(1j * phase0)
        h12 = 0.5 * schedule.omega1[sl] * np.exp(-1j * phi)
        out.append((t, h01, h12))
    return out


def _step_indices(n: int, stride: int):
    if n % (2 * stride):
        raise IntegratorError(
            f"{n} intervals per segment cannot be split into RK4 steps of {2 * stride} samples"
        )
    return range(0, n, 2 * stride)


# -- unitary ----------------------------------------------------------------


def _hamiltonians(h01, h12, eps0, eps1) -> np.ndarray:
    a = (1 + eps0) * h01
    b = (1 + eps1) * h12
    H = np.zeros(a.shape + (3, 3), dtype=complex)
    H[..., 0, 1] = a
    H[..., 1, 0] = a.conj()
    H[..., 1, 2] = b
    H[..., 2, 1] = b.conj()
    return H


def _propagate(schedule: PulseSchedule, eps0: float, eps1: float, stride: int) -> np.ndarray:
    U = np.eye(3, dtype=complex)
    for t, h01, h12 in _segment_elements(schedule):
        H = _hamiltonians(h01, h12, eps0, eps1)
        mH = -1j * H
        for k in _step_indices(len(t) - 1, stride):
            m = k + stride
            e = k + 2 * stride
            h = t[e] - t[k]
            k1 = mH[k] @ U
            k2 = mH[m] @ (U + 0.5 * h * k1)
            k3 = mH[m] @ (U + 0.5 * h * k2)
            k4 = mH[e] @ (U + h * k3)
            U = U + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return U


def propagate_unitary(
    schedule: PulseSchedule,
    eps0: float = 0.0,
    eps1: float = 0.0,
    *,
    check: bool = False,
    tol: float = 1e-8,
) -> np.ndarray:
    """Time-ordered 3x3 propagator of the (error-scaled) schedule.

    With ``check=True`` the propagation is repeated with twice the step and
    an :class:`IntegratorError` is raised if the Richardson error estimate of
    the fine result exceeds ``tol`` (operator norm).
    """
    U = _propagate(schedule, eps0, eps1, 1)
    if check:
        if schedule.n_per_segment % 4:
            raise IntegratorError("convergence check needs a multiple of 4 intervals per segment")
        coarse = _propagate(schedule, eps0, eps1, 2)
        est = np.linalg.norm(U - coarse, ord=2) / 15.0
        if est > tol:
            raise IntegratorError(
                f"propagator not converged: estimated error {est:.3e} > {tol:.1e} "
                f"(dt = {schedule.dt:.4g} ns)"
            )
    return U


def qubit_block(U: np.ndarray) -> np.ndarray:
    return U[np.ix_(QUBIT, QUBIT)]


def gate_overlap(U: np.ndarray, V: np.ndarray) -> float:
    """Global-phase-insensitive overlap ``|tr(U^+ V)| / dim``."""
    return float(abs(np.trace(U.conj().T @ V)) / U.shape[0])


# -- master equation --------------------------------------------------------


def _lindblad_rhs(rho, a, b, g1: float, g2: float):
    """Right-hand side for Hermitian ``rho`` stored matrix-axes-first.

    ``rho`` has shape ``(3, 3, *batch)`` so that each element is a
    contiguous batch vector; ``a = H[0,1]`` and ``b = H[1,2]`` broadcast
    against ``batch``.
    """
    Hr = np.empty_like(rho)
    Hr[0] = a * rho[1]
    Hr[1] = np.conj(a) * rho[0] + b * rho[2]
    Hr[2] = np.conj(b) * rho[1]
    # rho H = (H rho)^+ for Hermitian rho
    out = -1j * (Hr - np.swapaxes(Hr, 0, 1).conj())
    if g1:
        ree2 = g1 * rho[1, 1]
        out[1] -= g1 * rho[1]
        out[:, 1] -= g1 * rho[:, 1]
        out[0, 0] += ree2
        out[0, 2] += ree2
        out[2, 0] += ree2
        out[2, 2] += ree2
    if g2:
        out += (0.5 * g2) * _dephase_first(rho.ndim - 2) * rho
    return out


@dataclass(frozen=True)
class EvolutionRecord:
    """States at every RK4 step boundary, including t=0 and t=T."""

    t: np.ndarray
    rho: np.ndarray  # (steps, ..., 3, 3)

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diagonal(self.rho, axis1=-2, axis2=-1))


def evolve_density(
    schedule: PulseSchedule,
    rho0,
    noise: NoiseModel,
    *,
    eps0=None,
    eps1=None,
    record: bool = False,
):
    """Batched RK4 integration of the master equation.

    ``rho0`` has shape ``(..., 3, 3)`` and must be Hermitian (it need not
    be a state: the process map feeds in Hermitian basis operators).
    ``eps0``/``eps1`` default to the noise model's values and may be arrays
    broadcasting against ``rho0.shape[:-2]``; each batch entry is then
    integrated with its own error fractions.
    """
    rho = np.array(rho0, dtype=complex)
    if rho.shape[-2:] != (3, 3):
        raise ValueError(f"rho0 must have trailing shape (3, 3), got {rho.shape}")
    if not np.allclose(rho, np.swapaxes(rho, -1, -2).conj(), atol=1e-12):
        raise ValueError("rho0 must be Hermitian")
    e0 = np.asarray(noise.eps0 if eps0 is None else eps0, dtype=float)
    e1 = np.asarray(noise.eps1 if eps1 is None else eps1, dtype=float)
    g1, g2 = noise.gamma1, noise.gamma2

    batch = rho.shape[:-2]
    e0 = np.broadcast_to(e0, np.broadcast_shapes(e0.shape, batch)) if e0.ndim else e0
    e1 = np.broadcast_to(e1, np.broadcast_shapes(e1.shape, batch)) if e1.ndim else e1
    # matrix axes first: element slices are contiguous over the batch
    work = np.ascontiguousarray(np.moveaxis(rho, (-2, -1), (0, 1)))

    def snapshot():
        return np.moveaxis(work, (0, 1), (-2, -1)).copy()

    times = [schedule.t[0]]
    states = [snapshot()] if record else None
    for t, h01, h12 in _segment_elements(schedule):
        for k in _step_indices(len(t) - 1, 1):
            h = t[k + 2] - t[k]
            ak, am, ae = ((1 + e0) * h01[i] for i in (k, k + 1, k + 2))
            bk, bm, be = ((1 + e1) * h12[i] for i in (k, k + 1, k + 2))
            k1 = _lindblad_rhs(work, ak, bk, g1, g2)
            k2 = _lindblad_rhs(work + (0.5 * h) * k1, am, bm, g1, g2)
            k3 = _lindblad_rhs(work + (0.5 * h) * k2, am, bm, g1, g2)
            k4 = _lindblad_rhs(work + h * k3, ae, be, g1, g2)
            work = work + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            work = 0.5 * (work + np.swapaxes(work, 0, 1).conj())
            if record:
                times.append(t[k + 2])
                states.append(snapshot())
    rho = snapshot()
    if record:
        return rho, EvolutionRecord(np.asarray(times), np.stack(states))
    return rho


def _check_states(rho: np.ndarray, label: str = "state") -> None:
    tr = np.real(np.trace(rho, axis1=-2, axis2=-1))
    worst = float(np.max(np.abs(tr - 1.0)))
    if worst > 1e-6:
        raise IntegratorError(f"{label}: trace drifted by {worst:.3e}")
    lo = float(np.min(np.linalg.eigvalsh(rho)))
    if lo < -POSITIVITY_TOL:
        raise IntegratorError(f"{label}: negative eigenvalue {lo:.3e} (positivity lost)")


def lindblad_evolve(schedule: PulseSchedule, rho0, noise: NoiseModel, record: bool = False):
    """Final density matrix, plus an :class:`EvolutionRecord` if ``record``.

    ``rho0`` must be a valid density matrix (Hermitian, unit trace, PSD).
    Positivity and trace are checked on the result (and on every recorded
    step); violations raise :class:`IntegratorError`.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    _check_states(rho0, "initial state")
    out = evolve_density(schedule, rho0, noise, record=record)
    if record:
        rho, rec = out
        _check_states(rec.rho, "recorded state")
        return rho, rec
    _check_states(out, "final state")
    return out


# -- fidelities -------------------------------------------------------------


def embed_qubit_state(psi) -> np.ndarray:
    """Qubit amplitudes ``(c0, c1)`` as ``(c0, 0, c1)``; 3-vectors pass through."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape == (2,):
        return np.array([psi[0], 0.0, psi[1]], dtype=complex)
    if psi.shape == (3,):
        return psi
    raise ValueError(f"expected a qubit or qutrit state vector, got shape {psi.shape}")


def state_fidelity(rho, psi_f) -> float:
    """``<psi_f| rho |psi_f>`` for a normalized target state."""
    v = embed_qubit_state(psi_f)
    if abs(np.vdot(v, v) - 1.0) > 1e-10:
        raise ValueError("target state must be normalized")
    return float(np.real(np.vdot(v, np.asarray(rho) @ v)))


def hermitian_basis() -> np.ndarray:
    """Nine Hermitian 3x3 operators orthonormal under ``tr(A B)``."""
    ops = []
    for i in range(3):
        m = np.zeros((3, 3), dtype=complex)
        m[i, i] = 1.0
        ops.append(m)
    for i in range(3):
        for j in range(i + 1, 3):
            m = np.zeros((3, 3), dtype=complex)
            m[i, j] = m[j, i] = 1 / np.sqrt(2)
            ops.append(m)
            m = np.zeros((3, 3), dtype=complex)
            m[i, j] = -1j / np.sqrt(2)
            m[j, i] = 1j / np.sqrt(2)
            ops.append(m)
    return np.stack(ops)


@dataclass(frozen=True)
class ProcessMap:
    """Linear map ``rho(0) -> rho(T)`` given by the images of a basis."""

    basis: np.ndarray  # (k, 3, 3), orthonormal under tr(A^+ B)
    images: np.ndarray  # (..., k, 3, 3)

    def apply(self, rho0) -> np.ndarray:
        """Image of a single 3x3 operator (batch axes of the map are kept)."""
        rho0 = np.asarray(rho0, dtype=complex)
        coeffs = np.einsum("kij,ij->k", self.basis.conj(), rho0)
        residual = rho0 - np.einsum("k,kij->ij", coeffs, self.basis)
        if np.max(np.abs(residual)) > 1e-12:
            raise ValueError("input operator lies outside the span of the process basis")
        return np.einsum("k,...kij->...ij", coeffs, self.images)


# span of the real-superposition inputs cos|0> + sin|1>
_REAL_BASIS = np.stack(
    [
        np.diag([1.0, 0.0, 0.0]).astype(complex),
        np.diag([0.0, 0.0, 1.0]).astype(complex),
        np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex) / np.sqrt(2),
    ]
)


def process_map(
    schedule: PulseSchedule,
    noise: NoiseModel,
    *,
    basis: str = "full",
    eps0=None,
    eps1=None,
) -> ProcessMap:
    """Evolve a Hermitian operator basis once.

    ``basis="full"`` uses all nine operators; ``basis="real"`` only the
    three spanning real qubit superpositions, which is all that
    :func:`avg_gate_fidelity` needs. Array-valued ``eps0``/``eps1`` give a
    batch of maps with the error axes in front.
    """
    if basis == "full":
        ops = hermitian_basis()
    elif basis == "real":
        ops = _REAL_BASIS
    else:
        raise ValueError(f"unknown basis {basis!r}")
    e0 = np.asarray(noise.eps0 if eps0 is None else eps0, dtype=float)
    e1 = np.asarray(noise.eps1 if eps1 is None else eps1, dtype=float)
    e0, e1 = np.broadcast_arrays(e0, e1)
    rho = np.broadcast_to(ops, e0.shape + ops.shape).copy()
    images = evolve_density(schedule, rho, noise, eps0=e0[..., None], eps1=e1[..., None])
    return ProcessMap(ops, images)


def real_input_angles(n_states: int) -> np.ndarray:
    """Uniform grid of ``n_states`` angles over ``[0, 2 pi]`` (both ends)."""
    if n_states < 2:
        raise ValueError("need at least two input states")
    return np.linspace(0.0, 2 * np.pi, n_states)


def _real_family_fidelity(images: np.ndarray, target2: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Trapezoid average over ``cos a |0> + sin a |1>`` given ``_REAL_BASIS`` images.

    ``images`` has shape ``(..., 3, 3, 3)``; returns shape ``(...)``.
    """
    c, s = np.cos(angles), np.sin(angles)
    # coefficients of |psi><psi| in _REAL_BASIS
    coeffs = np.stack([c * c, s * s, np.sqrt(2) * c * s], axis=-1)
    out = target2 @ np.stack([c, s])  # (2, n)
    f = np.zeros((3, len(angles)), dtype=complex)
    f[0], f[2] = out[0], out[1]
    # M[..., k, n] = <f_n| image_k |f_n>
    M = np.einsum("in,...kij,jn->...kn", f.conj(), images, f)
    vals = np.real(np.einsum("...kn,nk->...n", M, coeffs))
    return np.trapezoid(vals, angles, axis=-1) / (2 * np.pi)


def avg_gate_fidelity(
    gate,
    schedule: PulseSchedule,
    noise: NoiseModel,
    n_states: int = 1001,
    *,
    method: str = "superoperator",
) -> float:
    """Average of ``<psi_f|rho|psi_f>`` over real input superpositions.

    Inputs are ``cos a |0> + sin a |1>`` with ``a`` on a uniform grid over
    ``[0, 2 pi]``; the average is the trapezoid rule divided by ``2 pi``.
    ``method="superoperator"`` evolves three basis operators once;
    ``method="direct"`` evolves every input state separately.
    ``gate`` is a ``GateSpec`` or a 2x2 target unitary.
    """
    target = np.asarray(gate.unitary() if hasattr(gate, "unitary") else gate, dtype=complex)
    angles = real_input_angles(n_states)
    if method == "superoperator":
        pm = process_map(schedule, noise, basis="real")
        return float(_real_family_fidelity(pm.images, target, angles))
    if method == "direct":
        psi = np.zeros((n_states, 3), dtype=complex)
        psi[:, 0], psi[:, 2] = np.cos(angles), np.sin(angles)
        rho0 = np.einsum("ni,nj->nij", psi, psi.conj())
        rho = evolve_density(schedule, rho0, noise)
        f2 = (target @ np.stack([np.cos(angles), np.sin(angles)])).T
        f = np.zeros((n_states, 3), dtype=complex)
        f[:, 0], f[:, 2] = f2[:, 0], f2[:, 1]
        vals = np.real(np.einsum("ni,nij,nj->n", f.conj(), rho, f))
        return float(np.trapezoid(vals, angles) / (2 * np.pi))
    raise ValueError(f"unknown method {method!r}")


def bloch_average_fidelity(gate, schedule: PulseSchedule, noise: NoiseModel) -> float:
    """Average state fidelity over the full Bloch sphere.

    The integrand is quadratic in the input projector, so the six Pauli
    eigenstates (a 2-design) give the exact sphere average.
    """
    target = np.asarray(gate.unitary() if hasattr(gate, "unitary") else gate, dtype=complex)
    r = 1 / np.sqrt(2)
    inputs = [(1, 0), (0, 1), (r, r), (r, -r), (r, 1j * r), (r, -1j * r)]
    pm = process_map(schedule, noise, basis="full")
    total = 0.0
    for psi in inputs:
        v = embed_qubit_state(psi)
        rho = pm.apply(np.outer(v, v.conj()))
        total += state_fidelity(rho, target @ np.asarray(psi, dtype=complex))
    return total / len(inputs)
