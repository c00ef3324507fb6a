"""Lambda-system Hamiltonian, its Lewis-Riesenfeld invariant and the
inverse-engineering map from invariant angles to drive couplings.

Every matrix in this module is written in the basis ordering
``(|0>, |e>, |1>)``. Couplings are angular frequencies in rad/ns and
times are in ns.

The gate path is split into two mirrored segments, ``[0, T/2]`` and
``[T/2, T]``. The polar angle ``gamma`` vanishes at all three segment
boundaries, where the coupling formula is 0 * inf; the profiles used
here make ``beta_dot`` vanish to third order there, so the limit is zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import NumericalError
from .units import LAMBDA

__all__ = [
    "ProfileDomainError",
    "SingularityError",
    "QuadratureError",
    "LambdaHamiltonian",
    "InvariantParams",
    "DressedFrame",
    "NoncyclicShape",
    "gamma_profile",
    "gamma_rate",
    "beta_profile",
    "beta_rate",
    "couplings_from_invariant",
    "invariant_at",
    "invariant_time_derivative",
    "dressed_states_at",
    "invariant_residual",
    "lr_phase_integral",
    "lr_phase",
    "lr_propagator",
]

# below this |gamma| the cot is replaced by its series
_SERIES_GAMMA = 1e-6


class ProfileDomainError(ValueError):
    """Time outside the requested segment, or invalid profile parameters."""


class SingularityError(NumericalError):
    """sin(gamma) = 0 while beta_dot does not vanish."""


class QuadratureError(NumericalError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class LambdaHamiltonian:
    """Resonant Lambda-system drive.

    ``phi0`` is an optional phase on the |0>-|e> channel; it is zero for the
    noncyclic schedules and only used by the single-loop baseline.
    """

    omega0: float
    omega1: float
    phi: float
    phi0: float = 0.0

    def matrix(self) -> np.ndarray:
        h = np.zeros((3, 3), dtype=complex)
        h[0, 1] = 0.5 * self.omega0 * np.exp(1j * self.phi0)
        h[1, 2] = 0.5 * self.omega1 * np.exp(-1j * self.phi)
        h[1, 0] = np.conj(h[0, 1])
        h[2, 1] = np.conj(h[1, 2])
        return h


@dataclass(frozen=True)
class InvariantParams:
    """Angles of the invariant and their time derivatives.

    Fields may be floats or equally shaped arrays; every function taking
    an ``InvariantParams`` broadcasts over them.
    """

    gamma: float
    beta: float
    gamma_dot: float
    beta_dot: float
    phi: float
    lam: float = LAMBDA

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"invariant scale must be positive, got {self.lam}")


@dataclass(frozen=True)
class DressedFrame:
    phi0: np.ndarray
    phi_plus: np.ndarray
    phi_minus: np.ndarray
    eigenvalues: tuple[float, float, float]

    def matrix(self) -> np.ndarray:
        """Columns ``(|phi_0>, |phi_+>, |phi_->)``."""
        return np.column_stack([self.phi0, self.phi_plus, self.phi_minus])


# -- profiles ---------------------------------------------------------------


def _segment_coords(t, T: float, segment: int):
    """Return ``(s, r)``: distance from segment start and to segment end."""
    if T <= 0:
        raise ProfileDomainError(f"T must be positive, got {T}")
    t = np.asarray(t, dtype=float)
    half = 0.5 * T
    tol = 1e-12 * T
    if segment == 1:
        lo, hi = 0.0, half
    elif segment == 2:
        lo, hi = half, T
    else:
        raise ProfileDomainError(f"segment must be 1 or 2, got {segment!r}")
    if np.any(t < lo - tol) or np.any(t > hi + tol):
        raise ProfileDomainError(
            f"t outside segment {segment} = [{lo}, {hi}]: "
            f"min {t.min():.6g}, max {t.max():.6g}"
        )
    s = np.clip(t - lo, 0.0, half)
    r = np.clip(hi - t, 0.0, half)
    return s, r


def _check_amplitude(A: float) -> None:
    if not A > 0:
        raise ProfileDomainError(f"A must be positive, got {A}")


def gamma_profile(t, A: float, T: float, segment: int):
    """Quartic polar-angle profile: ``-A`` at ``T/4`` and ``+A`` at ``3T/4``."""
    _check_amplitude(A)
    s, r = _segment_coords(t, T, segment)
    sign = -1.0 if segment == 1 else 1.0
    return sign * A / (T / 4) ** 4 * s**2 * r**2


def gamma_rate(t, A: float, T: float, segment: int):
    """Analytic time derivative of :func:`gamma_profile`."""
    _check_amplitude(A)
    s, r = _segment_coords(t, T, segment)
    sign = -1.0 if segment == 1 else 1.0
    return sign * A / (T / 4) ** 4 * 2.0 * s * r * (r - s)


def beta_profile(t, theta: float, T: float, segment: int):
    """Degree-7 azimuth profile, ``theta/4`` at the outer boundaries and 0 at T/2."""
    s, r = _segment_coords(t, T, segment)
    half = 0.5 * T
    x = (r if segment == 1 else s) / half
    return 35.0 * theta * (x**4 / 4 - 3 * x**5 / 5 + x**6 / 2 - x**7 / 7)


def beta_rate(t, theta: float, T: float, segment: int):
    """Analytic derivative of :func:`beta_profile`; vanishes as s^3 r^3."""
    s, r = _segment_coords(t, T, segment)
    half = 0.5 * T
    sign = -1.0 if segment == 1 else 1.0
    return sign * 35.0 * theta / half * (s * r / half**2) ** 3


def _beta_rate_over_gamma(t, theta: float, A: float, T: float, segment: int):
    # common s^2 r^2 factor cancelled by hand; same sign in both segments
    s, r = _segment_coords(t, T, segment)
    half = 0.5 * T
    return 35.0 * theta * (T / 4) ** 4 * s * r / (A * half**7)


@dataclass(frozen=True)
class NoncyclicShape:
    """Closed-form two-segment trajectory of the invariant angles.

    ``phi`` is the drive phase of the first segment; the second segment
    runs at ``phi + pi``.
    """

    theta: float
    phi: float
    A: float
    T: float

    def segment_of(self, t) -> np.ndarray:
        return np.where(np.asarray(t) <= 0.5 * self.T, 1, 2)

    def params_at(self, t, segment: int | None = None) -> InvariantParams:
        """Invariant parameters at ``t``; the midpoint defaults to segment 1."""
        seg = int(self.segment_of(t)) if segment is None else segment
        phi = self.phi if seg == 1 else self.phi + math.pi
        return InvariantParams(
            gamma=gamma_profile(t, self.A, self.T, seg),
            beta=beta_profile(t, self.theta, self.T, seg),
            gamma_dot=gamma_rate(t, self.A, self.T, seg),
            beta_dot=beta_rate(t, self.theta, self.T, seg),
            phi=phi,
        )

    def couplings(self, t, segment: int) -> tuple[np.ndarray, np.ndarray]:
        return couplings_from_invariant(self.params_at(t, segment))


# -- inverse engineering ----------------------------------------------------


def couplings_from_invariant(p: InvariantParams) -> tuple[np.ndarray, np.ndarray]:
    """Drive couplings ``(omega0, omega1)`` that keep ``I(t)`` invariant.

    Where ``sin(gamma) == 0`` the ``beta_dot * cot(gamma)`` term takes its
    limit, zero, provided ``beta_dot`` vanishes there too.
    """
    gamma = np.asarray(p.gamma, dtype=float)
    beta = np.asarray(p.beta, dtype=float)
    gdot = np.asarray(p.gamma_dot, dtype=float)
    bdot = np.asarray(p.beta_dot, dtype=float)
    gamma, beta, gdot, bdot = np.broadcast_arrays(gamma, beta, gdot, bdot)

    sing = np.sin(gamma)
    zero = sing == 0.0
    if np.any(zero & (bdot != 0.0)):
        raise SingularityError("sin(gamma) = 0 with nonzero beta_dot")
    small = ~zero & (np.abs(gamma) < _SERIES_GAMMA)
    with np.errstate(divide="ignore", invalid="ignore"):
        bcot = np.where(
            small,
            bdot / gamma * (1.0 - gamma**2 / 3.0),
            bdot * np.cos(gamma) / sing,
        )
    bcot = np.where(zero, 0.0, bcot)
    if not np.all(np.isfinite(bcot)):
        raise SingularityError("beta_dot * cot(gamma) overflowed")

    omega0 = 2.0 * (bcot * np.sin(beta) + gdot * np.cos(beta))
    omega1 = 2.0 * (bcot * np.cos(beta) - gdot * np.sin(beta))
    if omega0.ndim == 0:
        return float(omega0), float(omega1)
    return omega0, omega1


def invariant_at(p: InvariantParams) -> np.ndarray:
    """The invariant ``I(t)`` as a 3x3 Hermitian matrix (scalar params only)."""
    cg, sg = math.cos(p.gamma), math.sin(p.gamma)
    cb, sb = math.cos(p.beta), math.sin(p.beta)
    ep = np.exp(1j * p.phi)
    m = np.array(
        [
            [0.0, cg * sb, -1j * sg / ep],
            [cg * sb, 0.0, cg * cb / ep],
            [1j * sg * ep, cg * cb * ep, 0.0],
        ],
        dtype=complex,
    )
    return 0.5 * p.lam * m


def invariant_time_derivative(p: InvariantParams) -> np.ndarray:
    """Explicit time derivative of ``I`` through ``gamma(t)`` and ``beta(t)``."""
    cg, sg = math.cos(p.gamma), math.sin(p.gamma)
    cb, sb = math.cos(p.beta), math.sin(p.beta)
    ep = np.exp(1j * p.phi)
    d_gamma = np.array(
        [
            [0.0, -sg * sb, -1j * cg / ep],
            [-sg * sb, 0.0, -sg * cb / ep],
            [1j * cg * ep, -sg * cb * ep, 0.0],
        ],
        dtype=complex,
    )
    d_beta = np.array(
        [
            [0.0, cg * cb, 0.0],
            [cg * cb, 0.0, -cg * sb / ep],
            [0.0, -cg * sb * ep, 0.0],
        ],
        dtype=complex,
    )
    return 0.5 * p.lam * (p.gamma_dot * d_gamma + p.beta_dot * d_beta)


def dressed_states_at(p: InvariantParams) -> DressedFrame:
    """Eigenvectors of :func:`invariant_at` for eigenvalues 0, +lam/2, -lam/2."""
    cg, sg = math.cos(p.gamma), math.sin(p.gamma)
    cb, sb = math.cos(p.beta), math.sin(p.beta)
    ep = np.exp(1j * p.phi)
    v0 = np.array([cg * cb, -1j * sg, -cg * sb * ep], dtype=complex)

    def bright(sign: float) -> np.ndarray:
        return np.array(
            [sg * cb + sign * 1j * sb, 1j * cg, (-sg * sb + sign * 1j * cb) * ep],
            dtype=complex,
        ) / math.sqrt(2.0)

    return DressedFrame(v0, bright(1.0), bright(-1.0), (0.0, 0.5 * p.lam, -0.5 * p.lam))


def invariant_residual_matrix(p: InvariantParams, hamiltonian: np.ndarray) -> np.ndarray:
    """``dI/dt + (1/i) [I, H]``, zero when ``H`` is consistent with ``p``."""
    inv = invariant_at(p)
    return invariant_time_derivative(p) - 1j * (inv @ hamiltonian - hamiltonian @ inv)


def invariant_residual(
    t: float,
    schedule,
    params: Callable[[float], InvariantParams] | InvariantParams,
) -> float:
    """Operator 2-norm of the invariance condition at time ``t``.

    ``params`` is either a callable trajectory ``t -> InvariantParams`` (for
    instance ``NoncyclicShape.params_at``) or the parameters at ``t``.
    ``schedule`` supplies the Hamiltonian via ``hamiltonian_at``.
    """
    p = params(t) if callable(params) else params
    h = schedule.hamiltonian_at(t)
    return float(np.linalg.norm(invariant_residual_matrix(p, h), ord=2))


# -- Lewis-Riesenfeld phases ------------------------------------------------


def lr_phase_integral(
    segment: int,
    t_end: float,
    theta: float,
    A: float,
    T: float,
    *,
    tol: float = 1e-12,
) -> float:
    """``int beta_dot / sin(gamma) dt`` from the start of ``segment`` to ``t_end``.

    The integrand is evaluated as ``(beta_dot/gamma) * (gamma/sin gamma)``
    with the first factor in cancelled closed form, so it is finite (and
    zero) at the boundaries.
    """
    _check_amplitude(A)
    start = 0.0 if segment == 1 else 0.5 * T
    _segment_coords(t_end, T, segment)
    if t_end <= start or theta == 0.0:
        return 0.0

    def integrand(t):
        ratio = _beta_rate_over_gamma(t, theta, A, T, segment)
        g = gamma_profile(t, A, T, segment)
        return float(ratio / np.sinc(g / math.pi))

    value, err, info = integrate.quad(
        integrand, start, t_end, epsabs=tol, epsrel=tol, limit=200, full_output=True
    )[:3]
    if not err <= max(1e3 * tol, 1e3 * tol * abs(value)):
        raise QuadratureError(
            f"quad did not converge on segment {segment}: value={value!r}, "
            f"error estimate={err!r}, evaluations={info['neval']}"
        )
    return float(value)


def lr_phase(segment: int, t_end: float, theta: float, A: float, T: float) -> tuple[float, float]:
    """LR phases ``(alpha_plus, alpha_minus)`` accumulated within ``segment``.

    ``alpha_0`` is identically zero and ``alpha_minus = -alpha_plus``.
    """
    integral = lr_phase_integral(segment, t_end, theta, A, T)
    return -integral, integral


def lr_propagator(shape: NoncyclicShape, t: float) -> np.ndarray:
    """Evolution operator from the dressed-state expansion, no time stepping.

    Within each segment ``U = sum_n exp(i alpha_n) |phi_n(t)><phi_n(start)|``;
    the two segments are chained at ``T/2``.
    """

    def segment_op(seg: int, start: float, end: float) -> np.ndarray:
        a_plus, a_minus = lr_phase(seg, end, shape.theta, shape.A, shape.T)
        f_end = dressed_states_at(shape.params_at(end, seg))
        f_start = dressed_states_at(shape.params_at(start, seg))
        phases = np.exp(1j * np.array([0.0, a_plus, a_minus]))
        return (f_end.matrix() * phases) @ f_start.matrix().conj().T

    half = 0.5 * shape.T
    if t <= half:
        return segment_op(1, 0.0, t)
    return segment_op(2, half, t) @ segment_op(1, 0.0, half)
