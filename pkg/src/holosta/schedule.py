"""Sampled two-segment pulse schedules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Protocol

import numpy as np

from .invariant import LambdaHamiltonian

__all__ = ["CouplingSource", "PulseSchedule", "ScheduleError"]


class ScheduleError(ValueError):
    pass


class CouplingSource(Protocol):
    """Closed-form couplings, used to evaluate a schedule between samples."""

    def couplings(self, t, segment: int) -> tuple[Any, Any]: ...


@dataclass(frozen=True)
class _Rescaled:
    """``source`` with time stretched by ``stretch`` and channels scaled."""

    source: CouplingSource
    stretch: float = 1.0
    scale0: float = 1.0
    scale1: float = 1.0

    def couplings(self, t, segment: int):
        o0, o1 = self.source.couplings(np.asarray(t) / self.stretch, segment)
        k = 1.0 / self.stretch
        return o0 * (k * self.scale0), o1 * (k * self.scale1)


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    """Couplings sampled on a uniform grid over ``[0, T]``.

    Basis ordering is ``(|0>, |e>, |1>)``. The grid has ``2 n + 1`` points
    and the middle sample sits at ``T/2``; it closes segment 1 and opens
    segment 2. Each segment has its own drive phase on the |1>-|e> channel
    (``phi_segment*``) and on the |0>-|e> channel (``phase0_segment*``,
    zero for the noncyclic construction).

    ``source`` optionally evaluates the couplings between grid points;
    sampled-only schedules (e.g. read back from disk) leave it ``None``.
    """

    t: np.ndarray
    omega0: np.ndarray
    omega1: np.ndarray
    phi_segment1: float
    phi_segment2: float
    phase0_segment1: float = 0.0
    phase0_segment2: float = 0.0
    scheme: str = "noncyclic"
    metadata: dict = field(default_factory=dict)
    source: CouplingSource | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        o0 = np.asarray(self.omega0, dtype=float)
        o1 = np.asarray(self.omega1, dtype=float)
        if t.ndim != 1 or t.shape != o0.shape or t.shape != o1.shape:
            raise ScheduleError("t, omega0 and omega1 must be 1-d arrays of equal length")
        if len(t) < 5 or len(t) % 2 == 0:
            raise ScheduleError("need an odd number (>= 5) of samples")
        steps = np.diff(t)
        if np.any(steps <= 0):
            raise ScheduleError("time grid must be strictly increasing")
        if not np.allclose(steps, steps.mean(), rtol=1e-9, atol=0.0):
            raise ScheduleError("time grid must be uniform")
        for name, arr in (("t", t), ("omega0", o0), ("omega1", o1)):
            if not np.all(np.isfinite(arr)):
                raise ScheduleError(f"{name} contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    # -- geometry --

    @property
    def T(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def dt(self) -> float:
        return self.T / (len(self.t) - 1)

    @property
    def n_per_segment(self) -> int:
        return (len(self.t) - 1) // 2

    def segments(self):
        """Yield ``(index_slice, phase0, phi)`` for the two segments."""
        n = self.n_per_segment
        yield slice(0, n + 1), self.phase0_segment1, self.phi_segment1
        yield slice(n, 2 * n + 1), self.phase0_segment2, self.phi_segment2

    def segment_of(self, t: float) -> int:
        return 1 if t <= self.t[self.n_per_segment] else 2

    def phases_at(self, t: float) -> tuple[float, float]:
        if self.segment_of(t) == 1:
            return self.phase0_segment1, self.phi_segment1
        return self.phase0_segment2, self.phi_segment2

    # -- evaluation --

    def couplings_at(self, t: float) -> tuple[float, float]:
        """Couplings at ``t``: exact on grid points, from ``source`` elsewhere."""
        k = (t - self.t[0]) / self.dt
        idx = int(round(k))
        if abs(k - idx) < 1e-9 and 0 <= idx < len(self.t):
            return float(self.omega0[idx]), float(self.omega1[idx])
        if self.source is None:
            raise ScheduleError(f"t={t} is off the sample grid and the schedule has no source")
        o0, o1 = self.source.couplings(t, self.segment_of(t))
        return float(o0), float(o1)

    def hamiltonian_at(self, t: float, eps0: float = 0.0, eps1: float = 0.0) -> np.ndarray:
        o0, o1 = self.couplings_at(t)
        p0, p1 = self.phases_at(t)
        return LambdaHamiltonian((1 + eps0) * o0, (1 + eps1) * o1, p1, p0).matrix()

    def peak_coupling(self, norm: str = "element") -> float:
        """Peak drive strength.

        ``element``: largest Hamiltonian matrix element, max |omega_k|/2.
        ``channel``: max |omega_k|. ``total``: max sqrt(omega0^2 + omega1^2).
        """
        if norm == "element":
            return 0.5 * float(max(np.abs(self.omega0).max(), np.abs(self.omega1).max()))
        if norm == "channel":
            return float(max(np.abs(self.omega0).max(), np.abs(self.omega1).max()))
        if norm == "total":
            return float(np.hypot(self.omega0, self.omega1).max())
        raise ValueError(f"unknown norm {norm!r}")

    # -- transforms --

    def rescaled(self, stretch: float) -> "PulseSchedule":
        """``t -> stretch * t`` and ``omega -> omega / stretch`` (area preserving)."""
        if not stretch > 0:
            raise ScheduleError(f"stretch must be positive, got {stretch}")
        if stretch == 1.0:
            return self
        src = None if self.source is None else _Rescaled(self.source, stretch=stretch)
        return replace(
            self,
            t=self.t * stretch,
            omega0=self.omega0 / stretch,
            omega1=self.omega1 / stretch,
            source=src,
            metadata=dict(self.metadata),
        )

    def with_rabi_errors(self, eps0: float, eps1: float) -> "PulseSchedule":
        """Static multiplicative amplitude errors on both channels."""
        src = None
        if self.source is not None:
            src = _Rescaled(self.source, scale0=1 + eps0, scale1=1 + eps1)
        return replace(
            self,
            omega0=self.omega0 * (1 + eps0),
            omega1=self.omega1 * (1 + eps1),
            source=src,
            metadata=dict(self.metadata),
        )

    def same_samples(self, other: "PulseSchedule", atol: float = 0.0) -> bool:
        """Sample-wise equality of grid, couplings and phases."""
        if len(self.t) != len(other.t):
            return False
        arrays = all(
            np.allclose(a, b, rtol=0.0, atol=atol)
            for a, b in (
                (self.t, other.t),
                (self.omega0, other.omega0),
                (self.omega1, other.omega1),
            )
        )
        phases = np.allclose(
            [self.phi_segment1, self.phi_segment2, self.phase0_segment1, self.phase0_segment2],
            [other.phi_segment1, other.phi_segment2, other.phase0_segment1, other.phase0_segment2],
            rtol=0.0,
            atol=atol,
        )
        return arrays and phases

    @classmethod
    def zeros(cls, T: float, steps_per_segment: int = 4) -> "PulseSchedule":
        t = np.linspace(0.0, T, 2 * steps_per_segment + 1)
        z = np.zeros_like(t)
        return cls(t, z, z.copy(), 0.0, math.pi)
