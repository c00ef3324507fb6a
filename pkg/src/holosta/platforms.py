"""Hardware-facing helpers: dispersive two-transmon coupling strength and
level labels for the supported platforms.

Only magnitudes and labels are provided here. Within each listed subspace
the platform Hamiltonian has the same Lambda structure as the abstract
model, so schedules carry over unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .gates import GateSpec

__all__ = [
    "PLATFORMS",
    "TransmonParams",
    "PlatformMapping",
    "effective_two_qubit_coupling",
    "map_to_platform",
]

ABSTRACT_LEVELS = ("|0>", "|e>", "|1>")

_LEVELS = {
    "transmon-1q": ("|g>", "|e>", "|f>"),
    "transmon-2q": ("|fgg>", "|geg>", "|ggf>"),
    "nv-1q": ("|m=-1>", "|m=0>", "|m=+1>"),
    "nv-2q": ("|0,up>", "|a,up>", "|1,up>"),
}

_NOTES = {
    "transmon-1q": "qubit states |g>,|f>; auxiliary |e>",
    "transmon-2q": "single-excitation subspace; couplings are the effective g_k",
    "nv-1q": "electron-spin Zeeman sublevels",
    "nv-2q": "electron-spin levels conditioned on nuclear spin up",
}

PLATFORMS = tuple(_LEVELS)


@dataclass(frozen=True)
class TransmonParams:
    """Dispersive coupler parameters, all in rad/ns."""

    g: float
    omega_drive_amp: float
    alpha: float
    delta: float

    def __post_init__(self):
        if self.delta == 0.0 or self.delta == self.alpha:
            raise ValueError(
                f"detuning must differ from 0 and from alpha (delta={self.delta}, alpha={self.alpha})"
            )


def effective_two_qubit_coupling(p: TransmonParams) -> float:
    """``g Omega alpha / (sqrt(2) Delta (Delta - alpha))``."""
    denom = math.sqrt(2) * p.delta * (p.delta - p.alpha)
    if denom == 0.0:
        raise ValueError("zero denominator in the effective coupling")
    return p.g * p.omega_drive_amp * p.alpha / denom


@dataclass(frozen=True)
class PlatformMapping:
    platform: str
    levels: dict[str, str]
    gate: dict
    note: str

    def as_header(self) -> str:
        pairs = ",".join(f"{k}->{v}" for k, v in self.levels.items())
        return f"{self.platform} {pairs}"


def map_to_platform(spec: GateSpec, platform: str) -> PlatformMapping:
    """Assignment of the abstract ``(|0>, |e>, |1>)`` levels to platform levels."""
    try:
        labels = _LEVELS[platform]
    except KeyError:
        raise ValueError(f"unknown platform {platform!r}; expected one of {PLATFORMS}") from None
    return PlatformMapping(
        platform=platform,
        levels=dict(zip(ABSTRACT_LEVELS, labels)),
        gate=spec.as_dict(),
        note=_NOTES[platform],
    )
