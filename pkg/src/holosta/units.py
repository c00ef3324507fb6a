"""Unit conventions and default physical constants.

hbar = 1, time in ns, every rate and coupling in rad/ns. A frequency quoted
as "2*pi x f" with f in MHz is stored as ``2*pi*f*1e-3`` rad/ns.
"""
from __future__ import annotations

import math

TWO_PI = 2.0 * math.pi

#: rad/ns per MHz of cyclic frequency
MHZ = TWO_PI * 1e-3
#: rad/ns per kHz of cyclic frequency
KHZ = TWO_PI * 1e-6

#: Eigenvalue scale of the invariant. Nothing dynamical depends on it.
LAMBDA = 1.0

#: Peak coupling (Hamiltonian matrix element) used for the reference gates.
RABI_CAP = 20.0 * MHZ
#: Decay and dephasing rates used for the reference gates.
DECAY_RATE = 5.0 * KHZ
DEPHASING_RATE = 5.0 * KHZ

#: Duration at which the theta = pi/2, A = 0.46 reference pulse is quoted.
REFERENCE_T = 29.5
REFERENCE_A = 0.46

#: Sample intervals per segment (must be a multiple of 4, see dynamics).
STEPS_PER_SEGMENT = 4000


def mhz(f: float) -> float:
    """Convert a cyclic frequency in MHz to rad/ns."""
    return f * MHZ


def khz(f: float) -> float:
    return f * KHZ
