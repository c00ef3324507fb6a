from __future__ import annotations

import math

import pytest

from holosta.gates import GateSpec, compile_noncyclic_gate
from holosta.sweeps import fidelity_schedule

# criterion number -> summary line, filled by test_acceptance
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


@pytest.fixture(scope="session")
def rx90():
    return GateSpec(math.pi / 2, math.pi / 2)


@pytest.fixture(scope="session")
def reference_schedule(rx90):
    """theta = pi/2, A = 0.46, T = 29.5 ns, uncapped."""
    return compile_noncyclic_gate(rx90, 0.46, 29.5)


@pytest.fixture(scope="session")
def capped_rx90(rx90):
    return fidelity_schedule(rx90)


@pytest.fixture(scope="session")
def capped_rx45():
    return fidelity_schedule(GateSpec(math.pi / 4, math.pi / 2))
