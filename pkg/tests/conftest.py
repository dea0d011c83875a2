import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from frictioncone.wrench import ContactPoint, analytical_cone

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

A = np.array([-0.05, -0.05])
B = np.array([0.05, -0.05])
UP = np.array([0.0, 1.0])


@pytest.fixture
def contacts():
    return [ContactPoint(A, UP, 0.5), ContactPoint(B, UP, 0.5)]


@pytest.fixture
def cone_unit(contacts):
    """Two-contact 10 cm / mu = 0.5 cone with unit moment scale."""
    return analytical_cone(contacts, 0.0, 1.0)


@pytest.fixture
def cone_diag(contacts):
    """Same contacts, moments scaled by the 10 cm square's diagonal."""
    return analytical_cone(contacts, 0.0, 0.1 * math.sqrt(2.0))


# --- acceptance report ------------------------------------------------------------

ACCEPTANCE = {}


def report(n: int, ok: bool, detail: str):
    """Record and print one acceptance line; the summary repeats them in order."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE[n] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
