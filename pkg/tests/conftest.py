import numpy as np
import pytest

from jacobi_scatter.families import test_operators, tune_resonance
from jacobi_scatter.lattice import JacobiOperator


@pytest.fixture(scope="session")
def operators():
    """Free, three single-site and ten seeded random compact operators."""
    return test_operators()


@pytest.fixture(scope="session")
def tuned():
    return tune_resonance()


@pytest.fixture(scope="session")
def free():
    return JacobiOperator()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS = []


@pytest.fixture(scope="session")
def verdict_line():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, ok, detail):
        _VERDICTS.append((number, f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
