from __future__ import annotations

import pytest

from lattice_critic.core import DEFAULT_CTX, EvalContext
from lattice_critic.regions import find_islands


@pytest.fixture(scope="session")
def ctx() -> EvalContext:
    return DEFAULT_CTX


@pytest.fixture(scope="session")
def dctx() -> EvalContext:
    """Double-precision context: scans refine with the vectorised engine only."""
    return EvalContext(precision_bits=53)


@pytest.fixture(scope="session")
def islands_0_100():
    return find_islands(0, 100)


@pytest.fixture(scope="session")
def islands_0_200_inner():
    return find_islands(0, 200, with_inner=True)


# --------------------------------------------------------------------------
# acceptance report: one line per criterion, printed after the test summary

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(label: str, passed: bool | None, detail: str) -> None:
        status = "REPORT" if passed is None else "PASS" if passed else "FAIL"
        line = f"{label:<28} {status:<6} {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
