import math
import time
import warnings

import pytest

from kellyext.dp import GridSpec, GridWarning, solve
from kellyext.gamble import EXAMPLE_GAMBLE

X_PAPER = 10**-3.3

# Wide enough that neither edge of the grid is reached by the characteristics
# of a 1000-round problem (n * v1 is about 61 nats).
WIDE_GRID = GridSpec(math.log(1e-60), math.log(1e8), 8001)


@pytest.fixture(scope="session")
def g():
    return EXAMPLE_GAMBLE


def _timed_solve(grid=None):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridWarning)
        sol = solve(EXAMPLE_GAMBLE, 1000, grid)
    sol.elapsed = time.perf_counter() - t0
    return sol


@pytest.fixture(scope="session")
def sol_default():
    """Default grid, 1000 rounds (narrower than the drift span, by design)."""
    return _timed_solve()


@pytest.fixture(scope="session")
def sol_wide():
    return _timed_solve(WIDE_GRID)


@pytest.fixture(scope="session")
def sol_small():
    """Coarse, short solve for quick structural tests."""
    return solve(EXAMPLE_GAMBLE, 20, GridSpec(math.log(1e-8), math.log(1e3), 801))


# -- acceptance reporting ------------------------------------------------------

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one pass/fail line per criterion; returns the boolean."""

    def record(tag: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
