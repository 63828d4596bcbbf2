import numpy as np
import pytest

from gamecoding import UtilityPair, stackelberg_solve

ETA_GRID = 2 + 0.25 * np.arange(25)

EXAMPLE1 = ("-MSE + 25*PA", "log(MSE) + 0.75*log(PA)")
EXAMPLE2 = ("PA/sqrt(MSE)", "log(MSE) + 0.25*log(PA)")
EXAMPLE3 = ("-MSE + PA", "log(MSE) + 0.25*log(PA + 0.3)")


@pytest.fixture(scope="session")
def pairs():
    return {name: UtilityPair(*p) for name, p in (("ex1", EXAMPLE1), ("ex2", EXAMPLE2), ("ex3", EXAMPLE3))}


@pytest.fixture(scope="session")
def solutions(pairs):
    return {name: stackelberg_solve(ETA_GRID, pair) for name, pair in pairs.items()}


# one status line per acceptance criterion, printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
