import numpy as np
import pytest

from rotsn.grid import Grid2D
from rotsn.groundstate import solve_radial_ground_state
from rotsn.logconv import make_plan


@pytest.fixture(scope="session")
def profile():
    return solve_radial_ground_state()


@pytest.fixture(scope="session")
def grid256():
    return Grid2D(256, 16.0)


@pytest.fixture(scope="session")
def plan256(grid256):
    return make_plan(grid256, "lattice")


@pytest.fixture(scope="session")
def grid128():
    return Grid2D(128, 12.0)


@pytest.fixture(scope="session")
def plan128(grid128):
    return make_plan(grid128, "lattice")


def gaussian(g, sigma=1.0, center=(0.0, 0.0)):
    x1, x2 = g.mesh
    return np.exp(-((x1 - center[0]) ** 2 + (x2 - center[1]) ** 2) / (2 * sigma**2))


VERDICTS = []


def record_verdict(label: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)
