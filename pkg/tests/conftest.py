from __future__ import annotations

import pytest

from screenest import (
    ScreeningInstance,
    build_grid,
    gaussian_density,
    half_squared_norm_cost,
    quadratic_curve,
    uniform_density,
)

# filled by the acceptance tests and echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def make_instance(A: float, n: int, density=None, s: float | None = None, mode: str = "chord") -> ScreeningInstance:
    curve = quadratic_curve(A)
    cost = half_squared_norm_cost()
    grid = build_grid(curve, cost, mode, n, s=s)
    return ScreeningInstance(curve, cost, density or uniform_density(), grid)


@pytest.fixture(scope="session")
def base():
    return make_instance(1 / 6, 28)


@pytest.fixture(scope="session")
def steep():
    return make_instance(1 / 2, 28)


@pytest.fixture(scope="session")
def gaussian():
    return gaussian_density((0.5, 0.5), 0.5)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
