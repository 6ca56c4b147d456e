import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ucqaoa.ising import IsingGraph  # noqa: E402
from ucqaoa.model import UcpInstance, UnitSpec  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def random_graph(n, rng, density=0.5, bias_scale=0.5, offset=0.0):
    couplings = {
        (i, j): float(rng.normal()) for i in range(n) for j in range(i + 1, n) if rng.random() < density
    }
    return IsingGraph.from_terms(n, rng.normal(size=n) * bias_scale, couplings, offset)


def random_instance(rng, n_units, horizon):
    units = tuple(
        UnitSpec(
            linear_cost=float(rng.uniform(0, 5)),
            startup_cost=float(rng.uniform(0, 10)),
            max_power=float(rng.uniform(1, 10)),
            min_up=int(rng.integers(1, horizon + 2)),
            min_down=int(rng.integers(1, horizon + 2)),
            initial_on=int(rng.integers(0, 2)),
        )
        for _ in range(n_units)
    )
    demand = tuple(float(d) for d in rng.uniform(0, 15, horizon))
    return UcpInstance(units=units, horizon=horizon, demand=demand)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
