import numpy as np
import pytest

from hypercanon.curve import CurveModel
from hypercanon.metric import MetricEvaluator

GENUS3_ROOTS = [-1.3, -0.6 + 0.4j, 0.1 - 0.5j, 0.5 + 0.9j, 1.2, 0.3 + 0.1j, -0.4 - 1.1j, 1.6 - 0.7j]
GENUS2_ROOTS = [-1.1 + 0.2j, -0.3 - 0.8j, 0.2 + 0.7j, 0.9 - 0.1j, 1.4 + 0.9j, -0.8 + 1.1j]


def random_curve(rng, g, radius=1.5, min_gap=0.3):
    """Branch points uniform in a disk, redrawn until pairwise gaps exceed ``min_gap``."""
    n = 2 * g + 2
    while True:
        z = radius * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
        d = np.abs(z[:, None] - z[None, :])
        np.fill_diagonal(d, np.inf)
        if d.min() > min_gap:
            return CurveModel.from_roots(list(z))


def generic_points(curve, n, seed, margin=2.0):
    """Deterministic x-values at least ``margin * r_chart`` away from the branch set."""
    rng = np.random.default_rng(seed)
    R = float(np.max(np.abs(curve.lam))) + 1.0
    out = []
    while len(out) < n:
        z = complex(rng.uniform(-R, R), rng.uniform(-R, R))
        if curve.distance_to_branch(z) > margin * curve.r_chart:
            out.append(z)
    return out


def roots_of_unity(n):
    return list(np.exp(2j * np.pi * np.arange(n) / n))


@pytest.fixture(scope="session")
def sextic():
    c = CurveModel.from_roots(roots_of_unity(6))
    return MetricEvaluator.from_curve(c)


@pytest.fixture(scope="session")
def octic():
    c = CurveModel.from_roots(roots_of_unity(8))
    return MetricEvaluator.from_curve(c)


@pytest.fixture(scope="session")
def quartic():
    c = CurveModel.from_roots(roots_of_unity(4))
    return MetricEvaluator.from_curve(c)


@pytest.fixture(scope="session")
def genus2():
    return MetricEvaluator.from_curve(CurveModel.from_roots(GENUS2_ROOTS))


@pytest.fixture(scope="session")
def genus3():
    return MetricEvaluator.from_curve(CurveModel.from_roots(GENUS3_ROOTS))


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one acceptance verdict line; all lines are echoed in the terminal summary."""

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
