import numpy as np
import pytest

from csflow.curves import ellipse, perturbed_circle, random_low_entropy
from csflow.flow import FlowConfig, evolve
from csflow.reference import circle

RANDOM_SEEDS = (0, 1, 2, 3, 4)


@pytest.fixture(scope="session")
def circle_traj():
    return evolve(circle(2, 1.0, 1, 256), FlowConfig(stop_kappa_sq=100.0))


@pytest.fixture(scope="session")
def ellipse_traj():
    # dense snapshots early so the short-time estimates have data
    times = tuple(np.linspace(0.002, 1.0 / 32.0, 16))
    cfg = FlowConfig(stop_kappa_sq=1e4, snapshot_stride=200, snapshot_times=times)
    return evolve(ellipse(2.0, 1.0, 2, 256), cfg)


@pytest.fixture(scope="session")
def nonplanar_traj():
    return evolve(perturbed_circle((0.2,), (3,), 4, 256), FlowConfig(stop_kappa_sq=1e3))


@pytest.fixture(scope="session")
def perturbed_traj():
    return evolve(perturbed_circle((0.1, 0.1), (2, 3), 4, 256), FlowConfig(stop_kappa_sq=1e4))


@pytest.fixture(scope="session")
def random_runs():
    out = []
    for seed in RANDOM_SEEDS:
        c = random_low_entropy(5, seed)
        out.append((c, evolve(c, FlowConfig(stop_kappa_sq=1e4))))
    return out


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, title, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
