import numpy as np
import pytest

from spground import RadialField, make_grid

_ACCEPTANCE_LINES = []


def record_acceptance(number, label, ok, detail=""):
    """Collect one pass/fail line per acceptance criterion.

    The lines are echoed into the terminal summary so they survive
    pytest's output capture.
    """
    line = f"ACCEPTANCE {number} {label}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" {detail}"
    _ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.line(line)


@pytest.fixture(scope="session")
def grid600():
    return make_grid(12.0, 600)


@pytest.fixture(scope="session")
def grid2000():
    return make_grid(20.0, 2000)


def gaussian(grid, width=1.0, center=0.0, amplitude=1.0):
    r = grid.nodes
    return RadialField(grid, amplitude * np.exp(-((r - center) ** 2) / width**2))


@pytest.fixture(scope="session")
def corpus(grid600):
    """Deterministic battery of nonzero fields with varied shapes."""
    g = grid600
    r = g.nodes
    fields = [
        gaussian(g),
        gaussian(g, width=0.5),
        gaussian(g, width=2.0, amplitude=0.3),
        gaussian(g, center=2.5),
        RadialField(g, r**2 * np.exp(-r)),
        RadialField(g, np.exp(-0.5 * r**2) * np.cos(2.0 * r)),
        RadialField(g, 1.0 / (1.0 + r**2) ** 2),
    ]
    rng = np.random.default_rng(11)
    for _ in range(5):
        width = rng.uniform(0.5, 2.5)
        center = rng.uniform(0.0, 3.0)
        amp = rng.uniform(0.2, 2.0)
        fields.append(gaussian(g, width=width, center=center, amplitude=amp))
    return fields
