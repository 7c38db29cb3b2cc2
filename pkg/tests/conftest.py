import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_convex_polygon(rng, m=None, scale=1.0, center=(0.0, 0.0)):
    """Shape-regular convex polygon: jittered regular ``m``-gon, counterclockwise."""
    m = m or int(rng.integers(3, 9))
    ang = 2 * np.pi * (np.arange(m) + rng.uniform(-0.3, 0.3, m)) / m + rng.uniform(0, 2 * np.pi)
    return np.asarray(center) + scale * np.column_stack([np.cos(ang), np.sin(ang)])


def degenerate_octagon(x0=0.0, y0=0.0, s=1.0):
    """Square with edge midpoints inserted as extra vertices."""
    c = [(0, 0), (0.5, 0), (1, 0), (1, 0.5), (1, 1), (0.5, 1), (0, 1), (0, 0.5)]
    return np.array([(x0 + s * a, y0 + s * b) for a, b in c], float)


UNIT_SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_line(request, capsys):
    """Record and echo the one-line verdict of an acceptance criterion."""
    def emit(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        request.config.stash.setdefault(_ACCEPTANCE, []).append(line)
        with capsys.disabled():
            print("\n" + line)
        return passed
    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
