import numpy as np
import pytest

from d2dmcast.channel import ChannelParams

ACCEPTANCE_LINES: list[str] = []


def make_gains(n: int, pairs: dict, default: float = 1e-16) -> np.ndarray:
    """Symmetric (n x n) gain matrix; unspecified links get ``default``."""
    g = np.full((n, n), default)
    for (a, b), v in pairs.items():
        g[a, b] = g[b, a] = v
    np.fill_diagonal(g, np.nan)
    return g


@pytest.fixture
def params():
    return ChannelParams(sigma_shadow_db=8.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
