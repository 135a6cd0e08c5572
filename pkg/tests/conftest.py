import numpy as np
import pytest

from sociality.network import Network


@pytest.fixture
def triangle():
    return Network.from_edges(3, [(0, 1), (0, 2), (1, 2)])


@pytest.fixture
def path4():
    return Network.from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def small_net():
    """n=12 network with some structure, drawn once from a fixed stream."""
    rng = np.random.default_rng(20240611)
    n = 12
    rows, cols = np.triu_indices(n, 1)
    d = rng.normal(0, 0.7, n)
    p = 1 / (1 + np.exp(-(-0.8 + d[rows] + d[cols])))
    return Network(n, (rng.random(p.size) < p).astype(np.int8))


def random_network(rng, n, p=0.3):
    return Network(n, (rng.random(n * (n - 1) // 2) < p).astype(np.int8))


# acceptance results, printed once at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {num}: {line}")
