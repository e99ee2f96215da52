import numpy as np
import pytest

from elecnet import ElectricalNetwork, build_network
from elecnet._accel import HAVE_NUMBA, use_backend


def random_network(rng, n, p=0.4, lo=0.1, hi=2.0, root=0):
    """Connected random network on vertices 0..n-1 (a random spanning tree plus extra edges)."""
    C = np.zeros((n, n))
    order = rng.permutation(n)
    for k in range(1, n):
        a, b = order[k], order[rng.integers(k)]
        C[a, b] = C[b, a] = rng.uniform(lo, hi)
    extra = np.triu(rng.random((n, n)) < p, 1) & (C == 0)
    w = rng.uniform(lo, hi, (n, n))
    C[extra] = w[extra]
    C = np.triu(C, 1)
    C = C + C.T
    return ElectricalNetwork.from_matrix(list(range(n)), C, root)


def random_subset_with_root(rng, net, min_size=1):
    n = len(net)
    others = [v for v in net.vertices if v != net.root]
    k = int(rng.integers(min_size - 1, n)) if n > 1 else 0
    pick = list(rng.choice(others, size=k, replace=False)) if k else []
    return [net.root] + [int(v) for v in pick]


@pytest.fixture
def triangle():
    return build_network("abc", [("a", "b", 1), ("b", "c", 1), ("a", "c", 1)], "a")


@pytest.fixture
def path3():
    return build_network("abc", [("a", "b", 1), ("b", "c", 1)], "a")


@pytest.fixture
def two():
    return build_network("ab", [("a", "b", 1)], "a")


BACKENDS = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def each_backend(request):
    with use_backend(request.param):
        yield request.param


# -- acceptance summary ----------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
