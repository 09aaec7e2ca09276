import itertools

import numpy as np
import pytest

from fleetgroup.fleet_data import EntityDataset, FleetDataset
from fleetgroup.graph import AdjacencyGraph


def line_fleet(slopes, n_obs=20, noise=0.0, seed=0, intercepts=None):
    """Fleet of lines y = a*x + b (+ noise) on x in [0, 10]."""
    rng = np.random.default_rng(seed)
    intercepts = np.zeros(len(slopes)) if intercepts is None else intercepts
    ents = []
    for i, (a, b) in enumerate(zip(slopes, intercepts)):
        x = rng.uniform(0, 10, size=n_obs)
        y = a * x + b + noise * rng.standard_normal(n_obs)
        ents.append(EntityDataset(f"e{i}", x.reshape(-1, 1), y))
    return FleetDataset(tuple(ents))


def random_connected_graph(rng, n, p=0.5):
    """Erdos-Renyi graph on n vertices, redrawn until connected."""
    while True:
        a = np.triu((rng.random((n, n)) < p).astype(int), 1)
        a = a + a.T
        if _connected(a):
            return AdjacencyGraph(a)


def _connected(a):
    n = a.shape[0]
    seen, stack = {0}, [0]
    while stack:
        v = stack.pop()
        for w in np.flatnonzero(a[v]):
            if w not in seen:
                seen.add(int(w))
                stack.append(int(w))
    return len(seen) == n


def set_partitions(items):
    """Every partition of ``items`` (Bell-number many)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first, *part[i]]] + part[i + 1:]
        yield [[first], *part]


def brute_force_max_modularity(graph):
    from fleetgroup.community import modularity

    n = graph.n
    best = -np.inf
    for part in set_partitions(list(range(n))):
        c = np.empty(n, dtype=int)
        for g, members in enumerate(part):
            c[members] = g
        best = max(best, modularity(graph, c))
    return best


def two_triangles():
    return AdjacencyGraph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.summary_lines():
            terminalreporter.write_line(line)
