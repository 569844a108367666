import numpy as np
import pytest

from ggad.graph import build_graph


def random_graph(seed, n=20, p=0.2, f=8, labels=False):
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    x = rng.normal(size=(n, f))
    y = (rng.random(n) < 0.2).astype(int) if labels else None
    return build_graph(edges, x, y)


def dense_normalized(g):
    """Brute-force D~^-1/2 (A + I) D~^-1/2 from the edge list."""
    n = g.num_nodes
    a = np.zeros((n, n))
    for u, v in g.edge_array():
        a[u, v] = a[v, u] = 1.0
    a_t = a + np.eye(n)
    d = a_t.sum(axis=1)
    return a_t / np.sqrt(np.outer(d, d))


def bfs_closure(g, seeds, k):
    """Naive BFS frontier union."""
    seen = set(int(s) for s in seeds)
    frontier = set(seen)
    for _ in range(k):
        nxt = set()
        for v in frontier:
            nxt.update(int(u) for u in g.neighbors(v))
        frontier = nxt - seen
        seen |= frontier
    return sorted(seen)


@pytest.fixture
def small_graph():
    return random_graph(0)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record(number, passed, detail):
    ACCEPTANCE[number] = (passed, detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
