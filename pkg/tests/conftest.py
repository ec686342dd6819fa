import numpy as np
import pytest

from edge2vec.hetgraph import EdgeRecord, build_graph


def make_graph(edges, directed=False):
    """edges: iterable of (src, etype, dst[, weight])."""
    return build_graph([EdgeRecord(*e) for e in edges], directed=directed)


def step_oracle(edges, prev, curr, prev_t, M, p, q):
    """Next-step distribution by direct enumeration over a plain adjacency dict.

    ``edges`` are undirected (u, t, v, w) tuples over labels; ``M`` is a dict
    keyed by (type, type). Returns {(neighbor, type): probability}.
    """
    adj = {}
    for u, t, v, *w in edges:
        w = w[0] if w else 1.0
        adj.setdefault(u, {})[(v, t)] = adj.get(u, {}).get((v, t), 0.0) + w
        adj.setdefault(v, {})[(u, t)] = adj.get(v, {}).get((u, t), 0.0) + w
    prev_nbrs = {n for n, _ in adj[prev]}
    scores = {}
    for (k, t), w in adj[curr].items():
        if k == prev:
            a = 1 / p
        elif k in prev_nbrs:
            a = 1.0
        else:
            a = 1 / q
        scores[(k, t)] = w * M[(prev_t, t)] * a
    total = sum(scores.values())
    return {key: s / total for key, s in scores.items()}


@pytest.fixture
def abcd_graph():
    # A-B (t1), B-C (t2), B-D (t1)
    return make_graph([("A", "t1", "B"), ("B", "t2", "C"), ("B", "t1", "D")])


@pytest.fixture
def rng():
    return np.random.default_rng(0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
