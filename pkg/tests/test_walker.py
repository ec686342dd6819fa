import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edge2vec.walker import (
    DeadEndError,
    WalkParams,
    alpha,
    generate_corpus,
    hetero_random_walk,
    read_corpus,
    sample_next,
    step_distribution,
    write_corpus,
)

from conftest import make_graph, step_oracle


@pytest.mark.parametrize("p,q,d,expected", [
    (1, 1, 0, 1.0),
    (0.25, 0.25, 2, 4.0),
    (2, 0.5, 1, 1.0),
    (0.5, 3, 0, 2.0),
])
def test_alpha(p, q, d, expected):
    assert alpha(p, q, d) == expected


@pytest.mark.parametrize("d", [-1, 3])
def test_alpha_rejects_distance(d):
    with pytest.raises(ValueError):
        alpha(1, 1, d)


def test_walk_params_bounds():
    assert WalkParams() == WalkParams(0.25, 0.25, 50, 1)
    for bad in [dict(p=0), dict(q=-1), dict(walk_length=1), dict(walks_per_node=0)]:
        with pytest.raises(ValueError):
            WalkParams(**bad)


def _abcd_matrix(g, m11, m12):
    M = np.ones((2, 2))
    t1, t2 = g.etype_index("t1"), g.etype_index("t2")
    M[t1, t1], M[t1, t2] = m11, m12
    return M


def _by_label(g, curr, probs):
    return {g.node_labels[n]: pr for (n, _, _), pr in zip(g.neighbors(curr), probs)}


@pytest.mark.parametrize("m11,m12,p,expected", [
    (1.0, 1.0, 1.0, {"A": 1 / 3, "C": 1 / 3, "D": 1 / 3}),
    (0.8, 0.4, 1.0, {"A": 0.4, "C": 0.2, "D": 0.4}),
    (0.8, 0.4, 0.25, {"A": 3.2 / 4.4, "C": 0.4 / 4.4, "D": 0.8 / 4.4}),
])
def test_step_distribution_examples(abcd_graph, m11, m12, p, expected):
    g = abcd_graph
    M = _abcd_matrix(g, m11, m12)
    probs = step_distribution(g, M, g.node_index("A"), g.node_index("B"), g.etype_index("t1"),
                              WalkParams(p=p, q=1.0))
    got = _by_label(g, g.node_index("B"), probs)
    assert got == pytest.approx(expected, abs=1e-12)
    oracle = step_oracle([("A", "t1", "B"), ("B", "t2", "C"), ("B", "t1", "D")], "A", "B", "t1",
                         {(a, b): M[g.etype_index(a), g.etype_index(b)] for a in ("t1", "t2") for b in ("t1", "t2")},
                         p, 1.0)
    assert {k: v for (k, _), v in oracle.items()} == pytest.approx(expected, abs=1e-12)


def test_rounded_four_place_values(abcd_graph):
    g = abcd_graph
    probs = step_distribution(g, _abcd_matrix(g, 0.8, 0.4), 0, 1, g.etype_index("t1"), WalkParams(p=0.25, q=1))
    assert [round(x, 4) for x in probs] == [0.7273, 0.0909, 0.1818]


def test_step_distribution_dead_end():
    g = make_graph([("a", "t", "b")], directed=True)
    with pytest.raises(DeadEndError):
        step_distribution(g, np.ones((1, 1)), 0, 1, 0, WalkParams())


def test_matrix_shape_checked(abcd_graph):
    with pytest.raises(ValueError):
        step_distribution(abcd_graph, np.ones((3, 3)), 0, 1, 0, WalkParams())


def _random_multigraph(rng, n=12, m=3, n_edges=30):
    edges = []
    while len(edges) < n_edges:
        a, b = rng.integers(n, size=2)
        if a != b:
            edges.append((f"v{a}", f"t{rng.integers(m)}", f"v{b}", float(rng.uniform(0.2, 3))))
    return edges


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 4), st.floats(0.1, 4), st.floats(0.01, 100))
def test_step_distribution_matches_oracle_and_is_scale_invariant(seed, p, q, scale):
    rng = np.random.default_rng(seed)
    edges = _random_multigraph(rng)
    g = make_graph(edges)
    M = rng.uniform(0.05, 1.0, size=(g.n_etypes, g.n_etypes))
    u = int(rng.integers(g.n_edges))
    prev, curr, t = g.edges_src[u], g.edges_dst[u], g.edges_etype[u]
    params = WalkParams(p=p, q=q)
    probs = step_distribution(g, M, prev, curr, t, params)
    assert probs.min() >= 0 and abs(probs.sum() - 1) < 1e-12
    np.testing.assert_allclose(step_distribution(g, M * scale, prev, curr, t, params), probs, rtol=1e-12)
    Md = {(a, b): M[g.etype_index(a), g.etype_index(b)] for a in g.etype_labels for b in g.etype_labels}
    oracle = step_oracle(edges, g.node_labels[prev], g.node_labels[curr], g.etype_labels[t], Md, p, q)
    got = {(g.node_labels[n], g.etype_labels[et]): pr for (n, et, _), pr in zip(g.neighbors(curr), probs)}
    assert got == pytest.approx(oracle, abs=1e-12)


def test_single_type_uniform_reduces_to_uniform():
    g = make_graph([("a", "t", "b"), ("b", "t", "c"), ("b", "t", "d"), ("c", "t", "d"), ("b", "t", "e")])
    probs = step_distribution(g, np.full((1, 1), 0.37), g.node_index("a"), g.node_index("b"), 0,
                              WalkParams(p=1, q=1))
    assert np.array_equal(probs, np.full(4, 0.25))


def test_sampler_follows_cdf(abcd_graph):
    g = abcd_graph
    M = _abcd_matrix(g, 0.8, 0.4)
    # CDF (A:0.4, C:0.2, D:0.4) over CSR order A, C, D
    picks = sample_next(g, M, 0, 1, g.etype_index("t1"), WalkParams(p=1, q=1), [0.0, 0.39, 0.41, 0.59, 0.61, 0.999999])
    assert [g.node_labels[g.nbr[k]] for k in picks] == ["A", "A", "C", "C", "D", "D"]


def test_sampler_skips_zero_weight_entries(abcd_graph):
    g = abcd_graph
    M = _abcd_matrix(g, 1.0, 0.0)  # C unreachable from a t1 arrival
    picks = sample_next(g, M, 0, 1, g.etype_index("t1"), WalkParams(p=1, q=1), np.linspace(0, 1 - 1e-12, 101))
    assert "C" not in {g.node_labels[g.nbr[k]] for k in picks}


def test_isolated_start_and_dead_end_truncation():
    g = make_graph([("a", "t", "b"), ("b", "t", "c")], directed=True)
    nodes, types = hetero_random_walk(g, np.ones((1, 1)), 2, WalkParams(walk_length=5), np.random.default_rng(0))
    assert nodes.tolist() == [2] and types.tolist() == []
    nodes, types = hetero_random_walk(g, np.ones((1, 1)), 0, WalkParams(walk_length=5), np.random.default_rng(0))
    assert nodes.tolist() == [0, 1, 2] and types.tolist() == [0, 0]


def test_two_node_forced_walk():
    g = make_graph([("a", "t", "b")])
    nodes, types = hetero_random_walk(g, np.ones((1, 1)), 0, WalkParams(walk_length=4), np.random.default_rng(1))
    assert nodes.tolist() == [0, 1, 0, 1] and types.tolist() == [0, 0, 0]


def test_path_walk_second_step_is_fair():
    g = make_graph([("a", "t", "b"), ("b", "t", "c")])
    n = 100_000
    corpus = generate_corpus(g, np.ones((1, 1)), [0], WalkParams(p=1, q=1, walk_length=3, walks_per_node=n), seed=3)
    ends = np.array([w[-1] for w in corpus.node_walks])
    assert all(w[1] == 1 for w in corpus.node_walks[:100])
    assert abs(np.mean(ends == 0) - 0.5) < 0.01
    assert abs(np.mean(ends == 2) - 0.5) < 0.01


@pytest.fixture
def branching_graph():
    rng = np.random.default_rng(5)
    return make_graph(_random_multigraph(rng, n=10, m=2, n_edges=25))


def test_corpus_shape_and_determinism(branching_graph):
    g = branching_graph
    params = WalkParams(walk_length=8, walks_per_node=2)
    M = np.array([[0.7, 0.3], [0.3, 0.7]])[:g.n_etypes, :g.n_etypes]
    c1 = generate_corpus(g, M, range(g.n_nodes), params, seed=11)
    c2 = generate_corpus(g, M, range(g.n_nodes), params, seed=11)
    c3 = generate_corpus(g, M, range(g.n_nodes), params, seed=12)
    assert len(c1) == 2 * g.n_nodes
    assert [w[0] for w in c1.node_walks] == list(np.repeat(np.arange(g.n_nodes), 2))
    assert c1.equals(c2)
    assert not c1.equals(c3)


def test_corpus_independent_of_start_subset(branching_graph):
    # per-walk streams: a node's walks do not depend on which other nodes are walked
    g = branching_graph
    M = np.ones((g.n_etypes, g.n_etypes))
    params = WalkParams(walk_length=10, walks_per_node=3)
    full = generate_corpus(g, M, range(g.n_nodes), params, seed=4)
    part = generate_corpus(g, M, [5], params, seed=4)
    for i in range(3):
        assert np.array_equal(full.node_walks[5 * 3 + i], part.node_walks[i])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_walks_follow_edges(seed):
    rng = np.random.default_rng(seed)
    edges = _random_multigraph(rng, n=15, m=3, n_edges=25)
    g = make_graph(edges)
    M = rng.uniform(0.1, 1, size=(g.n_etypes, g.n_etypes))
    corpus = generate_corpus(g, M, range(g.n_nodes), WalkParams(walk_length=12, walks_per_node=2), seed=seed)
    for nodes, types in zip(corpus.node_walks, corpus.edge_walks):
        assert len(types) == len(nodes) - 1
        for a, b, t in zip(nodes[:-1], nodes[1:], types):
            assert (int(b), int(t)) in {(n, et) for n, et, _ in g.neighbors(a)}


def test_corpus_file_roundtrip(tmp_path, branching_graph):
    g = branching_graph
    corpus = generate_corpus(g, np.ones((g.n_etypes, g.n_etypes)), range(g.n_nodes), WalkParams(walk_length=6), 0)
    path, epath = write_corpus(corpus, g, tmp_path / "walks.txt")
    assert epath.name == "walks.etypes"
    assert read_corpus(path, g).equals(corpus)


def test_corpus_unknown_node(tmp_path, branching_graph):
    (tmp_path / "w.txt").write_text("v0 nope\n")
    with pytest.raises(KeyError, match="nope"):
        read_corpus(tmp_path / "w.txt", branching_graph)
