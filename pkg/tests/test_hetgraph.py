import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edge2vec.hetgraph import (
    EdgeRecord,
    GraphError,
    ParseError,
    build_graph,
    graph_stats,
    neighbors,
    parse_edge_list,
    parse_triples,
)

from conftest import make_graph


def test_parse_default_weight():
    assert parse_edge_list(io.StringIO("a\tbinds\tb\n")) == [EdgeRecord("a", "binds", "b", 1.0)]


def test_parse_explicit_weight():
    assert parse_edge_list(io.StringIO("a\tbinds\tb\t2.5")) == [EdgeRecord("a", "binds", "b", 2.5)]


def test_parse_skips_comments_and_blanks():
    text = "# header\n\na\tt\tb\n  # indented comment\nb\tt\tc\t3\n"
    recs = parse_edge_list(io.StringIO(text))
    assert [(r.src, r.dst, r.weight) for r in recs] == [("a", "b", 1.0), ("b", "c", 3.0)]


@pytest.mark.parametrize("text,lineno", [
    ("a\tbinds", 1),
    ("a\tt\tb\nc\tt\td\te\tf", 2),
    ("# c\na\tt\tb\t-1", 2),
    ("a\tt\tb\t0", 1),
    ("a\tt\tb\tfoo", 1),
])
def test_parse_errors_carry_line_number(text, lineno):
    with pytest.raises(ParseError) as exc:
        parse_edge_list(io.StringIO(text))
    assert exc.value.lineno == lineno
    assert f"line {lineno}" in str(exc.value)


def test_parse_has_weight_flag():
    with pytest.raises(ParseError):
        parse_edge_list(io.StringIO("a\tt\tb"), has_weight=True)
    with pytest.raises(ParseError):
        parse_edge_list(io.StringIO("a\tt\tb\t1"), has_weight=False)


def test_parse_triples_types_from_uri():
    text = "http://x.org/compound/C1 http://x.org/rel/bind http://x.org/gene/G7\n"
    (rec,) = parse_triples(io.StringIO(text))
    assert (rec.src, rec.etype, rec.dst) == ("C1", "bind", "G7")
    assert (rec.src_type, rec.dst_type) == ("compound", "gene")
    g = build_graph([rec])
    assert g.node_types == ("compound", "gene")
    assert g.etype_labels == ("bind",)


def test_parse_triples_unknown_type_and_custom_rule():
    text = "<urn:a> <urn:p> <http://x/drug/D1>\n"
    (rec,) = parse_triples(io.StringIO(text))
    assert rec.src_type == "unknown" and rec.dst_type == "drug"
    (rec,) = parse_triples(io.StringIO(text), type_rule=r"^http://x/(\w+)/")
    assert rec.dst_type == "drug" and rec.src_type == "unknown"


def test_parse_triples_empty_and_arity():
    assert parse_triples(io.StringIO("")) == []
    with pytest.raises(ParseError) as exc:
        parse_triples(io.StringIO("a b"))
    assert exc.value.lineno == 1


def test_undirected_symmetry_collapse():
    g = build_graph([EdgeRecord("a", "t", "b"), EdgeRecord("b", "t", "a")])
    assert g.n_nodes == 2 and g.n_edges == 1
    assert neighbors(g, 0) == [(1, 0, 2.0)]
    assert neighbors(g, 1) == [(0, 0, 2.0)]


def test_duplicate_merge():
    g = build_graph([EdgeRecord("a", "t", "b", 1.0), EdgeRecord("a", "t", "b", 2.0)])
    assert g.n_edges == 1
    assert g.neighbors(0) == [(1, 0, 3.0)]


def test_self_loop_only_is_error():
    with pytest.raises(GraphError):
        build_graph([EdgeRecord("a", "t", "a")])


def test_self_loops_counted():
    g = build_graph([EdgeRecord("a", "t", "a"), EdgeRecord("a", "t", "b")])
    assert g.dropped_self_loops == 1 and g.n_edges == 1


def test_empty_records_error():
    with pytest.raises(GraphError):
        build_graph([])


def test_parallel_edges_distinct_types_kept():
    g = make_graph([("a", "x", "b"), ("a", "y", "b")])
    assert g.n_edges == 2
    assert g.neighbors(0) == [(1, 0, 1.0), (1, 1, 1.0)]


def test_neighbors_star_leaf_path():
    star = make_graph([("c", "t", "l1"), ("c", "t", "l2"), ("c", "t", "l3")])
    assert len(star.neighbors(star.node_index("c"))) == 3
    assert star.neighbors(star.node_index("l2")) == [(star.node_index("c"), 0, 1.0)]
    path = make_graph([("a", "x", "b"), ("b", "y", "c")])
    assert path.neighbors(1) == [(0, 0, 1.0), (2, 1, 1.0)]
    with pytest.raises(IndexError):
        path.neighbors(3)


def test_directed_adjacency():
    g = make_graph([("a", "t", "b")], directed=True)
    assert g.neighbors(0) == [(1, 0, 1.0)]
    assert g.neighbors(1) == []
    assert g.etype_degrees().tolist() == [[1], [1]]


def test_stats_triangle():
    s = graph_stats(make_graph([("a", "t", "b"), ("b", "t", "c"), ("c", "t", "a")]))
    assert (s.n_nodes, s.n_edges) == (3, 3)
    assert s.edge_type_counts == {"t": 3}


def test_stats_two_types():
    s = graph_stats(make_graph([("a", "x", "b"), ("c", "y", "d")]))
    assert list(s.edge_type_counts.values()) == [1, 1]


def test_etype_degrees_mixed_counts():
    # one edge of type 1, two of type 2, three of type 3, none of type 4
    edges = [("v", "t1", "a"), ("v", "t2", "b"), ("v", "t2", "c"),
             ("v", "t3", "d"), ("v", "t3", "e"), ("v", "t3", "f"), ("g", "t4", "h")]
    g = make_graph(edges)
    assert g.etype_degrees()[g.node_index("v")].tolist() == [1, 2, 3, 0]


edge_lists = st.lists(
    st.tuples(st.integers(0, 7), st.sampled_from(["x", "y", "z"]), st.integers(0, 7),
              st.floats(0.1, 5.0, allow_nan=False)),
    min_size=1, max_size=30,
).filter(lambda es: any(a != b for a, _, b, _ in es))


def _label_adjacency(g):
    return {(g.node_labels[u], g.etype_labels[t], g.node_labels[v], w)
            for u in range(g.n_nodes) for v, t, w in g.neighbors(u)}


@settings(max_examples=60, deadline=None)
@given(edge_lists, st.booleans())
def test_roundtrip_and_invariants(edges, directed):
    g = make_graph([(f"n{a}", t, f"n{b}", w) for a, t, b, w in edges], directed=directed)
    # vocabulary density
    assert sorted(g._index.values()) == list(range(g.n_nodes))
    assert 0 <= g.etype.min() and g.etype.max() <= g.n_etypes - 1
    # sorted neighbor lists
    for v in range(g.n_nodes):
        nb = g.nbr[g.indptr[v]:g.indptr[v + 1]]
        assert np.all(np.diff(nb) >= 0)
    adj = _label_adjacency(g)
    if not directed:
        assert all((v, t, u, w) in adj for u, t, v, w in adj)
    buf = io.StringIO()
    g.write_edge_list(buf)
    buf.seek(0)
    g2 = build_graph(parse_edge_list(buf), directed=directed)
    assert _label_adjacency(g2) == adj
    assert graph_stats(g2).n_edges == g.n_edges
