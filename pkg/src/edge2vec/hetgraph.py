"""Typed, weighted graph container plus edge-list / triple parsers."""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, NamedTuple, TextIO

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_TYPE_RULE = r"/([^/]+)/[^/]+/?$"
UNKNOWN_TYPE = "unknown"


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class GraphError(ValueError):
    pass


class EdgeRecord(NamedTuple):
    src: str
    etype: str
    dst: str
    weight: float = 1.0
    src_type: str | None = None
    dst_type: str | None = None


def _content_lines(stream: Iterable[str]):
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line


def parse_edge_list(stream: Iterable[str], has_weight: bool | None = None) -> list[EdgeRecord]:
    """Read ``src<TAB>etype<TAB>dst[<TAB>weight]`` lines.

    ``has_weight=None`` accepts both arities; True/False pins the column count.
    """
    records = []
    for lineno, line in _content_lines(stream):
        fields = line.split("\t")
        if len(fields) not in (3, 4):
            raise ParseError(lineno, f"expected 3 or 4 tab-separated fields, got {len(fields)}")
        if has_weight is True and len(fields) != 4:
            raise ParseError(lineno, "missing weight column")
        if has_weight is False and len(fields) != 3:
            raise ParseError(lineno, "unexpected weight column")
        src, etype, dst = (f.strip() for f in fields[:3])
        if not src or not etype or not dst:
            raise ParseError(lineno, "empty field")
        weight = 1.0
        if len(fields) == 4:
            try:
                weight = float(fields[3])
            except ValueError:
                raise ParseError(lineno, f"non-numeric weight {fields[3]!r}") from None
            if not np.isfinite(weight) or weight <= 0:
                raise ParseError(lineno, f"weight must be positive, got {fields[3]!r}")
        records.append(EdgeRecord(src, etype, dst, weight))
    return records


def _last_segment(uri: str) -> str:
    uri = uri.strip("<>").rstrip("/")
    for sep in ("/", "#"):
        if sep in uri:
            uri = uri.rsplit(sep, 1)[1]
    return uri


def parse_triples(stream: Iterable[str], type_rule: str = DEFAULT_TYPE_RULE) -> list[EdgeRecord]:
    """Read whitespace-separated ``subject predicate object`` triples.

    Node and relation labels are the last URI path segment; the node type is
    the first capture group of ``type_rule`` matched against the URI.
    """
    rule = re.compile(type_rule)
    if rule.groups < 1:
        raise ValueError("type_rule needs one capture group")

    def node_type(uri):
        m = rule.search(uri.strip("<>"))
        return m.group(1) if m else UNKNOWN_TYPE

    records = []
    for lineno, line in _content_lines(stream):
        tokens = line.split()
        if len(tokens) != 3:
            raise ParseError(lineno, f"expected 3 tokens, got {len(tokens)}")
        s, p, o = tokens
        records.append(EdgeRecord(_last_segment(s), _last_segment(p), _last_segment(o), 1.0,
                                  node_type(s), node_type(o)))
    return records


@dataclass(frozen=True, eq=False)
class HetGraph:
    """Immutable CSR adjacency over typed nodes and typed, weighted edges.

    Each node's slice ``indptr[v]:indptr[v+1]`` of ``nbr``/``etype``/``weight``
    is sorted by (neighbor, etype). Undirected graphs store both directions;
    ``edges_*`` hold every logical edge once.
    """

    node_labels: tuple[str, ...]
    node_types: tuple[str, ...] | None
    etype_labels: tuple[str, ...]
    directed: bool
    indptr: np.ndarray
    nbr: np.ndarray
    etype: np.ndarray
    weight: np.ndarray
    edges_src: np.ndarray
    edges_dst: np.ndarray
    edges_etype: np.ndarray
    edges_weight: np.ndarray
    dropped_self_loops: int = 0

    def __post_init__(self):
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.node_labels)})
        object.__setattr__(self, "_etype_index", {lab: i for i, lab in enumerate(self.etype_labels)})

    @property
    def n_nodes(self) -> int:
        return len(self.node_labels)

    @property
    def n_etypes(self) -> int:
        return len(self.etype_labels)

    @property
    def n_edges(self) -> int:
        return len(self.edges_src)

    def node_index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown node {label!r}") from None

    def etype_index(self, label: str) -> int:
        try:
            return self._etype_index[label]
        except KeyError:
            raise KeyError(f"unknown edge type {label!r}") from None

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def neighbors(self, v: int) -> list[tuple[int, int, float]]:
        if not 0 <= v < self.n_nodes:
            raise IndexError(f"node index {v} out of range [0, {self.n_nodes})")
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return [(int(n), int(t), float(w))
                for n, t, w in zip(self.nbr[lo:hi], self.etype[lo:hi], self.weight[lo:hi])]

    def has_edge(self, u: int, v: int) -> bool:
        lo, hi = self.indptr[u], self.indptr[u + 1]
        i = lo + np.searchsorted(self.nbr[lo:hi], v)
        return bool(i < hi and self.nbr[i] == v)

    def etype_degrees(self) -> np.ndarray:
        """|V| x m matrix of incident-edge counts per edge type."""
        out = np.zeros((self.n_nodes, self.n_etypes), dtype=np.int64)
        src = np.repeat(np.arange(self.n_nodes), np.diff(self.indptr))
        np.add.at(out, (src, self.etype), 1)
        if self.directed:
            np.add.at(out, (self.edges_dst, self.edges_etype), 1)
        return out

    def write_edge_list(self, stream: TextIO) -> None:
        for s, d, t, w in zip(self.edges_src, self.edges_dst, self.edges_etype, self.edges_weight):
            stream.write(f"{self.node_labels[s]}\t{self.etype_labels[t]}\t{self.node_labels[d]}\t{float(w)!r}\n")


def build_graph(
    records: Iterable[EdgeRecord],
    directed: bool = False,
    node_order: Iterable[str] | None = None,
    etype_order: Iterable[str] | None = None,
    node_types: dict[str, str] | None = None,
) -> HetGraph:
    """Index records into a :class:`HetGraph`.

    Vocabularies follow first appearance unless ``node_order``/``etype_order``
    pin them. Duplicate (src, dst, etype) edges are merged by summing weights;
    in undirected mode (a, b) and (b, a) are the same edge. Self-loops are
    dropped and counted.
    """
    records = list(records)
    if not records:
        raise GraphError("no edge records")

    nodes: dict[str, int] = {}
    etypes: dict[str, int] = {}
    types: dict[str, str] = dict(node_types or {})
    for lab in node_order or ():
        nodes.setdefault(lab, len(nodes))
    for lab in etype_order or ():
        etypes.setdefault(lab, len(etypes))

    merged: dict[tuple[int, int, int], float] = {}
    self_loops = 0
    for rec in records:
        if rec.weight <= 0:
            raise GraphError(f"non-positive weight on {rec.src}-{rec.dst}")
        s = nodes.setdefault(rec.src, len(nodes))
        d = nodes.setdefault(rec.dst, len(nodes))
        t = etypes.setdefault(rec.etype, len(etypes))
        if rec.src_type is not None:
            types.setdefault(rec.src, rec.src_type)
        if rec.dst_type is not None:
            types.setdefault(rec.dst, rec.dst_type)
        if s == d:
            self_loops += 1
            continue
        key = (s, d, t)
        if not directed and (d, s, t) in merged:
            key = (d, s, t)
        merged[key] = merged.get(key, 0.0) + rec.weight

    if self_loops:
        logger.warning("dropped %d self-loop record(s)", self_loops)
    if not merged:
        raise GraphError("no edges left after dropping self-loops")

    n = len(nodes)
    keys = np.array(list(merged.keys()), dtype=np.int64).reshape(-1, 3)
    ew = np.fromiter(merged.values(), dtype=np.float64, count=len(merged))
    es, ed, et = keys[:, 0], keys[:, 1], keys[:, 2]

    if directed:
        a_src, a_dst, a_t, a_w = es, ed, et, ew
    else:
        a_src = np.concatenate([es, ed])
        a_dst = np.concatenate([ed, es])
        a_t = np.concatenate([et, et])
        a_w = np.concatenate([ew, ew])
    order = np.lexsort((a_t, a_dst, a_src))
    a_src, a_dst, a_t, a_w = a_src[order], a_dst[order], a_t[order], a_w[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(a_src, minlength=n), out=indptr[1:])

    labels = tuple(nodes)
    tvec = None
    if types:
        tvec = tuple(types.get(lab, UNKNOWN_TYPE) for lab in labels)

    arrays = dict(
        indptr=indptr, nbr=a_dst, etype=a_t.astype(np.int32), weight=a_w,
        edges_src=es.copy(), edges_dst=ed.copy(), edges_etype=et.astype(np.int32), edges_weight=ew,
    )
    for arr in arrays.values():
        arr.flags.writeable = False
    return HetGraph(node_labels=labels, node_types=tvec, etype_labels=tuple(etypes),
                    directed=directed, dropped_self_loops=self_loops, **arrays)


def neighbors(graph: HetGraph, v: int) -> list[tuple[int, int, float]]:
    return graph.neighbors(v)


@dataclass
class GraphStats:
    n_nodes: int
    n_edges: int
    node_type_counts: dict[str, int]
    edge_type_counts: dict[str, int]
    dropped_self_loops: int = 0

    def rows(self):
        yield "nodes", self.n_nodes
        yield "edges", self.n_edges
        yield "dropped_self_loops", self.dropped_self_loops
        for k, v in self.node_type_counts.items():
            yield f"node_type:{k}", v
        for k, v in self.edge_type_counts.items():
            yield f"edge_type:{k}", v


def graph_stats(graph: HetGraph) -> GraphStats:
    counts = np.bincount(graph.edges_etype, minlength=graph.n_etypes)
    node_counts = dict(Counter(graph.node_types)) if graph.node_types else {}
    return GraphStats(
        n_nodes=graph.n_nodes,
        n_edges=graph.n_edges,
        node_type_counts=node_counts,
        edge_type_counts={lab: int(c) for lab, c in zip(graph.etype_labels, counts)},
        dropped_self_loops=graph.dropped_self_loops,
    )
