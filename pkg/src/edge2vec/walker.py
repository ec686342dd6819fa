"""Edge-type biased second-order random walks.

The next-step score of candidate ``k`` reached from ``curr`` (arrived at via
edge type ``t_prev`` from ``prev``) is

    weight(curr, k) * M[t_prev, type(curr, k)] * alpha(p, q, dist(k, prev))

normalized over all (neighbor, edge type) entries of ``curr``. The first
step of a walk is drawn by edge weight alone.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numba
import numpy as np

from edge2vec.hetgraph import HetGraph


@dataclass(frozen=True)
class WalkParams:
    p: float = 0.25
    q: float = 0.25
    walk_length: int = 50
    walks_per_node: int = 1

    def __post_init__(self):
        if not self.p > 0 or not self.q > 0:
            raise ValueError("p and q must be positive")
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")


@dataclass
class WalkCorpus:
    node_walks: list[np.ndarray]
    edge_walks: list[np.ndarray]

    def __len__(self):
        return len(self.node_walks)

    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        """Concatenated node ids and offsets (walk i is ``nodes[off[i]:off[i+1]]``)."""
        lens = np.fromiter((len(w) for w in self.node_walks), dtype=np.int64, count=len(self))
        offsets = np.zeros(len(self) + 1, dtype=np.int64)
        np.cumsum(lens, out=offsets[1:])
        if len(self) == 0:
            return np.zeros(0, dtype=np.int64), offsets
        return np.concatenate(self.node_walks).astype(np.int64), offsets

    def equals(self, other: WalkCorpus) -> bool:
        return (len(self) == len(other)
                and all(np.array_equal(a, b) for a, b in zip(self.node_walks, other.node_walks))
                and all(np.array_equal(a, b) for a, b in zip(self.edge_walks, other.edge_walks)))


def alpha(p: float, q: float, d: int) -> float:
    if d == 0:
        return 1.0 / p
    if d == 1:
        return 1.0
    if d == 2:
        return 1.0 / q
    raise ValueError(f"hop distance must be 0, 1 or 2, got {d}")


def _matrix_values(M) -> np.ndarray:
    return np.ascontiguousarray(getattr(M, "values", M), dtype=np.float64)


def _check_matrix(graph: HetGraph, M) -> np.ndarray:
    values = _matrix_values(M)
    m = graph.n_etypes
    if values.shape != (m, m):
        raise ValueError(f"transition matrix shape {values.shape} does not match {m} edge types")
    return values


class DeadEndError(RuntimeError):
    pass


def step_distribution(graph: HetGraph, M, prev: int, curr: int, prev_etype: int,
                      params: WalkParams) -> np.ndarray:
    """Next-step probabilities, aligned with ``graph.neighbors(curr)``."""
    values = _check_matrix(graph, M)
    lo, hi = graph.indptr[curr], graph.indptr[curr + 1]
    if lo == hi:
        raise DeadEndError(f"node {curr} has no neighbors")
    cand = graph.nbr[lo:hi]
    plo, phi = graph.indptr[prev], graph.indptr[prev + 1]
    dist = np.where(np.isin(cand, graph.nbr[plo:phi]), 1, 2)
    dist[cand == prev] = 0
    bias = np.array([1.0 / params.p, 1.0, 1.0 / params.q])[dist]
    scores = graph.weight[lo:hi] * values[prev_etype, graph.etype[lo:hi]] * bias
    return scores / scores.sum()


@numba.njit(cache=True)
def _is_neighbor(indptr, nbr, u, v):
    lo = indptr[u]
    hi = indptr[u + 1]
    i = lo + np.searchsorted(nbr[lo:hi], v)
    return i < hi and nbr[i] == v


@numba.njit(cache=True)
def _score(indptr, nbr, etype, weight, M, inv_p, inv_q, prev, prev_t, k):
    if prev < 0:
        return weight[k]
    n = nbr[k]
    if n == prev:
        a = inv_p
    elif _is_neighbor(indptr, nbr, prev, n):
        a = 1.0
    else:
        a = inv_q
    return weight[k] * M[prev_t, etype[k]] * a


@numba.njit(cache=True)
def _next_entry(indptr, nbr, etype, weight, M, inv_p, inv_q, prev, prev_t, curr, u):
    """CSR position of the sampled next entry, or -1 at a dead end.

    ``prev < 0`` means first step (weight only). Inverse-CDF sampling with
    uniform ``u``; zero-score entries can never be selected.
    """
    lo = indptr[curr]
    hi = indptr[curr + 1]
    if lo == hi:
        return -1
    total = 0.0
    for k in range(lo, hi):
        total += _score(indptr, nbr, etype, weight, M, inv_p, inv_q, prev, prev_t, k)
    if not total > 0.0:
        return -1
    x = u * total
    acc = 0.0
    last = -1
    for k in range(lo, hi):
        s = _score(indptr, nbr, etype, weight, M, inv_p, inv_q, prev, prev_t, k)
        if s > 0.0:
            acc += s
            last = k
            if acc > x:
                return k
    return last


@numba.njit(parallel=True, cache=True)
def _walk_kernel(indptr, nbr, etype, weight, M, inv_p, inv_q, starts, uniforms,
                 nodes_out, types_out, lens_out):
    length = nodes_out.shape[1]
    for i in numba.prange(starts.shape[0]):
        curr = starts[i]
        prev = -1
        prev_t = -1
        nodes_out[i, 0] = curr
        n = 1
        while n < length:
            k = _next_entry(indptr, nbr, etype, weight, M, inv_p, inv_q,
                            prev, prev_t, curr, uniforms[i, n - 1])
            if k < 0:
                break
            prev = curr
            prev_t = etype[k]
            curr = nbr[k]
            nodes_out[i, n] = curr
            types_out[i, n - 1] = prev_t
            n += 1
        lens_out[i] = n


def _run_walks(graph: HetGraph, values: np.ndarray, starts: np.ndarray, uniforms: np.ndarray,
               params: WalkParams) -> WalkCorpus:
    n_walks, length = len(starts), params.walk_length
    nodes = np.full((n_walks, length), -1, dtype=np.int64)
    types = np.full((n_walks, length - 1), -1, dtype=np.int32)
    lens = np.zeros(n_walks, dtype=np.int64)
    _walk_kernel(graph.indptr, graph.nbr, graph.etype, graph.weight, values,
                 1.0 / params.p, 1.0 / params.q, starts, uniforms, nodes, types, lens)
    return WalkCorpus(
        node_walks=[nodes[i, :n].copy() for i, n in enumerate(lens)],
        edge_walks=[types[i, :n - 1].copy() for i, n in enumerate(lens)],
    )


def sample_next(graph: HetGraph, M, prev: int, curr: int, prev_etype: int,
                params: WalkParams, u: np.ndarray) -> np.ndarray:
    """Vector of sampled CSR entry positions for uniforms ``u`` (diagnostics/tests)."""
    values = _check_matrix(graph, M)
    return np.array([
        _next_entry(graph.indptr, graph.nbr, graph.etype, graph.weight, values,
                    1.0 / params.p, 1.0 / params.q, prev, prev_etype, curr, x)
        for x in np.asarray(u, dtype=np.float64)
    ])


def hetero_random_walk(graph: HetGraph, M, start: int, params: WalkParams,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    values = _check_matrix(graph, M)
    uniforms = rng.random((1, params.walk_length - 1))
    corpus = _run_walks(graph, values, np.array([start], dtype=np.int64), uniforms, params)
    return corpus.node_walks[0], corpus.edge_walks[0]


def walk_uniforms(seed: int, node: int, walk: int, n: int) -> np.ndarray:
    """Uniform stream for one walk, keyed by (seed, node, walk index)."""
    return np.random.default_rng([seed, node, walk]).random(n)


def generate_corpus(graph: HetGraph, M, start_nodes: Iterable[int], params: WalkParams,
                    seed: int, threads: int | None = None) -> WalkCorpus:
    """``walks_per_node`` walks from each start node, ordered by (node, walk index).

    Every walk draws from its own stream keyed by (seed, node, walk index), so
    the corpus does not depend on the thread count.
    """
    values = _check_matrix(graph, M)
    nodes = sorted(set(int(v) for v in start_nodes))
    if not nodes:
        raise ValueError("start_nodes is empty")
    if nodes[0] < 0 or nodes[-1] >= graph.n_nodes:
        raise IndexError("start node out of range")
    r = params.walks_per_node
    starts = np.repeat(np.array(nodes, dtype=np.int64), r)
    uniforms = np.empty((len(starts), params.walk_length - 1))
    for i, v in enumerate(starts):
        uniforms[i] = walk_uniforms(seed, int(v), i % r, params.walk_length - 1)
    if threads:
        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    return _run_walks(graph, values, starts, uniforms, params)


def etypes_path(path) -> Path:
    return Path(path).with_suffix(".etypes")


def write_corpus(corpus: WalkCorpus, graph: HetGraph, path) -> tuple[Path, Path]:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for walk in corpus.node_walks:
            fh.write(" ".join(graph.node_labels[v] for v in walk) + "\n")
    epath = etypes_path(path)
    with open(epath, "w", encoding="utf-8") as fh:
        for walk in corpus.edge_walks:
            fh.write(" ".join(graph.etype_labels[t] for t in walk) + "\n")
    return path, epath


def read_corpus(path, graph: HetGraph) -> WalkCorpus:
    path = Path(path)
    node_walks, edge_walks = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                node_walks.append(np.array([graph.node_index(tok) for tok in line.split()], dtype=np.int64))
            except KeyError as exc:
                raise KeyError(f"{path}:{lineno}: {exc.args[0]}") from None
    epath = etypes_path(path)
    if epath.exists():
        with open(epath, encoding="utf-8") as fh:
            for line in fh:
                edge_walks.append(np.array([graph.etype_index(tok) for tok in line.split()], dtype=np.int32))
    else:
        edge_walks = [np.zeros(0, dtype=np.int32) for _ in node_walks]
    if len(edge_walks) != len(node_walks):
        raise ValueError(f"{epath} is not line-aligned with {path}")
    return WalkCorpus(node_walks, edge_walks)


def default_threads() -> int:
    return os.cpu_count() or 1
