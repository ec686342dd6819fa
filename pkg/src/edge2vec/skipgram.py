"""Skip-gram with uniform negative sampling over a single embedding table.

Per (center v, context t) pair with negatives u_1..u_k the objective is

    log s(f_t . f_v) + sum_i log s(-f_ui . f_v)

and one SGD ascent step is taken on it. Center and context share one table.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numba
import numpy as np

from edge2vec.walker import WalkCorpus

_MODES = ("deterministic", "parallel")


@dataclass(frozen=True)
class TrainParams:
    dim: int = 128
    window: int = 10
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    lr_min: float = 1e-4
    mode: str = "deterministic"
    threads: int | None = None

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.epochs < 1:
            raise ValueError("dim, window and epochs must be >= 1")
        if self.negatives < 0:
            raise ValueError("negatives must be >= 0")
        if not self.lr > self.lr_min > 0:
            raise ValueError("need lr > lr_min > 0")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")


def init_embeddings(n_nodes: int, dim: int, seed: int) -> np.ndarray:
    if n_nodes < 1 or dim < 1:
        raise ValueError("n_nodes and dim must be >= 1")
    rng = np.random.default_rng(seed)
    return (rng.random((n_nodes, dim)) - 0.5) / dim


def extract_pairs(walks: WalkCorpus | Iterable[Sequence], window: int) -> Iterator[tuple]:
    """(center, context) pairs for every position and every offset 1..window, in corpus order."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if isinstance(walks, WalkCorpus):
        walks = walks.node_walks
    for walk in walks:
        n = len(walk)
        for i in range(n):
            for j in range(max(0, i - window), min(n, i + window + 1)):
                if j != i:
                    yield walk[i], walk[j]


def n_pairs(length: int, window: int) -> int:
    return 2 * sum(length - d for d in range(1, min(window, length - 1) + 1))


def log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def pair_objective(f_v, f_t, negatives=()) -> float:
    f_v = np.asarray(f_v, dtype=np.float64)
    out = log_sigmoid(np.dot(f_t, f_v))
    for f_u in negatives:
        out += log_sigmoid(-np.dot(f_u, f_v))
    return float(out)


def _sig(x):
    return 1.0 / (1.0 + np.exp(-x))


def pair_gradients(f_v, f_t, negatives=()):
    """Gradients of :func:`pair_objective` w.r.t. f_v, f_t and each negative."""
    f_v = np.asarray(f_v, dtype=np.float64)
    f_t = np.asarray(f_t, dtype=np.float64)
    g = 1.0 - _sig(f_t @ f_v)
    grad_v = g * f_t
    grad_u = []
    for f_u in negatives:
        s = _sig(np.dot(f_u, f_v))
        grad_v = grad_v - s * np.asarray(f_u)
        grad_u.append(-s * f_v)
    return grad_v, g * f_v, grad_u


@numba.njit(cache=True)
def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@numba.njit(cache=True, fastmath=True)
def _sgd_pair(emb, v, t, negs, k, lr, fv_old, grad, coef):
    d = emb.shape[1]
    dot = 0.0
    for a in range(d):
        fv_old[a] = emb[v, a]
        dot += fv_old[a] * emb[t, a]
    g = 1.0 - _sigmoid(dot)
    for a in range(d):
        grad[a] = g * emb[t, a]
    for i in range(k):
        u = negs[i]
        du = 0.0
        for a in range(d):
            du += emb[u, a] * fv_old[a]
        coef[i] = _sigmoid(du)
        for a in range(d):
            grad[a] -= coef[i] * emb[u, a]
    for a in range(d):
        emb[t, a] += lr * g * fv_old[a]
    for i in range(k):
        u = negs[i]
        for a in range(d):
            emb[u, a] -= lr * coef[i] * fv_old[a]
    for a in range(d):
        emb[v, a] += lr * grad[a]


def sgd_update(emb: np.ndarray, v: int, t: int, negatives, lr: float) -> None:
    """One in-place ascent step; every term is evaluated at the pre-update f_v."""
    negs = np.asarray(negatives, dtype=np.int64).reshape(-1)
    d = emb.shape[1]
    _sgd_pair(emb, int(v), int(t), negs, len(negs), float(lr),
              np.empty(d), np.empty(d), np.empty(max(len(negs), 1)))


@numba.njit(cache=True)
def _splitmix(state):
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _draw_negative(state, n, t):
    """Uniform draw from {0..n-1} minus {t}."""
    u = np.float64(_splitmix(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)
    j = np.int64(u * (n - 1))
    if j >= t:
        j += 1
    return j


def _sampler_state(seed: int, stream: int = 0) -> np.ndarray:
    return np.random.SeedSequence([seed, 7919, stream]).generate_state(1, np.uint64)


class NegativeSampler:
    """Uniform negatives over the vocabulary, excluding the positive context."""

    def __init__(self, n_nodes: int, seed: int):
        if n_nodes < 2:
            raise ValueError("need at least two nodes to draw negatives")
        self.n_nodes = n_nodes
        self.state = _sampler_state(seed)

    def sample(self, t: int, k: int) -> np.ndarray:
        return np.array([_draw_negative(self.state, self.n_nodes, t) for _ in range(k)], dtype=np.int64)


@numba.njit(cache=True)
def _train_serial(emb, nodes, offsets, window, k, epochs, lr0, lr1, total, state):
    d = emb.shape[1]
    n = emb.shape[0]
    fv_old = np.empty(d)
    grad = np.empty(d)
    coef = np.empty(max(k, 1))
    negs = np.empty(max(k, 1), dtype=np.int64)
    kk = k if n > 1 else 0
    processed = 0
    for _ in range(epochs):
        for w in range(offsets.shape[0] - 1):
            lo = offsets[w]
            hi = offsets[w + 1]
            for i in range(lo, hi):
                v = nodes[i]
                for j in range(max(lo, i - window), min(hi, i + window + 1)):
                    if j == i:
                        continue
                    t = nodes[j]
                    lr = lr0 - (lr0 - lr1) * processed / total
                    for s in range(kk):
                        negs[s] = _draw_negative(state, n, t)
                    _sgd_pair(emb, v, t, negs, kk, lr, fv_old, grad, coef)
                    processed += 1


@numba.njit(parallel=True, cache=True)
def _train_parallel(emb, nodes, offsets, chunk_bounds, chunk_pair_start, per_epoch,
                    window, k, epochs, lr0, lr1, total, states):
    # unsynchronized row updates across chunks
    d = emb.shape[1]
    n = emb.shape[0]
    kk = k if n > 1 else 0
    for c in numba.prange(chunk_bounds.shape[0] - 1):
        fv_old = np.empty(d)
        grad = np.empty(d)
        coef = np.empty(max(k, 1))
        negs = np.empty(max(k, 1), dtype=np.int64)
        state = states[c:c + 1]
        for ep in range(epochs):
            processed = ep * per_epoch + chunk_pair_start[c]
            for w in range(chunk_bounds[c], chunk_bounds[c + 1]):
                lo = offsets[w]
                hi = offsets[w + 1]
                for i in range(lo, hi):
                    v = nodes[i]
                    for j in range(max(lo, i - window), min(hi, i + window + 1)):
                        if j == i:
                            continue
                        t = nodes[j]
                        lr = lr0 - (lr0 - lr1) * processed / total
                        for s in range(kk):
                            negs[s] = _draw_negative(state, n, t)
                        _sgd_pair(emb, v, t, negs, kk, lr, fv_old, grad, coef)
                        processed += 1


def train_embeddings(corpus: WalkCorpus, n_nodes: int, params: TrainParams = TrainParams(),
                     seed: int = 0) -> np.ndarray:
    """Fit an ``n_nodes x dim`` table on the corpus.

    The learning rate decays linearly from ``lr`` to ``lr_min`` over all
    processed pairs. ``mode="deterministic"`` is bit-reproducible per seed;
    ``"parallel"`` is not.
    """
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    nodes, offsets = corpus.flat()
    if len(nodes) and (nodes.min() < 0 or nodes.max() >= n_nodes):
        bad = int(nodes[(nodes < 0) | (nodes >= n_nodes)][0])
        raise KeyError(f"corpus references unknown node index {bad}")
    emb = init_embeddings(n_nodes, params.dim, seed)
    lengths = np.diff(offsets)
    walk_pairs = np.array([n_pairs(int(L), params.window) for L in lengths], dtype=np.int64)
    per_epoch = int(walk_pairs.sum())
    total = float(max(per_epoch * params.epochs, 1))
    if params.mode == "deterministic":
        _train_serial(emb, nodes, offsets, params.window, params.negatives, params.epochs,
                      params.lr, params.lr_min, total, _sampler_state(seed))
        return emb

    threads = params.threads or numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    n_chunks = max(1, min(len(corpus), 4 * threads))
    chunk_bounds = np.linspace(0, len(corpus), n_chunks + 1).astype(np.int64)
    cum = np.concatenate([[0], np.cumsum(walk_pairs)])
    chunk_pair_start = cum[chunk_bounds[:-1]]
    states = np.concatenate([_sampler_state(seed, c + 1) for c in range(n_chunks)])
    _train_parallel(emb, nodes, offsets, chunk_bounds, chunk_pair_start, per_epoch,
                    params.window, params.negatives, params.epochs, params.lr, params.lr_min,
                    total, states)
    return emb


@dataclass
class Embeddings:
    labels: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or len(self.vectors) != len(self.labels):
            raise ValueError("vectors must be a |labels| x d matrix")
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __contains__(self, label) -> bool:
        return label in self._index

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"node {label!r} not in embeddings") from None

    def __getitem__(self, label: str) -> np.ndarray:
        return self.vectors[self.index(label)]

    def save(self, path) -> None:
        n, d = self.vectors.shape
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{n} {d}\n")
            for lab, row in zip(self.labels, self.vectors):
                fh.write(lab + " " + " ".join(f"{x:.6f}" for x in row) + "\n")

    @classmethod
    def load(cls, path) -> Embeddings:
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ValueError(f"{path}: header must be '<count> <dim>'")
            n, d = int(header[0]), int(header[1])
            labels, rows = [], []
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split(" ")
                if len(parts) != d + 1:
                    raise ValueError(f"{path}:{lineno}: expected {d} values")
                labels.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        if len(labels) != n:
            raise ValueError(f"{path}: header says {n} rows, found {len(labels)}")
        return cls(labels, np.array(rows, dtype=np.float64).reshape(n, d))
