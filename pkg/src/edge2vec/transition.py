"""Edge-type transition matrix learned by alternating walks and correlation refits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from edge2vec.hetgraph import HetGraph
from edge2vec.walker import WalkCorpus, WalkParams, generate_corpus


@dataclass
class TransitionMatrix:
    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = tuple(self.labels)
        m = len(self.labels)
        if self.values.shape != (m, m):
            raise ValueError(f"matrix shape {self.values.shape} does not match {m} labels")

    @classmethod
    def ones(cls, labels: Sequence[str]) -> TransitionMatrix:
        return cls(np.ones((len(labels), len(labels))), labels)

    @property
    def m(self) -> int:
        return len(self.labels)

    def reordered(self, labels: Sequence[str]) -> TransitionMatrix:
        """Same matrix with rows/columns permuted to ``labels``; raises on a vocabulary mismatch."""
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            missing = set(labels) ^ set(self.labels)
            raise ValueError(f"edge-type labels do not match: {sorted(missing)}")
        idx = [self.labels.index(lab) for lab in labels]
        return TransitionMatrix(self.values[np.ix_(idx, idx)], labels)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\t".join(self.labels) + "\n")
            for lab, row in zip(self.labels, self.values):
                fh.write(lab + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def load(cls, path) -> TransitionMatrix:
        with open(path, encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
        if not lines:
            raise ValueError(f"{path}: empty matrix file")
        labels = lines[0].split("\t")
        rows = []
        for lineno, line in enumerate(lines[1:], start=2):
            fields = line.split("\t")
            if len(fields) != len(labels) + 1 or fields[0] != labels[len(rows)]:
                raise ValueError(f"{path}:{lineno}: malformed matrix row")
            rows.append([float(x) for x in fields[1:]])
        if len(rows) != len(labels):
            raise ValueError(f"{path}: expected {len(labels)} rows, got {len(rows)}")
        return cls(np.array(rows, dtype=np.float64).reshape(len(labels), len(labels)), labels)


@dataclass(frozen=True)
class EmParams:
    iterations: int = 10
    sample_ratio: float = 0.01
    walk: WalkParams = field(default_factory=WalkParams)

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 < self.sample_ratio <= 1:
            raise ValueError("sample_ratio must be in (0, 1]")


class IterationRecord(NamedTuple):
    iteration: int
    matrix: TransitionMatrix
    max_change: float
    nonconstant_rows: np.ndarray


def edge_type_count_vectors(corpus: WalkCorpus, m: int) -> np.ndarray:
    """m x n_walks matrix; entry (i, k) counts edge type i in walk k."""
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    counts = np.zeros((m, len(corpus)), dtype=np.int64)
    for k, walk in enumerate(corpus.edge_walks):
        if len(walk):
            counts[:, k] = np.bincount(walk, minlength=m)
    return counts


def pearson(v1, v2) -> float:
    """Pearson correlation with a constant-vector fallback.

    Identical vectors give 1; otherwise a constant vector gives 0.
    """
    a = np.asarray(v1, dtype=np.float64)
    b = np.asarray(v2, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("count vectors must be 1-D and of equal length")
    if len(a) < 2:
        raise ValueError("need at least two observations")
    if np.array_equal(a, b):
        return 1.0
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return 0.0
    da = a - a.mean()
    db = b - b.mean()
    r = float(da @ db / math.sqrt(float(da @ da) * float(db @ db)))
    return min(1.0, max(-1.0, r))


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def update_matrix(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts)
    m, n = counts.shape
    if n < 2:
        raise ValueError("need counts from at least two walks")
    out = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            out[i, j] = out[j, i] = sigmoid(pearson(counts[i], counts[j]))
    return out


def _derive(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, np.uint64)[0] >> 1)


def train_transition_matrix(graph: HetGraph, em_params: EmParams, walk_params: WalkParams | None = None,
                            seed: int = 0, threads: int | None = None,
                            trace: list | None = None) -> tuple[TransitionMatrix, WalkCorpus]:
    """Alternate walk generation and matrix refits, starting from all ones.

    Each iteration draws a fresh uniform sample of start nodes without
    replacement. Returns the last matrix and the last iteration's corpus;
    per-iteration :class:`IterationRecord` entries are appended to ``trace``.
    """
    walk_params = walk_params or em_params.walk
    # correlation needs >= 2 walks per iteration
    n_start = math.ceil(em_params.sample_ratio * graph.n_nodes)
    n_start = min(graph.n_nodes, max(n_start, math.ceil(2 / walk_params.walks_per_node)))
    matrix = TransitionMatrix.ones(graph.etype_labels)
    corpus = None
    for it in range(1, em_params.iterations + 1):
        rng = np.random.default_rng([seed, it, 0])
        starts = rng.choice(graph.n_nodes, size=n_start, replace=False)
        corpus = generate_corpus(graph, matrix, starts, walk_params, _derive(seed, it, 1), threads)
        counts = edge_type_count_vectors(corpus, graph.n_etypes)
        new = TransitionMatrix(update_matrix(counts), graph.etype_labels)
        change = float(np.max(np.abs(new.values - matrix.values)))
        if trace is not None:
            trace.append(IterationRecord(it, new, change, np.ptp(counts, axis=1) > 0))
        matrix = new
    return matrix, corpus
