"""Evaluation protocols: node classification, pair prediction, retrieval, similarity, PCA."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from edge2vec.hetgraph import HetGraph
from edge2vec.skipgram import Embeddings

# ---------------------------------------------------------------- features


def node_features(emb: Embeddings, nodes: Sequence[str], graph: HetGraph | None = None,
                  concat_edge_type_degrees: bool = False) -> np.ndarray:
    """Embedding rows, optionally followed by per-edge-type incident edge counts."""
    rows = np.array([emb.index(n) for n in nodes], dtype=np.int64)
    X = emb.vectors[rows]
    if concat_edge_type_degrees:
        if graph is None:
            raise ValueError("edge-type degree features need the graph")
        deg = graph.etype_degrees()
        X = np.hstack([X, deg[[graph.node_index(n) for n in nodes]].astype(np.float64)])
    return X


def pair_features(emb: Embeddings, a: str, b: str) -> np.ndarray:
    return emb[a] - emb[b]


def pair_feature_matrix(emb: Embeddings, pairs: Iterable[tuple[str, str]]) -> np.ndarray:
    return np.array([pair_features(emb, a, b) for a, b in pairs])


# ---------------------------------------------------------------- linear models


@dataclass
class LinearModel:
    weights: np.ndarray  # (C or 1) x d
    bias: np.ndarray
    loss: str
    n_classes: int
    mean: np.ndarray
    scale: np.ndarray

    @property
    def binary(self) -> bool:
        return self.n_classes == 2

    def decision_function(self, X) -> np.ndarray:
        Z = (np.asarray(X, dtype=np.float64) - self.mean) / self.scale
        return Z @ self.weights.T + self.bias

    def predict_proba(self, X) -> np.ndarray:
        """Positive-class probability for a binary logistic model."""
        if not (self.binary and self.loss == "log"):
            raise ValueError("probabilities are only defined for binary logistic models")
        return 1.0 / (1.0 + np.exp(-self.decision_function(X)[:, 0]))

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        if self.binary:
            if self.loss == "log":
                return (self.predict_proba(X) > 0.5).astype(np.int64)
            return (scores[:, 0] > 0).astype(np.int64)
        return np.argmax(scores, axis=1)


def train_linear(X, y, loss: str = "hinge", l2: float = 1e-4, epochs: int = 50, seed: int = 0,
                 n_classes: int | None = None, lr: float = 0.1) -> LinearModel:
    """One-vs-rest SGD with L2 on standardized features (hinge = linear SVM, log = logistic).

    Two classes train a single separator. Step size ``lr / (1 + lr*l2*t)``;
    the returned weights are the average over the second half of the epochs.
    """
    if loss not in ("hinge", "log"):
        raise ValueError(f"unknown loss {loss!r}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise ValueError("training data must contain at least two classes")
    C = int(n_classes if n_classes is not None else y.max() + 1)
    if y.min() < 0 or y.max() >= C:
        raise ValueError("labels outside [0, n_classes)")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale
    n, d = Z.shape
    if C == 2:
        targets = np.where(y == 1, 1.0, -1.0)[:, None]
    else:
        targets = np.where(y[:, None] == np.arange(C)[None, :], 1.0, -1.0)
    W = np.zeros((targets.shape[1], d))
    b = np.zeros(targets.shape[1])
    W_avg, b_avg, n_avg = np.zeros_like(W), np.zeros_like(b), 0
    rng = np.random.default_rng(seed)
    t = 0
    for ep in range(epochs):
        for i in rng.permutation(n):
            eta = lr / (1.0 + lr * l2 * t)
            z, yt = Z[i], targets[i]
            margin = yt * (W @ z + b)
            if loss == "hinge":
                coef = np.where(margin < 1.0, yt, 0.0)
            else:
                coef = yt / (1.0 + np.exp(np.clip(margin, -50, 50)))
            W *= 1.0 - eta * l2
            W += eta * coef[:, None] * z[None, :]
            b += eta * coef
            t += 1
            if ep >= epochs // 2:
                W_avg += W
                b_avg += b
                n_avg += 1
    return LinearModel(W_avg / n_avg, b_avg / n_avg, loss, C, mean, scale)


# ---------------------------------------------------------------- metrics


def classification_metrics(y_true, y_pred, n_classes: int) -> dict[str, float]:
    """Macro precision/recall/F1 (empty classes score 0) and Hamming loss."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError("label vectors differ in length")
    for arr in (y_true, y_pred):
        if len(arr) and (arr.min() < 0 or arr.max() >= n_classes):
            raise ValueError(f"label outside [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    tp = np.diag(cm).astype(np.float64)
    pred_tot = cm.sum(axis=0)
    true_tot = cm.sum(axis=1)
    prec = np.divide(tp, pred_tot, out=np.zeros(n_classes), where=pred_tot > 0)
    rec = np.divide(tp, true_tot, out=np.zeros(n_classes), where=true_tot > 0)
    denom = prec + rec
    f1 = np.divide(2 * prec * rec, denom, out=np.zeros(n_classes), where=denom > 0)
    hamming = float(np.mean(y_true != y_pred)) if len(y_true) else 0.0
    return {"precision": float(prec.mean()), "recall": float(rec.mean()),
            "f1": float(f1.mean()), "hamming": hamming, "accuracy": 1.0 - hamming}


def auroc(scores, labels) -> float:
    """Mann-Whitney AUROC; ties count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos, n_neg = int(labels.sum()), int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC needs both positive and negative labels")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


# ---------------------------------------------------------------- cross-validation


def stratified_folds(y, folds: int, seed: int = 0) -> np.ndarray:
    """Fold id per instance; per-class and per-fold sizes balanced to within one."""
    y = np.asarray(y)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if folds > len(y):
        raise ValueError(f"folds ({folds}) exceeds number of instances ({len(y)})")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in np.unique(y)])
    fold = np.empty(len(y), dtype=np.int64)
    fold[order] = np.arange(len(y)) % folds
    return fold


@dataclass
class CVResult:
    per_fold: list[dict[str, float]]
    mean: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.mean and self.per_fold:
            keys = self.per_fold[0].keys()
            self.mean = {k: float(np.mean([f[k] for f in self.per_fold if k in f])) for k in keys}


def cross_validate(X, y, folds: int = 10, loss: str = "hinge", l2: float = 1e-4, epochs: int = 50,
                   seed: int = 0, n_classes: int | None = None) -> CVResult:
    """Stratified k-fold evaluation; binary logistic folds also report AUROC."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    C = int(n_classes if n_classes is not None else y.max() + 1)
    fold = stratified_folds(y, folds, seed)
    per_fold = []
    for f in range(folds):
        test = fold == f
        model = train_linear(X[~test], y[~test], loss=loss, l2=l2, epochs=epochs, seed=seed + f,
                             n_classes=C)
        row = classification_metrics(y[test], model.predict(X[test]), C)
        row["n_test"] = float(test.sum())
        if C == 2 and loss == "log" and len(np.unique(y[test])) == 2:
            row["auroc"] = auroc(model.predict_proba(X[test]), y[test])
        per_fold.append(row)
    return CVResult(per_fold)


def balanced_sample(node_classes: dict[str, str], cap: int | None = None, seed: int = 0) -> list[str]:
    """Equal number of nodes per class: the smallest class size, optionally capped."""
    by_class: dict[str, list[str]] = {}
    for node, c in node_classes.items():
        by_class.setdefault(c, []).append(node)
    size = min(len(v) for v in by_class.values())
    if cap is not None:
        size = min(size, cap)
    rng = np.random.default_rng(seed)
    out = []
    for c in sorted(by_class):
        members = by_class[c]
        out.extend(members[i] for i in sorted(rng.choice(len(members), size, replace=False)))
    return out


# ---------------------------------------------------------------- retrieval


def cosine_topk(emb: Embeddings, query: str, k: int = 100,
                candidates: Iterable[str] | None = None) -> list[tuple[str, float]]:
    """Top-k nodes by cosine similarity to ``query`` (excluded); ties by node index."""
    if k < 1:
        raise ValueError("k must be >= 1")
    qi = emb.index(query)
    q = emb.vectors[qi]
    qn = np.linalg.norm(q)
    if qn == 0:
        raise ValueError(f"query {query!r} has a zero vector")
    if candidates is None:
        idx = np.arange(len(emb.labels))
    else:
        idx = np.array(sorted({emb.index(c) for c in candidates}), dtype=np.int64)
    idx = idx[idx != qi]
    V = emb.vectors[idx]
    norms = np.linalg.norm(V, axis=1)
    scores = np.divide(V @ q, norms * qn, out=np.zeros(len(idx)), where=norms > 0)
    order = np.lexsort((idx, -scores))[:k]
    return [(emb.labels[idx[o]], float(scores[o])) for o in order]


def _dcg(hits: np.ndarray) -> float:
    return float(np.sum(hits / np.log2(np.arange(2, len(hits) + 2))))


def query_metrics(ranked: Sequence[str], relevant: set, cutoffs=(10, 100)) -> dict[str, float]:
    if not relevant:
        raise ValueError("empty relevance set")
    hits = np.array([r in relevant for r in ranked], dtype=np.float64)
    out = {}
    for K in cutoffs:
        h = hits[:K].sum()
        out[f"P@{K}"] = float(h / K)
        out[f"R@{K}"] = float(h / len(relevant))
    pos = np.flatnonzero(hits)
    # exact rational, rounded once
    out["AP"] = float(sum(Fraction(i + 1, int(r) + 1) for i, r in enumerate(pos)) / len(relevant))
    ideal = np.zeros(len(hits))
    ideal[:min(len(relevant), len(hits))] = 1.0
    idcg = _dcg(ideal)
    out["NDCG"] = _dcg(hits) / idcg if idcg > 0 else 0.0
    out["RR"] = float(1.0 / (pos[0] + 1)) if len(pos) else 0.0
    return out


def ranking_metrics(ranked_lists: Sequence[Sequence[str]], relevant_sets: Sequence[set],
                    cutoffs=(10, 100)) -> tuple[dict[str, float], list[dict[str, float]]]:
    """Aggregate P@K, R@K, MAP, NDCG, MRR plus per-query rows.

    Relevant items missing from a list add zero to its average precision.
    """
    if not ranked_lists:
        raise ValueError("need at least one query")
    if len(ranked_lists) != len(relevant_sets):
        raise ValueError("one relevance set per ranked list")
    rows = [query_metrics(r, set(rel), cutoffs) for r, rel in zip(ranked_lists, relevant_sets)]
    def mean(key):
        # correctly rounded sum so averages of exact rationals stay exact where floats allow
        return math.fsum(r[key] for r in rows) / len(rows)

    summary = {}
    for K in cutoffs:
        summary[f"P@{K}"] = mean(f"P@{K}")
        summary[f"R@{K}"] = mean(f"R@{K}")
    summary["MAP"] = mean("AP")
    summary["NDCG"] = mean("NDCG")
    summary["MRR"] = mean("RR")
    return summary, rows


# ---------------------------------------------------------------- PCA


def _top_eigvec(C: np.ndarray, tol: float, max_iter: int, rng) -> tuple[float, np.ndarray]:
    x = rng.standard_normal(C.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = C @ x
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0, x
        y /= ny
        lam = float(y @ C @ y)
        if np.linalg.norm(y - x) < tol:
            x = y
            break
        x = y
    return lam, x


def pca_project_2d(X, tol: float = 1e-10, max_iter: int = 10_000) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project rows of ``X`` onto the top two principal axes.

    Returns (coordinates n x 2, components 2 x d, eigenvalues). Axes come from
    power iteration with deflation on the covariance; each axis is signed so its
    largest-magnitude loading is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 3:
        raise ValueError("need at least three points")
    Xc = X - X.mean(axis=0)
    C = Xc.T @ Xc / (n - 1)
    rng = np.random.default_rng(0)
    scale = float(np.trace(C))
    lam1, v1 = _top_eigvec(C, tol, max_iter, rng)
    D = C - lam1 * np.outer(v1, v1)
    lam2, v2 = _top_eigvec(D, tol, max_iter, rng)
    v2 -= (v2 @ v1) * v1
    nv2 = np.linalg.norm(v2)
    if scale == 0 or lam2 <= 1e-12 * scale or nv2 == 0:
        raise ValueError("data has rank < 2 after centering")
    v2 /= nv2
    comps = np.array([v1, v2])
    lams = np.array([v1 @ C @ v1, v2 @ C @ v2])
    if lams[1] > lams[0]:
        comps, lams = comps[::-1], lams[::-1]
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    return Xc @ comps.T, comps, lams
