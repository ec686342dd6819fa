"""Command line pipeline: ingest -> matrix -> walks -> embed -> eval."""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

import edge2vec
from edge2vec import evalkit
from edge2vec.hetgraph import (
    DEFAULT_TYPE_RULE,
    HetGraph,
    build_graph,
    graph_stats,
    parse_edge_list,
    parse_triples,
)
from edge2vec.skipgram import Embeddings, TrainParams, train_embeddings
from edge2vec.transition import EmParams, TransitionMatrix, train_transition_matrix
from edge2vec.walker import WalkParams, generate_corpus, read_corpus, write_corpus

log = logging.getLogger("edge2vec")

EDGES = "edges.tsv"
NODES = "nodes.tsv"
ETYPES = "etypes.tsv"
GRAPH_META = "graph.json"
STATS = "stats.tsv"
MATRIX = "matrix.tsv"
MATRIX_LOG = "matrix_iterations.tsv"
WALKS = "walks.txt"
EMBEDDINGS = "embeddings.txt"
MANIFEST = "manifest.json"

SUBTASKS = ("classify", "linkpred", "rank", "similar", "project")


class StageError(RuntimeError):
    pass


@dataclass
class PipelineConfig:
    input: str | None = None
    format: str = "edgelist"
    type_rule: str = DEFAULT_TYPE_RULE
    directed: bool = False
    p: float = 0.25
    q: float = 0.25
    walk_length: int = 50
    walks_per_node: int = 1
    em_iters: int = 10
    sample_ratio: float = 0.01
    dim: int = 128
    window: int = 10
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    lr_min: float = 1e-4
    seed: int = 0
    threads: int = 0
    mode: str = "deterministic"
    uniform_matrix: bool = False
    out_dir: str = "out"
    labels: str | None = None
    positives: str | None = None
    negatives_file: str | None = None
    queries: str | None = None
    topk: int = 100
    folds: int = 10
    max_per_class: int | None = None
    edge_type_degrees: bool = False
    candidate_type: str | None = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> PipelineConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in vars(args).items() if k in names})

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    def walk_params(self) -> WalkParams:
        return WalkParams(self.p, self.q, self.walk_length, self.walks_per_node)

    def train_params(self) -> TrainParams:
        return TrainParams(self.dim, self.window, self.negatives, self.epochs, self.lr, self.lr_min,
                           self.mode, self.threads or None)


def stage_seed(master: int, stage: str) -> int:
    digest = hashlib.blake2b(f"{master}:{stage}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_kv(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in rows:
            fh.write(f"{k}\t{v!r}\n" if isinstance(v, float) else f"{k}\t{v}\n")


def _write_table(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(repr(x) if isinstance(x, float) else str(x) for x in row) + "\n")


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


def _read_tsv(path, min_fields: int) -> list[list[str]]:
    rows = []
    with open(_require(Path(path), "input file"), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.rstrip("\r\n").split("\t")
            if len(fields) < min_fields:
                raise ValueError(f"{path}:{lineno}: expected {min_fields} tab-separated fields")
            rows.append([f.strip() for f in fields])
    return rows


# ---------------------------------------------------------------- graph snapshot


def save_graph(graph: HetGraph, out: Path) -> list[Path]:
    with open(out / EDGES, "w", encoding="utf-8") as fh:
        graph.write_edge_list(fh)
    types = graph.node_types or ("",) * graph.n_nodes
    with open(out / NODES, "w", encoding="utf-8") as fh:
        for lab, t in zip(graph.node_labels, types):
            fh.write(f"{lab}\t{t}\n")
    with open(out / ETYPES, "w", encoding="utf-8") as fh:
        fh.write("".join(f"{lab}\n" for lab in graph.etype_labels))
    (out / GRAPH_META).write_text(json.dumps({"directed": graph.directed}) + "\n")
    return [out / EDGES, out / NODES, out / ETYPES, out / GRAPH_META]


def load_graph(out: Path) -> HetGraph:
    for name in (EDGES, NODES, ETYPES, GRAPH_META):
        _require(out / name, "graph artifact")
    meta = json.loads((out / GRAPH_META).read_text())
    nodes = [line.rstrip("\n").split("\t") for line in open(out / NODES, encoding="utf-8") if line.strip()]
    etypes = [line.rstrip("\n") for line in open(out / ETYPES, encoding="utf-8") if line.strip()]
    types = {n[0]: n[1] for n in nodes if len(n) > 1 and n[1]}
    with open(out / EDGES, encoding="utf-8") as fh:
        records = parse_edge_list(fh)
    return build_graph(records, directed=meta["directed"], node_order=[n[0] for n in nodes],
                       etype_order=etypes, node_types=types or None)


# ---------------------------------------------------------------- stages


def cmd_ingest(cfg: PipelineConfig) -> list[Path]:
    if not cfg.input:
        raise ValueError("--input is required")
    src = _require(Path(cfg.input), "input file")
    cfg.out.mkdir(parents=True, exist_ok=True)
    with open(src, encoding="utf-8") as fh:
        try:
            if cfg.format == "triples":
                records = parse_triples(fh, cfg.type_rule)
            else:
                records = parse_edge_list(fh)
        except ValueError as exc:
            raise ValueError(f"{src}: {exc}") from None
    graph = build_graph(records, directed=cfg.directed)
    stats = graph_stats(graph)
    _write_kv(cfg.out / STATS, stats.rows())
    log.info("ingested %d nodes, %d edges, %d edge types", stats.n_nodes, stats.n_edges, graph.n_etypes)
    return save_graph(graph, cfg.out) + [cfg.out / STATS]


def cmd_matrix(cfg: PipelineConfig) -> list[Path]:
    graph = load_graph(cfg.out)
    em = EmParams(cfg.em_iters, cfg.sample_ratio, cfg.walk_params())
    trace: list = []
    matrix, _ = train_transition_matrix(graph, em, seed=stage_seed(cfg.seed, "matrix"),
                                        threads=cfg.threads or None, trace=trace)
    matrix.save(cfg.out / MATRIX)
    _write_table(cfg.out / MATRIX_LOG, ["iteration", "max_abs_change"],
                 [(r.iteration, r.max_change) for r in trace])
    return [cfg.out / MATRIX, cfg.out / MATRIX_LOG]


def cmd_walks(cfg: PipelineConfig) -> list[Path]:
    graph = load_graph(cfg.out)
    if cfg.uniform_matrix:
        matrix = TransitionMatrix.ones(graph.etype_labels)
    else:
        matrix = TransitionMatrix.load(_require(cfg.out / MATRIX, "matrix artifact"))
        matrix = matrix.reordered(graph.etype_labels)
    corpus = generate_corpus(graph, matrix, range(graph.n_nodes), cfg.walk_params(),
                             stage_seed(cfg.seed, "walks"), threads=cfg.threads or None)
    return list(write_corpus(corpus, graph, cfg.out / WALKS))


def cmd_embed(cfg: PipelineConfig) -> list[Path]:
    graph = load_graph(cfg.out)
    corpus = read_corpus(_require(cfg.out / WALKS, "walk corpus"), graph)
    vectors = train_embeddings(corpus, graph.n_nodes, cfg.train_params(), stage_seed(cfg.seed, "embed"))
    Embeddings(graph.node_labels, vectors).save(cfg.out / EMBEDDINGS)
    return [cfg.out / EMBEDDINGS]


def _load_embeddings(cfg: PipelineConfig) -> Embeddings:
    return Embeddings.load(_require(cfg.out / EMBEDDINGS, "embedding artifact"))


def _eval_classify(cfg: PipelineConfig, emb: Embeddings) -> list[Path]:
    if not cfg.labels:
        raise ValueError("classify needs --labels")
    node_class = {r[0]: r[1] for r in _read_tsv(cfg.labels, 2)}
    nodes = evalkit.balanced_sample(node_class, cfg.max_per_class, seed=stage_seed(cfg.seed, "sample"))
    classes = sorted(set(node_class[n] for n in nodes))
    y = np.array([classes.index(node_class[n]) for n in nodes])
    graph = load_graph(cfg.out) if cfg.edge_type_degrees else None
    X = evalkit.node_features(emb, nodes, graph, cfg.edge_type_degrees)
    res = evalkit.cross_validate(X, y, cfg.folds, "hinge", seed=stage_seed(cfg.seed, "classify"),
                                 n_classes=len(classes))
    keys = ["precision", "recall", "f1", "hamming"]
    _write_kv(cfg.out / "classify.tsv", [("n_instances", len(nodes)), ("n_classes", len(classes))]
              + [(k, res.mean[k]) for k in keys])
    _write_table(cfg.out / "classify_folds.tsv", ["fold"] + keys,
                 [[i] + [f[k] for k in keys] for i, f in enumerate(res.per_fold)])
    return [cfg.out / "classify.tsv", cfg.out / "classify_folds.tsv"]


def _eval_linkpred(cfg: PipelineConfig, emb: Embeddings) -> list[Path]:
    if not cfg.positives or not cfg.negatives_file:
        raise ValueError("linkpred needs --positives and --negatives-file")
    pos = [tuple(r[:2]) for r in _read_tsv(cfg.positives, 2)]
    neg = [tuple(r[:2]) for r in _read_tsv(cfg.negatives_file, 2)]
    X = evalkit.pair_feature_matrix(emb, pos + neg)
    y = np.array([1] * len(pos) + [0] * len(neg))
    res = evalkit.cross_validate(X, y, cfg.folds, "log", seed=stage_seed(cfg.seed, "linkpred"), n_classes=2)
    keys = ["precision", "recall", "f1", "hamming", "auroc"]
    _write_kv(cfg.out / "linkpred.tsv", [("n_pairs", len(y))] + [(k, res.mean.get(k, float("nan"))) for k in keys])
    _write_table(cfg.out / "linkpred_folds.tsv", ["fold"] + keys,
                 [[i] + [f.get(k, float("nan")) for k in keys] for i, f in enumerate(res.per_fold)])
    return [cfg.out / "linkpred.tsv", cfg.out / "linkpred_folds.tsv"]


def _read_queries(cfg: PipelineConfig) -> dict[str, set[str]]:
    if not cfg.queries:
        raise ValueError("this subtask needs --queries")
    queries: dict[str, set[str]] = {}
    for row in _read_tsv(cfg.queries, 1):
        rel = queries.setdefault(row[0], set())
        if len(row) > 1 and row[1]:
            rel.add(row[1])
    return queries


def _candidates(cfg: PipelineConfig):
    if not cfg.candidate_type:
        return None
    graph = load_graph(cfg.out)
    if graph.node_types is None:
        raise ValueError("--candidate-type needs node types in the graph snapshot")
    return [lab for lab, t in zip(graph.node_labels, graph.node_types) if t == cfg.candidate_type]


def _eval_rank(cfg: PipelineConfig, emb: Embeddings) -> list[Path]:
    queries = _read_queries(cfg)
    cands = _candidates(cfg)
    names = sorted(queries)
    ranked = [[lab for lab, _ in evalkit.cosine_topk(emb, q, cfg.topk, cands)] for q in names]
    summary, rows = evalkit.ranking_metrics(ranked, [queries[q] for q in names], cutoffs=(10, 100))
    _write_kv(cfg.out / "rank.tsv", [("n_queries", len(names))] + list(summary.items()))
    keys = list(rows[0])
    _write_table(cfg.out / "rank_queries.tsv", ["query"] + keys, [[q] + [r[k] for k in keys] for q, r in zip(names, rows)])
    return [cfg.out / "rank.tsv", cfg.out / "rank_queries.tsv"]


def _eval_similar(cfg: PipelineConfig, emb: Embeddings) -> list[Path]:
    cands = _candidates(cfg)
    rows = []
    for q in sorted(_read_queries(cfg)):
        for rank, (lab, score) in enumerate(evalkit.cosine_topk(emb, q, cfg.topk, cands), start=1):
            rows.append((q, rank, lab, score))
    _write_table(cfg.out / "similar.tsv", ["query", "rank", "node", "cosine"], rows)
    return [cfg.out / "similar.tsv"]


def _eval_project(cfg: PipelineConfig, emb: Embeddings) -> list[Path]:
    if cfg.labels:
        node_class = {r[0]: r[1] for r in _read_tsv(cfg.labels, 2)}
    else:
        graph = load_graph(cfg.out)
        types = graph.node_types or ("",) * graph.n_nodes
        node_class = dict(zip(graph.node_labels, types))
    nodes = [lab for lab in emb.labels if lab in node_class]
    coords, _, _ = evalkit.pca_project_2d(emb.vectors[[emb.index(n) for n in nodes]])
    _write_table(cfg.out / "pca.tsv", ["node", "x", "y", "class"],
                 [(n, float(x), float(y), node_class[n]) for n, (x, y) in zip(nodes, coords)])
    return [cfg.out / "pca.tsv"]


_EVAL = {"classify": _eval_classify, "linkpred": _eval_linkpred, "rank": _eval_rank,
         "similar": _eval_similar, "project": _eval_project}


def cmd_eval(cfg: PipelineConfig, subtask: str) -> list[Path]:
    if subtask not in _EVAL:
        raise ValueError(f"unknown eval subtask {subtask!r}")
    return _EVAL[subtask](cfg, _load_embeddings(cfg))


def _auto_subtasks(cfg: PipelineConfig) -> list[str]:
    tasks = []
    if cfg.labels:
        tasks += ["classify", "project"]
    if cfg.positives and cfg.negatives_file:
        tasks.append("linkpred")
    if cfg.queries:
        tasks += ["rank", "similar"]
    return tasks


def cmd_run(cfg: PipelineConfig) -> dict:
    """Run every stage and write ``manifest.json`` with per-stage checksums and timings."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    stages = [("ingest", lambda: cmd_ingest(cfg)), ("matrix", lambda: cmd_matrix(cfg)),
              ("walks", lambda: cmd_walks(cfg)), ("embed", lambda: cmd_embed(cfg))]
    tasks = _auto_subtasks(cfg)
    stages.append(("eval", lambda: [p for t in tasks for p in cmd_eval(cfg, t)]))
    records = []
    for name, fn in stages:
        t0 = time.perf_counter()
        try:
            paths = fn()
        except Exception as exc:
            raise StageError(f"stage {name} failed: {exc}") from exc
        seconds = time.perf_counter() - t0
        status = "skipped" if name == "eval" and not tasks else "ok"
        records.append({"name": name, "status": status, "seconds": seconds,
                        "artifacts": {p.name: sha256(p) for p in paths}})
        log.info("stage %-6s %-7s %.2fs", name, status, seconds)
    manifest = {"version": edge2vec.__version__, "config": dataclasses.asdict(cfg),
                "eval_subtasks": tasks, "stages": records}
    (cfg.out / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


# ---------------------------------------------------------------- argument parsing


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {s}")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {s}")
    return v


def _ratio(s):
    v = float(s)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {s}")
    return v


def _walk_length(s):
    v = int(s)
    if v < 2:
        raise argparse.ArgumentTypeError(f"must be >= 2, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("pipeline")
    g.add_argument("--input")
    g.add_argument("--format", choices=["edgelist", "triples"], default="edgelist")
    g.add_argument("--type-rule", default=DEFAULT_TYPE_RULE,
                   help="regex with one capture group giving the node type of a URI")
    d = g.add_mutually_exclusive_group()
    d.add_argument("--undirected", dest="directed", action="store_false")
    d.add_argument("--directed", dest="directed", action="store_true")
    g.set_defaults(directed=False)
    g.add_argument("--p", type=_positive_float, default=0.25)
    g.add_argument("--q", type=_positive_float, default=0.25)
    g.add_argument("--walk-length", type=_walk_length, default=50)
    g.add_argument("--walks-per-node", type=_positive_int, default=1)
    g.add_argument("--em-iters", type=_positive_int, default=10)
    g.add_argument("--sample-ratio", type=_ratio, default=0.01)
    g.add_argument("--dim", type=_positive_int, default=128)
    g.add_argument("--window", type=_positive_int, default=10)
    g.add_argument("--negatives", type=int, default=5, help="negative samples per pair")
    g.add_argument("--epochs", type=_positive_int, default=5)
    g.add_argument("--lr", type=_positive_float, default=0.025)
    g.add_argument("--lr-min", type=_positive_float, default=1e-4)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    g.add_argument("--mode", choices=["deterministic", "parallel"], default="deterministic")
    g.add_argument("--uniform-matrix", action="store_true",
                   help="walk with an all-ones transition matrix (node2vec ablation)")
    g.add_argument("--out-dir", default="out")
    e = common.add_argument_group("evaluation")
    e.add_argument("--labels", help="TSV node<TAB>class")
    e.add_argument("--positives", help="TSV nodeA<TAB>nodeB positive pairs")
    e.add_argument("--negatives-file", help="TSV nodeA<TAB>nodeB negative pairs")
    e.add_argument("--queries", help="TSV query<TAB>relevant_node")
    e.add_argument("--topk", type=_positive_int, default=100)
    e.add_argument("--folds", type=int, default=10)
    e.add_argument("--max-per-class", type=_positive_int)
    e.add_argument("--edge-type-degrees", action="store_true",
                   help="append per-edge-type degree counts to classification features")
    e.add_argument("--candidate-type", help="restrict retrieval candidates to one node type")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="edge2vec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("ingest", "matrix", "walks", "embed", "run"):
        sub.add_parser(name, parents=[common])
    ev = sub.add_parser("eval", parents=[common])
    ev.add_argument("subtask", choices=SUBTASKS)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = PipelineConfig.from_args(args)
    try:
        TrainParams(cfg.dim, cfg.window, cfg.negatives, cfg.epochs, cfg.lr, cfg.lr_min, cfg.mode)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        if args.command == "eval":
            cmd_eval(cfg, args.subtask)
        elif args.command == "run":
            cmd_run(cfg)
        else:
            {"ingest": cmd_ingest, "matrix": cmd_matrix, "walks": cmd_walks, "embed": cmd_embed}[args.command](cfg)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"edge2vec {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
