"""Compare learned-matrix walks against the uniform-matrix ablation on the planted graph.

Runs the full pipeline once, then re-walks and re-embeds with an all-ones
matrix, and prints the node-type classification scores of both.

    python scripts/run_benchmark.py --seeds 0 1 2
"""

import argparse
import shutil
import tempfile
import time
from pathlib import Path

from edge2vec import cli
from edge2vec.synthetic import PlantedConfig, planted_heterograph


def _scores(out: Path) -> dict[str, float]:
    rows = dict(line.rstrip("\n").split("\t") for line in open(out / "classify.tsv"))
    return {k: float(rows[k]) for k in ("precision", "recall", "f1", "hamming")}


def run_once(seed: int, work: Path, args) -> dict:
    records, types = planted_heterograph(PlantedConfig(seed=args.graph_seed))
    work.mkdir(parents=True, exist_ok=True)
    (work / "edges.tsv").write_text("".join(f"{r.src}\t{r.etype}\t{r.dst}\n" for r in records))
    (work / "labels.tsv").write_text("".join(f"{n}\t{t}\n" for n, t in types.items()))

    def cfg(out, **kw):
        return cli.PipelineConfig(input=str(work / "edges.tsv"), labels=str(work / "labels.tsv"),
                                  out_dir=str(out), sample_ratio=args.sample_ratio,
                                  walks_per_node=args.walks_per_node, seed=seed, mode=args.mode, **kw)

    t0 = time.perf_counter()
    cli.cmd_run(cfg(work / "edge2vec"))
    wall = time.perf_counter() - t0
    shutil.copytree(work / "edge2vec", work / "uniform")
    abl = cfg(work / "uniform", uniform_matrix=True)
    cli.cmd_walks(abl)
    cli.cmd_embed(abl)
    cli.cmd_eval(abl, "classify")
    return {"seed": seed, "wall": wall, "edge2vec": _scores(work / "edge2vec"), "uniform": _scores(work / "uniform")}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--graph-seed", type=int, default=0)
    ap.add_argument("--sample-ratio", type=float, default=0.2)
    ap.add_argument("--walks-per-node", type=int, default=10)
    ap.add_argument("--mode", choices=["deterministic", "parallel"], default="deterministic")
    ap.add_argument("--keep", help="directory to keep artifacts in (default: temporary)")
    args = ap.parse_args(argv)

    root = Path(args.keep) if args.keep else Path(tempfile.mkdtemp(prefix="edge2vec-bench-"))
    print("seed\twall_s\tedge2vec_f1\tuniform_f1\tdelta", flush=True)
    for seed in args.seeds:
        r = run_once(seed, root / f"seed{seed}", args)
        a, b = r["edge2vec"]["f1"], r["uniform"]["f1"]
        print(f"{seed}\t{r['wall']:.1f}\t{a:.4f}\t{b:.4f}\t{a - b:+.4f}", flush=True)
    if not args.keep:
        shutil.rmtree(root)


if __name__ == "__main__":
    main()
