"""Write the planted heterograph benchmark as an edge list plus node-type labels.

    python scripts/make_planted_graph.py --out-dir data/planted
"""

import argparse
from pathlib import Path

from edge2vec.synthetic import PlantedConfig, planted_heterograph


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="data/planted")
    ap.add_argument("--n-types", type=int, default=PlantedConfig.n_types)
    ap.add_argument("--nodes-per-type", type=int, default=PlantedConfig.nodes_per_type)
    ap.add_argument("--p-intra", type=float, default=PlantedConfig.p_intra)
    ap.add_argument("--p-cross", type=float, default=PlantedConfig.p_cross)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    cfg = PlantedConfig(args.n_types, args.nodes_per_type, args.p_intra, args.p_cross, args.seed)
    records, node_types = planted_heterograph(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.tsv", "w") as fh:
        fh.writelines(f"{r.src}\t{r.etype}\t{r.dst}\n" for r in records)
    with open(out / "labels.tsv", "w") as fh:
        fh.writelines(f"{n}\t{t}\n" for n, t in node_types.items())
    print(f"{len(node_types)} nodes, {len(records)} edges -> {out}")


if __name__ == "__main__":
    main()
