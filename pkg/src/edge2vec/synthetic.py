"""Planted heterogeneous benchmark graph."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from edge2vec.hetgraph import EdgeRecord


@dataclass(frozen=True)
class PlantedConfig:
    n_types: int = 3
    nodes_per_type: int = 200
    p_intra: float = 0.05
    p_cross: float = 0.005
    seed: int = 0


def planted_heterograph(cfg: PlantedConfig = PlantedConfig()) -> tuple[list[EdgeRecord], dict[str, str]]:
    """Edge records and node -> type labels.

    Edges inside node type ``i`` carry edge type ``intra<i>``; edges between
    different node types carry the shared type ``cross``.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_types * cfg.nodes_per_type
    block = np.arange(n) // cfg.nodes_per_type
    labels = [f"n{i}" for i in range(n)]
    iu, ju = np.triu_indices(n, k=1)
    same = block[iu] == block[ju]
    keep = rng.random(len(iu)) < np.where(same, cfg.p_intra, cfg.p_cross)
    records = [
        EdgeRecord(labels[i], f"intra{block[i]}" if block[i] == block[j] else "cross", labels[j], 1.0,
                   f"type{block[i]}", f"type{block[j]}")
        for i, j in zip(iu[keep], ju[keep])
    ]
    node_types = {labels[i]: f"type{block[i]}" for i in range(n)}
    return records, node_types
