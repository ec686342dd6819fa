"""Edge-type aware embeddings for heterogeneous graphs.

Pipeline: build a typed graph, learn an edge-type transition matrix from
biased random walks, generate a walk corpus with it, then fit node vectors
with skip-gram negative sampling.
"""

import numba

try:  # the TBB layer in some images is too old and warns on every parallel launch
    from numba.np.ufunc import omppool  # noqa: F401

    numba.config.THREADING_LAYER = "omp"
except ImportError:
    numba.config.THREADING_LAYER = "workqueue"

from edge2vec.hetgraph import (
    EdgeRecord,
    GraphError,
    HetGraph,
    ParseError,
    build_graph,
    graph_stats,
    parse_edge_list,
    parse_triples,
)
from edge2vec.skipgram import Embeddings, TrainParams, train_embeddings
from edge2vec.transition import EmParams, TransitionMatrix, train_transition_matrix
from edge2vec.walker import WalkCorpus, WalkParams, generate_corpus

__version__ = "0.1.0"

__all__ = [
    "EdgeRecord",
    "Embeddings",
    "EmParams",
    "GraphError",
    "HetGraph",
    "ParseError",
    "TrainParams",
    "TransitionMatrix",
    "WalkCorpus",
    "WalkParams",
    "build_graph",
    "generate_corpus",
    "graph_stats",
    "parse_edge_list",
    "parse_triples",
    "train_embeddings",
    "train_transition_matrix",
]
