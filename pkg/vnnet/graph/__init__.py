"""Graph building blocks shared by the encoder and decoder."""

from .adjacency import AdjacencyPair, dynamic_adjacency, is_row_stochastic, row_softmax, static_adjacency
from .conv import NaplPools, napl_materialize, sdgc_apply
from .embedding import EmbeddingTables, build_embedding

__all__ = [
    "AdjacencyPair",
    "EmbeddingTables",
    "NaplPools",
    "build_embedding",
    "dynamic_adjacency",
    "is_row_stochastic",
    "napl_materialize",
    "row_softmax",
    "sdgc_apply",
    "static_adjacency",
]
