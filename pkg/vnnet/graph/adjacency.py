"""Adaptive adjacency matrices learned from embeddings or from the input signal."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Self

import torch
from torch import Tensor

from ..errors import ConfigurationError, InvariantViolationError, NumericError

ROW_SUM_TOLERANCE = 1e-6


def row_softmax(logits: Tensor) -> Tensor:
    """Softmax along each row (torch subtracts the row max internally)."""
    return torch.softmax(logits, dim=-1)


def _require_finite(tensor: Tensor, what: str) -> None:
    if not torch.isfinite(tensor).all():
        raise NumericError(f"{what} contains non-finite values")


def static_adjacency(emb: Tensor) -> Tensor:
    """Normalized static graph softmax(ReLU(E_t E_t^T)) for embeddings of shape (..., N, d_e)."""
    _require_finite(emb, "embedding")
    return row_softmax(torch.relu(emb @ emb.transpose(-1, -2)))


def dynamic_adjacency(signal: Tensor, proj_1: Tensor, proj_2: Tensor) -> Tensor:
    """Input-conditioned graph softmax(ReLU((X W_1)(X W_2)^T)) for a signal of shape (..., N, C)."""
    channels = signal.shape[-1]
    if proj_1.shape != proj_2.shape or proj_1.ndim != 2 or proj_1.shape[0] != channels:
        raise ConfigurationError(
            f"projections {tuple(proj_1.shape)} / {tuple(proj_2.shape)} do not fit a signal with {channels} channels"
        )
    _require_finite(signal, "graph signal")
    return row_softmax(torch.relu((signal @ proj_1) @ (signal @ proj_2).transpose(-1, -2)))


def is_row_stochastic(adj: Tensor, atol: float = ROW_SUM_TOLERANCE) -> bool:
    if adj.shape[-1] != adj.shape[-2]:
        return False
    rows = adj.sum(dim=-1)
    return bool((adj >= 0).all()) and bool(torch.allclose(rows, torch.ones_like(rows), rtol=0.0, atol=atol))


@dataclass(slots=True, frozen=True)
class AdjacencyPair:
    """Static graph (without the identity) and optional dynamic graph for one step."""

    static_adj: Tensor
    dynamic_adj: Tensor | None = None

    def validate(self, atol: float = ROW_SUM_TOLERANCE) -> Self:
        if not is_row_stochastic(self.static_adj, atol):
            raise InvariantViolationError("static adjacency is not row-stochastic")
        if self.dynamic_adj is not None and not is_row_stochastic(self.dynamic_adj, atol):
            raise InvariantViolationError("dynamic adjacency is not row-stochastic")
        return self


__all__ = [
    "AdjacencyPair",
    "ROW_SUM_TOLERANCE",
    "dynamic_adjacency",
    "is_row_stochastic",
    "row_softmax",
    "static_adjacency",
]
