"""Cross-modal fusion: numerical rows (plus a learnable query) attend over vision tokens."""

from __future__ import annotations

import math

import torch
from torch import Tensor, nn

from ..errors import ConfigurationError, EmptyVisionError


class DoubleQueryAttention(nn.Module):
    """Single-head cross-attention with residual and layer norm.

    In double-query mode the query projection reads [Z'_n, Z_L] (width 2F); in
    single-query mode Z_L is absent and the projection reads Z'_n alone.
    """

    def __init__(self, rows: int, features: int, vision_channels: int, *, double_query: bool = True) -> None:
        super().__init__()
        self.rows = rows
        self.features = features
        if double_query:
            bound = 1.0 / math.sqrt(features)
            self.learnable_query = nn.Parameter(torch.empty(rows, features).uniform_(-bound, bound))
        else:
            self.register_parameter("learnable_query", None)
        query_width = 2 * features if double_query else features
        self.query = nn.Linear(query_width, features, bias=False)
        self.key = nn.Linear(vision_channels, features, bias=False)
        self.value = nn.Linear(vision_channels, features, bias=False)
        self.norm = nn.LayerNorm(features)

    @property
    def double_query(self) -> bool:
        return self.learnable_query is not None

    def attend(self, z_n: Tensor, z_v: Tensor) -> tuple[Tensor, Tensor]:
        """Return the fused features (B, L_n, N, F) and the attention weights (B, L_n*N, H'*W')."""
        batch, layers, nodes, features = z_n.shape
        if layers * nodes != self.rows or features != self.features:
            raise ConfigurationError(
                f"numerical features {tuple(z_n.shape)} do not match {self.rows} x {self.features}"
            )
        tokens = z_v.flatten(2).transpose(1, 2)
        if tokens.shape[1] == 0:
            raise EmptyVisionError("vision features have no spatial tokens")
        rows = z_n.reshape(batch, layers * nodes, features)
        query_input = rows
        if self.learnable_query is not None:
            query_input = torch.cat([rows, self.learnable_query.expand(batch, -1, -1)], dim=-1)
        scores = self.query(query_input) @ self.key(tokens).transpose(1, 2) / math.sqrt(self.features)
        weights = torch.softmax(scores, dim=-1)
        fused = self.norm(rows + weights @ self.value(tokens))
        return fused.reshape(batch, layers, nodes, features), weights

    def forward(self, z_n: Tensor, z_v: Tensor) -> Tensor:
        return self.attend(z_n, z_v)[0]


def dqam(z_n: Tensor, z_v: Tensor, module: DoubleQueryAttention) -> Tensor:
    return module(z_n, z_v)


__all__ = ["DoubleQueryAttention", "dqam"]
