"""Learnable node embeddings plus month/day/hour lookup tables."""

from __future__ import annotations

import math

import torch
from torch import Tensor, nn

from ..errors import InvalidTimestampError

MONTHS = 12
DAYS = 31
HOURS = 24


class EmbeddingTables(nn.Module):
    """Node table E_n and, unless disabled, the calendar tables added on top of it."""

    def __init__(self, nodes: int, embed_dim: int, *, time_embedding: bool = True) -> None:
        super().__init__()
        self.nodes = nodes
        self.embed_dim = embed_dim
        self.node_table = nn.Parameter(torch.empty(nodes, embed_dim))
        if time_embedding:
            self.month_table = nn.Parameter(torch.empty(MONTHS, embed_dim))
            self.day_table = nn.Parameter(torch.empty(DAYS, embed_dim))
            self.hour_table = nn.Parameter(torch.empty(HOURS, embed_dim))
        else:
            self.register_parameter("month_table", None)
            self.register_parameter("day_table", None)
            self.register_parameter("hour_table", None)
        self.reset_parameters()

    @property
    def time_enabled(self) -> bool:
        return self.month_table is not None

    def reset_parameters(self) -> None:
        bound = 1.0 / math.sqrt(self.embed_dim)
        for table in self.parameters(recurse=False):
            nn.init.uniform_(table, -bound, bound)

    def forward(self, timestamps: Tensor) -> Tensor:
        return build_embedding(self, timestamps)


def _check_range(values: Tensor, low: int, high: int, what: str) -> None:
    if values.numel() and (int(values.min()) < low or int(values.max()) > high):
        raise InvalidTimestampError(f"{what} index outside [{low}, {high}]")


def build_embedding(tables: EmbeddingTables, timestamps: Tensor) -> Tensor:
    """Per-step embeddings E_t = E_n + month + day + hour.

    ``timestamps`` holds (month 1-12, day 1-31, hour 0-23) triples with shape
    (..., T, 3); the result has shape (..., T, N, d_e).
    """
    if timestamps.shape[-1] != 3:
        raise InvalidTimestampError(f"timestamps need a trailing axis of 3, got {tuple(timestamps.shape)}")
    timestamps = timestamps.long()
    month, day, hour = timestamps.unbind(-1)
    _check_range(month, 1, MONTHS, "month")
    _check_range(day, 1, DAYS, "day")
    _check_range(hour, 0, HOURS - 1, "hour")

    node = tables.node_table
    if not tables.time_enabled:
        return node.expand(*timestamps.shape[:-1], *node.shape)
    calendar = tables.month_table[month - 1] + tables.day_table[day - 1] + tables.hour_table[hour]
    return node + calendar.unsqueeze(-2)


__all__ = ["DAYS", "EmbeddingTables", "HOURS", "MONTHS", "build_embedding"]
