"""Numerical branch: SDGRU cells stacked over the station window."""

from __future__ import annotations

import math

import torch
from torch import Tensor, nn

from ..errors import EmptyWindowError, NumericDivergenceError
from ..graph import (
    AdjacencyPair,
    EmbeddingTables,
    NaplPools,
    build_embedding,
    dynamic_adjacency,
    sdgc_apply,
    static_adjacency,
)


class SDGRUCell(nn.Module):
    """GRU cell whose linear maps are static-dynamic graph convolutions with node-adaptive weights.

    With ``dynamic=False`` the cell drops the input-conditioned graph; the decoder
    uses that variant.
    """

    def __init__(self, in_channels: int, hidden: int, embed_dim: int, *, dynamic: bool = True) -> None:
        super().__init__()
        self.in_channels = in_channels
        self.hidden = hidden
        width = in_channels + hidden
        self.update_gate = NaplPools(embed_dim, width, hidden, dynamic=dynamic)
        self.reset_gate = NaplPools(embed_dim, width, hidden, dynamic=dynamic)
        self.candidate = NaplPools(embed_dim, width, hidden, dynamic=dynamic)
        if dynamic:
            bound = 1.0 / math.sqrt(width)
            self.dyn_proj_1 = nn.Parameter(torch.empty(width, embed_dim).uniform_(-bound, bound))
            self.dyn_proj_2 = nn.Parameter(torch.empty(width, embed_dim).uniform_(-bound, bound))
        else:
            self.register_parameter("dyn_proj_1", None)
            self.register_parameter("dyn_proj_2", None)

    @property
    def dynamic(self) -> bool:
        return self.dyn_proj_1 is not None

    def graphs(self, gate_input: Tensor, emb_t: Tensor, static_adj: Tensor | None = None) -> AdjacencyPair:
        static = static_adj if static_adj is not None else static_adjacency(emb_t)
        if not self.dynamic:
            return AdjacencyPair(static)
        return AdjacencyPair(static, dynamic_adjacency(gate_input, self.dyn_proj_1, self.dyn_proj_2))

    def forward(
        self,
        x_t: Tensor,
        h_prev: Tensor,
        emb_t: Tensor,
        node_table: Tensor,
        *,
        static_adj: Tensor | None = None,
    ) -> Tensor:
        gate_input = torch.cat([x_t, h_prev], dim=-1)
        adj = self.graphs(gate_input, emb_t, static_adj)
        z = torch.sigmoid(sdgc_apply(gate_input, adj, node_table, self.update_gate, validate=False))
        r = torch.sigmoid(sdgc_apply(gate_input, adj, node_table, self.reset_gate, validate=False))
        candidate_input = torch.cat([x_t, r * h_prev], dim=-1)
        h_hat = torch.tanh(sdgc_apply(candidate_input, adj, node_table, self.candidate, validate=False))
        h_t = z * h_prev + (1.0 - z) * h_hat
        if not torch.isfinite(h_t).all():
            raise NumericDivergenceError("SDGRU hidden state became non-finite")
        return h_t


def sdgru_step(x_t: Tensor, h_prev: Tensor, emb_t: Tensor, cell: SDGRUCell, node_table: Tensor) -> Tensor:
    return cell(x_t, h_prev, emb_t, node_table)


class NumericalEncoder(nn.Module):
    """Stack of SDGRU layers; returns every layer's final hidden state, shape (B, L_n, N, F)."""

    def __init__(self, in_channels: int, hidden: int, embed_dim: int, num_layers: int) -> None:
        super().__init__()
        self.hidden = hidden
        self.cells = nn.ModuleList(
            SDGRUCell(in_channels if layer == 0 else hidden, hidden, embed_dim) for layer in range(num_layers)
        )

    def forward(self, window: Tensor, embeddings: Tensor, node_table: Tensor) -> Tensor:
        batch, steps, nodes, _ = window.shape
        if steps == 0:
            raise EmptyWindowError("numerical window has no time steps")
        sequence = window
        finals: list[Tensor] = []
        for cell in self.cells:
            h = window.new_zeros(batch, nodes, self.hidden)
            outputs: list[Tensor] = []
            for t in range(steps):
                h = cell(sequence[:, t], h, embeddings[:, t], node_table)
                outputs.append(h)
            sequence = torch.stack(outputs, dim=1)
            finals.append(h)
        return torch.stack(finals, dim=1)


def encode_numerical(
    window: Tensor,
    timestamps: Tensor,
    tables: EmbeddingTables,
    encoder: NumericalEncoder,
) -> Tensor:
    """Embed the window's calendar stamps and run the encoder; window is (B, T_h, N, D)."""
    return encoder(window, build_embedding(tables, timestamps), tables.node_table)


__all__ = ["NumericalEncoder", "SDGRUCell", "encode_numerical", "sdgru_step"]
