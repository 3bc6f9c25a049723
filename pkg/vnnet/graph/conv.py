"""Node-adaptive weight pools and the static-dynamic graph convolution."""

from __future__ import annotations

import math

import torch
from torch import Tensor, nn

from ..errors import ConfigurationError
from .adjacency import AdjacencyPair


class NaplPools(nn.Module):
    """Shared weight pools W_s, W_d, W_b; per-node weights are E_n times a pool."""

    def __init__(self, embed_dim: int, in_channels: int, out_channels: int, *, dynamic: bool = True) -> None:
        super().__init__()
        self.embed_dim = embed_dim
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.pool_static = nn.Parameter(torch.empty(embed_dim, in_channels, out_channels))
        if dynamic:
            self.pool_dynamic = nn.Parameter(torch.empty(embed_dim, in_channels, out_channels))
        else:
            self.register_parameter("pool_dynamic", None)
        self.pool_bias = nn.Parameter(torch.empty(embed_dim, out_channels))
        self.reset_parameters()

    def reset_parameters(self) -> None:
        bound = 1.0 / math.sqrt(self.in_channels)
        for pool in self.parameters(recurse=False):
            nn.init.uniform_(pool, -bound, bound)

    @property
    def parameter_count(self) -> int:
        return sum(pool.numel() for pool in self.parameters(recurse=False))


def napl_materialize(node_table: Tensor, pool: Tensor) -> Tensor:
    """Contract (N, d_e) embeddings with a (d_e, ...) pool into per-node weights (N, ...)."""
    if node_table.ndim != 2 or node_table.shape[1] != pool.shape[0]:
        raise ConfigurationError(
            f"node table {tuple(node_table.shape)} does not match pool {tuple(pool.shape)}"
        )
    return torch.tensordot(node_table, pool, dims=1)


def sdgc_apply(
    x: Tensor,
    adj: AdjacencyPair,
    node_table: Tensor,
    pools: NaplPools,
    *,
    validate: bool = True,
) -> Tensor:
    """Z = (I + A_s) X Θ1 + A_d X Θ2 + b with node-specific Θ from the pools.

    ``x`` has shape (..., N, C); adjacencies broadcast against its leading axes.
    The dynamic term is skipped when the pools carry no dynamic pool.
    """
    if x.shape[-1] != pools.in_channels:
        raise ConfigurationError(f"input has {x.shape[-1]} channels, pools expect {pools.in_channels}")
    if validate:
        adj.validate()
    support = x + adj.static_adj @ x
    out = torch.einsum("...nc,ncf->...nf", support, napl_materialize(node_table, pools.pool_static))
    if pools.pool_dynamic is not None:
        if adj.dynamic_adj is None:
            raise ConfigurationError("pools carry a dynamic pool but no dynamic adjacency was given")
        dynamic = adj.dynamic_adj @ x
        out = out + torch.einsum("...nc,ncf->...nf", dynamic, napl_materialize(node_table, pools.pool_dynamic))
    return out + napl_materialize(node_table, pools.pool_bias)


__all__ = ["NaplPools", "napl_materialize", "sdgc_apply"]
