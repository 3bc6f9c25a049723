from __future__ import annotations

import math
from types import SimpleNamespace

import pytest
import torch

from vnnet.errors import ConfigurationError, InvalidTimestampError, InvariantViolationError, NumericError
from vnnet.graph import (
    AdjacencyPair,
    EmbeddingTables,
    NaplPools,
    build_embedding,
    dynamic_adjacency,
    is_row_stochastic,
    napl_materialize,
    sdgc_apply,
    static_adjacency,
)


def _zero_(module: torch.nn.Module) -> None:
    with torch.no_grad():
        for parameter in module.parameters():
            parameter.zero_()


def _dense_softmax_relu(logits: list[list[float]]) -> torch.Tensor:
    rows = []
    for row in logits:
        weights = [math.exp(max(value, 0.0)) for value in row]
        total = sum(weights)
        rows.append([weight / total for weight in weights])
    return torch.tensor(rows)


def _loop_sdgc(x, static_adj, dynamic_adj, node_table, pools) -> torch.Tensor:
    nodes, embed_dim = node_table.shape
    rows = []
    for i in range(nodes):
        theta_1 = sum(node_table[i, k] * pools.pool_static[k] for k in range(embed_dim))
        theta_2 = sum(node_table[i, k] * pools.pool_dynamic[k] for k in range(embed_dim))
        bias = sum(node_table[i, k] * pools.pool_bias[k] for k in range(embed_dim))
        static_in = x[i] + sum(static_adj[i, j] * x[j] for j in range(nodes))
        dynamic_in = sum(dynamic_adj[i, j] * x[j] for j in range(nodes))
        rows.append(static_in @ theta_1 + dynamic_in @ theta_2 + bias)
    return torch.stack(rows)


class TestEmbedding:
    def test_zero_tables_give_zero_embedding(self):
        tables = EmbeddingTables(3, 2)
        _zero_(tables)
        stamps = torch.tensor([[1, 1, 0], [12, 31, 23]])
        assert torch.equal(build_embedding(tables, stamps), torch.zeros(2, 3, 2))

    def test_zero_time_tables_reduce_to_node_table(self):
        tables = EmbeddingTables(4, 3)
        with torch.no_grad():
            for table in (tables.month_table, tables.day_table, tables.hour_table):
                table.zero_()
        out = build_embedding(tables, torch.tensor([[3, 14, 5], [7, 2, 19]]))
        for step in out:
            assert torch.equal(step, tables.node_table)

    def test_hand_addition(self):
        tables = EmbeddingTables(2, 2)
        with torch.no_grad():
            tables.node_table.copy_(torch.tensor([[1.0, 2.0], [3.0, 4.0]]))
            tables.month_table.zero_()
            tables.day_table.zero_()
            tables.hour_table.zero_()
            tables.month_table[1] = torch.tensor([10.0, 20.0])
            tables.day_table[4] = torch.tensor([100.0, 0.0])
            tables.hour_table[6] = torch.tensor([0.0, -1.0])
        out = build_embedding(tables, torch.tensor([[2, 5, 6], [1, 1, 0]]))
        expected_first = torch.tensor([[111.0, 21.0], [113.0, 23.0]])
        assert torch.equal(out[0], expected_first)
        assert torch.equal(out[1], tables.node_table.detach())

    def test_identical_stamps_identical_embeddings(self):
        tables = EmbeddingTables(3, 4)
        out = build_embedding(tables, torch.tensor([[5, 9, 13], [6, 1, 2], [5, 9, 13]]))
        assert torch.equal(out[0], out[2])

    @pytest.mark.parametrize("stamp", [[0, 1, 0], [13, 1, 0], [1, 32, 0], [1, 0, 0], [1, 1, 24], [1, 1, -1]])
    def test_out_of_range_stamp(self, stamp):
        with pytest.raises(InvalidTimestampError):
            build_embedding(EmbeddingTables(2, 2), torch.tensor([stamp]))

    def test_disabled_time_tables(self):
        tables = EmbeddingTables(3, 2, time_embedding=False)
        assert not tables.time_enabled
        out = build_embedding(tables, torch.tensor([[4, 4, 4], [5, 5, 5]]))
        assert out.shape == (2, 3, 2)
        assert torch.equal(out[1], tables.node_table)


class TestAdjacency:
    def test_singleton_static(self):
        assert torch.equal(static_adjacency(torch.randn(1, 3)), torch.ones(1, 1))

    def test_zero_embedding_is_uniform(self):
        adj = static_adjacency(torch.zeros(4, 2))
        assert torch.allclose(adj, torch.full((4, 4), 0.25))

    def test_static_matches_dense_oracle(self):
        emb = torch.tensor([[1.0, -2.0], [0.0, 3.0], [2.0, 1.0]])
        logits = [[sum(a * b for a, b in zip(row_i, row_j)) for row_j in emb.tolist()] for row_i in emb.tolist()]
        assert torch.allclose(static_adjacency(emb), _dense_softmax_relu(logits), atol=1e-12)

    def test_dynamic_zero_signal_is_uniform(self):
        adj = dynamic_adjacency(torch.zeros(3, 2), torch.randn(2, 4), torch.randn(2, 4))
        assert torch.allclose(adj, torch.full((3, 3), 1 / 3))

    def test_dynamic_singleton(self):
        adj = dynamic_adjacency(torch.randn(1, 2), torch.randn(2, 3), torch.randn(2, 3))
        assert torch.equal(adj, torch.ones(1, 1))

    def test_dynamic_matches_dense_oracle(self, generator):
        signal = torch.randn(3, 2, generator=generator)
        proj_1 = torch.randn(2, 2, generator=generator)
        proj_2 = torch.randn(2, 2, generator=generator)
        left = (signal @ proj_1).tolist()
        right = (signal @ proj_2).tolist()
        logits = [[sum(a * b for a, b in zip(row_i, row_j)) for row_j in right] for row_i in left]
        assert torch.allclose(dynamic_adjacency(signal, proj_1, proj_2), _dense_softmax_relu(logits), atol=1e-12)

    def test_dynamic_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            dynamic_adjacency(torch.randn(3, 2), torch.randn(3, 4), torch.randn(3, 4))

    def test_non_finite_embedding(self):
        emb = torch.randn(3, 2)
        emb[1, 0] = math.nan
        with pytest.raises(NumericError):
            static_adjacency(emb)

    def test_rows_are_stochastic_for_random_inputs(self, generator):
        for _ in range(200):
            nodes = int(torch.randint(1, 6, (1,), generator=generator))
            emb = 3 * torch.randn(nodes, 3, generator=generator)
            signal = torch.randn(nodes, 2, generator=generator)
            proj_1, proj_2 = torch.randn(2, 2, 3, generator=generator)
            dynamic = dynamic_adjacency(signal, proj_1, proj_2)
            assert is_row_stochastic(static_adjacency(emb))
            assert is_row_stochastic(dynamic)


class TestNapl:
    def test_one_hot_selects_pool_slice(self):
        pool = torch.randn(3, 2, 4)
        table = torch.eye(3)
        theta = napl_materialize(table, pool)
        for k in range(3):
            assert torch.equal(theta[k], pool[k])

    def test_scalar_weighting(self):
        pool = torch.randn(1, 2, 3)
        theta = napl_materialize(torch.ones(4, 1), pool)
        for node in theta:
            assert torch.equal(node, pool[0])

    def test_triple_loop_contraction(self):
        table = torch.tensor([[1.0, 2.0], [-1.0, 3.0]])
        pool = torch.tensor([[[2.0, -1.0]], [[0.0, 4.0]]])
        theta = napl_materialize(table, pool)
        expected = torch.zeros(2, 1, 2)
        for i in range(2):
            for c in range(1):
                for f in range(2):
                    expected[i, c, f] = sum(table[i, k] * pool[k, c, f] for k in range(2))
        assert torch.equal(theta, expected)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            napl_materialize(torch.randn(3, 2), torch.randn(4, 2, 2))

    def test_parameter_count_is_independent_of_nodes(self):
        pools = NaplPools(embed_dim=3, in_channels=5, out_channels=7)
        assert pools.parameter_count == 3 * 5 * 7 * 2 + 3 * 7
        static_only = NaplPools(embed_dim=3, in_channels=5, out_channels=7, dynamic=False)
        assert static_only.parameter_count == 3 * 5 * 7 + 3 * 7


class TestSdgc:
    def _setup(self, generator, nodes=3, channels=2, features=2, embed_dim=2):
        torch.manual_seed(int(torch.randint(0, 2**31, (1,), generator=generator)))
        pools = NaplPools(embed_dim, channels, features)
        node_table = torch.randn(nodes, embed_dim, generator=generator)
        adj = AdjacencyPair(
            static_adjacency(torch.randn(nodes, embed_dim, generator=generator)),
            dynamic_adjacency(
                torch.randn(nodes, channels, generator=generator),
                torch.randn(channels, embed_dim, generator=generator),
                torch.randn(channels, embed_dim, generator=generator),
            ),
        )
        return pools, node_table, adj

    def test_single_node_closed_form(self, generator):
        pools, node_table, _ = self._setup(generator, nodes=1)
        adj = AdjacencyPair(torch.ones(1, 1), torch.ones(1, 1))
        x = torch.randn(1, 2, generator=generator)
        theta_1 = napl_materialize(node_table, pools.pool_static)[0]
        theta_2 = napl_materialize(node_table, pools.pool_dynamic)[0]
        bias = napl_materialize(node_table, pools.pool_bias)[0]
        expected = 2 * x[0] @ theta_1 + x[0] @ theta_2 + bias
        assert torch.allclose(sdgc_apply(x, adj, node_table, pools)[0], expected, atol=1e-12)

    def test_zero_input_gives_bias(self, generator):
        pools, node_table, adj = self._setup(generator)
        out = sdgc_apply(torch.zeros(3, 2), adj, node_table, pools)
        assert torch.allclose(out, napl_materialize(node_table, pools.pool_bias), atol=1e-14)

    def test_matches_loop_oracle(self, generator):
        for _ in range(100):
            pools, node_table, adj = self._setup(generator)
            x = torch.randn(3, 2, generator=generator)
            expected = _loop_sdgc(x, adj.static_adj, adj.dynamic_adj, node_table, pools)
            assert torch.allclose(sdgc_apply(x, adj, node_table, pools), expected, atol=1e-10, rtol=0)

    def test_linear_in_input(self, generator):
        pools, node_table, adj = self._setup(generator, nodes=4, channels=3, features=2)
        x_1, x_2 = torch.randn(4, 3, generator=generator), torch.randn(4, 3, generator=generator)
        bias = napl_materialize(node_table, pools.pool_bias)
        combined = sdgc_apply(2.5 * x_1 - 0.7 * x_2, adj, node_table, pools) - bias
        separate = 2.5 * (sdgc_apply(x_1, adj, node_table, pools) - bias) - 0.7 * (
            sdgc_apply(x_2, adj, node_table, pools) - bias
        )
        assert torch.allclose(combined, separate, atol=1e-8, rtol=0)

    def test_batched_input_broadcasts(self, generator):
        pools, node_table, adj = self._setup(generator)
        x = torch.randn(5, 3, 2, generator=generator)
        batched = sdgc_apply(x, adj, node_table, pools)
        for index in range(5):
            assert torch.allclose(batched[index], sdgc_apply(x[index], adj, node_table, pools), atol=1e-12)

    def test_rejects_non_stochastic_adjacency(self, generator):
        pools, node_table, adj = self._setup(generator)
        broken = AdjacencyPair(adj.static_adj * 2, adj.dynamic_adj)
        with pytest.raises(InvariantViolationError):
            sdgc_apply(torch.randn(3, 2), broken, node_table, pools)

    def test_channel_mismatch(self, generator):
        pools, node_table, adj = self._setup(generator)
        with pytest.raises(ConfigurationError):
            sdgc_apply(torch.randn(3, 5), adj, node_table, pools)

    def test_gradients_match_finite_differences(self, generator):
        # Positive inputs keep every ReLU logit away from its kink.
        nodes, channels, features, embed_dim = 3, 2, 2, 2
        x = torch.rand(nodes, channels, generator=generator) + 0.1
        node_table = torch.rand(nodes, embed_dim, generator=generator) + 0.1
        proj_1 = torch.rand(channels, embed_dim, generator=generator) + 0.1
        proj_2 = torch.rand(channels, embed_dim, generator=generator) + 0.1
        pool_static = torch.randn(embed_dim, channels, features, generator=generator)
        pool_dynamic = torch.randn(embed_dim, channels, features, generator=generator)
        pool_bias = torch.randn(embed_dim, features, generator=generator)
        inputs = tuple(t.requires_grad_(True) for t in (x, node_table, pool_static, pool_dynamic, pool_bias))

        def fn(x, node_table, pool_static, pool_dynamic, pool_bias):
            pools = SimpleNamespace(
                in_channels=channels,
                pool_static=pool_static,
                pool_dynamic=pool_dynamic,
                pool_bias=pool_bias,
            )
            adj = AdjacencyPair(static_adjacency(node_table), dynamic_adjacency(x, proj_1, proj_2))
            return sdgc_apply(x, adj, node_table, pools)

        assert torch.autograd.gradcheck(fn, inputs, eps=1e-6, atol=1e-6, rtol=1e-4)
