from __future__ import annotations

import pytest
import torch
from torch.func import functional_call

from vnnet.errors import EmptyWindowError
from vnnet.graph import EmbeddingTables, build_embedding
from vnnet.models import NumericalEncoder, SDGRUCell, encode_numerical, sdgru_step


def _dense_conv(inputs, static_adj, dynamic_adj, node_table, pools):
    rows = []
    for i in range(inputs.shape[0]):
        theta_1 = torch.einsum("k,kcf->cf", node_table[i], pools.pool_static)
        bias = node_table[i] @ pools.pool_bias
        row = (static_adj[i] @ inputs) @ theta_1 + bias
        if pools.pool_dynamic is not None:
            theta_2 = torch.einsum("k,kcf->cf", node_table[i], pools.pool_dynamic)
            row = row + (dynamic_adj[i] @ inputs) @ theta_2
        rows.append(row)
    return torch.stack(rows)


def sdgru_oracle(cell: SDGRUCell, x, h, emb, node_table):
    """One unbatched SDGRU step written out gate by gate."""
    nodes = x.shape[0]
    gate_input = torch.cat([x, h], dim=-1)
    static_adj = torch.eye(nodes) + torch.softmax(torch.relu(emb @ emb.T), dim=-1)
    dynamic_adj = None
    if cell.dynamic:
        m_1 = gate_input @ cell.dyn_proj_1
        m_2 = gate_input @ cell.dyn_proj_2
        dynamic_adj = torch.softmax(torch.relu(m_1 @ m_2.T), dim=-1)
    z = torch.sigmoid(_dense_conv(gate_input, static_adj, dynamic_adj, node_table, cell.update_gate))
    r = torch.sigmoid(_dense_conv(gate_input, static_adj, dynamic_adj, node_table, cell.reset_gate))
    candidate_input = torch.cat([x, r * h], dim=-1)
    h_hat = torch.tanh(_dense_conv(candidate_input, static_adj, dynamic_adj, node_table, cell.candidate))
    return z * h + (1 - z) * h_hat


class TestSdgruStep:
    def test_zero_parameters_halve_state(self):
        cell = SDGRUCell(2, 3, 2)
        with torch.no_grad():
            for parameter in cell.parameters():
                parameter.zero_()
        h_prev = torch.randn(4, 3)
        out = cell(torch.randn(4, 2), h_prev, torch.randn(4, 2), torch.randn(4, 2))
        assert torch.allclose(out, 0.5 * h_prev, atol=1e-15)

    def test_saturated_update_gate_keeps_state(self):
        cell = SDGRUCell(2, 3, 1)
        with torch.no_grad():
            cell.update_gate.pool_static.zero_()
            cell.update_gate.pool_dynamic.zero_()
            cell.update_gate.pool_bias.fill_(100.0)
        h_prev = torch.rand(4, 3) * 2 - 1
        out = cell(torch.randn(4, 2), h_prev, torch.randn(4, 1), torch.ones(4, 1))
        assert torch.allclose(out, h_prev, atol=1e-12)

    def test_matches_dense_oracle(self):
        for seed in range(100):
            torch.manual_seed(seed)
            cell = SDGRUCell(2, 2, 2)
            x, h = torch.randn(3, 2), torch.randn(3, 2)
            emb, node_table = torch.randn(3, 2), torch.randn(3, 2)
            expected = sdgru_oracle(cell, x, h, emb, node_table)
            assert torch.allclose(sdgru_step(x, h, emb, cell, node_table), expected, atol=1e-8, rtol=0)

    def test_static_only_matches_dense_oracle(self):
        torch.manual_seed(5)
        cell = SDGRUCell(1, 3, 2, dynamic=False)
        x, h, node_table = torch.randn(4, 1), torch.randn(4, 3), torch.randn(4, 2)
        expected = sdgru_oracle(cell, x, h, node_table, node_table)
        assert torch.allclose(cell(x, h, node_table, node_table), expected, atol=1e-8, rtol=0)

    def test_state_stays_in_unit_box(self):
        torch.manual_seed(1)
        cell = SDGRUCell(3, 4, 2)
        h = torch.rand(5, 4) * 2 - 1
        for _ in range(10):
            h = cell(10 * torch.randn(5, 3), h, torch.randn(5, 2), torch.randn(5, 2))
            assert h.abs().max() <= 1.0 + 1e-12


class TestEncoder:
    def test_single_step_is_one_cell_call_per_layer(self):
        torch.manual_seed(0)
        encoder = NumericalEncoder(2, 3, 2, num_layers=2)
        window, emb, node_table = torch.randn(1, 1, 3, 2), torch.randn(1, 1, 3, 2), torch.randn(3, 2)
        first = encoder.cells[0](window[:, 0], torch.zeros(1, 3, 3), emb[:, 0], node_table)
        second = encoder.cells[1](first, torch.zeros(1, 3, 3), emb[:, 0], node_table)
        out = encoder(window, emb, node_table)
        assert out.shape == (1, 2, 3, 3)
        assert torch.allclose(out[:, 0], first, atol=1e-14)
        assert torch.allclose(out[:, 1], second, atol=1e-14)

    def test_single_layer_shape(self):
        encoder = NumericalEncoder(2, 5, 2, num_layers=1)
        out = encoder(torch.randn(2, 4, 3, 2), torch.randn(2, 4, 3, 2), torch.randn(3, 2))
        assert out.shape == (2, 1, 3, 5)

    def test_two_layer_unroll(self):
        torch.manual_seed(2)
        encoder = NumericalEncoder(2, 2, 2, num_layers=2)
        window, emb, node_table = torch.randn(3, 3, 2), torch.randn(3, 3, 2), torch.randn(3, 2)
        lower, upper = torch.zeros(3, 2), torch.zeros(3, 2)
        for t in range(3):
            lower = sdgru_oracle(encoder.cells[0], window[t], lower, emb[t], node_table)
            upper = sdgru_oracle(encoder.cells[1], lower, upper, emb[t], node_table)
        out = encoder(window[None], emb[None], node_table)[0]
        assert torch.allclose(out[0], lower, atol=1e-8, rtol=0)
        assert torch.allclose(out[1], upper, atol=1e-8, rtol=0)

    def test_empty_window(self):
        encoder = NumericalEncoder(2, 2, 2, num_layers=1)
        with pytest.raises(EmptyWindowError):
            encoder(torch.zeros(1, 0, 3, 2), torch.zeros(1, 0, 3, 2), torch.randn(3, 2))

    def test_deterministic_under_seed(self):
        outputs = []
        for _ in range(2):
            torch.manual_seed(42)
            tables = EmbeddingTables(3, 2)
            encoder = NumericalEncoder(4, 3, 2, num_layers=2)
            torch.manual_seed(7)
            window = torch.randn(2, 5, 3, 4)
            stamps = torch.tensor([[6, 1, hour] for hour in range(5)]).expand(2, 5, 3)
            outputs.append(encode_numerical(window, stamps, tables, encoder))
        assert torch.equal(outputs[0], outputs[1])

    def test_disabled_time_tables_feed_node_table(self):
        tables = EmbeddingTables(3, 2, time_embedding=False)
        stamps = torch.tensor([[[1, 1, 0], [12, 31, 23]]])
        emb = build_embedding(tables, stamps)
        assert torch.equal(emb[0, 0], emb[0, 1])

    def test_pool_gradients_match_finite_differences(self):
        torch.manual_seed(3)
        encoder = NumericalEncoder(2, 2, 2, num_layers=1)
        window, emb, node_table = torch.randn(1, 3, 3, 2), torch.randn(1, 3, 3, 2), torch.randn(3, 2)
        names = [name for name, _ in encoder.named_parameters()]
        params = tuple(parameter.detach().clone().requires_grad_(True) for parameter in encoder.parameters())

        def fn(*values):
            return functional_call(encoder, dict(zip(names, values)), (window, emb, node_table))

        assert torch.autograd.gradcheck(fn, params, eps=1e-6, atol=1e-5, rtol=1e-3)
