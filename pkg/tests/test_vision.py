from __future__ import annotations

import pytest
import torch
from torch.func import functional_call
from torch.nn import functional

from vnnet.errors import ConfigurationError, EmptyWindowError
from vnnet.models import (
    MSCSM,
    ChannelAttention,
    ConvLSTMCell,
    FeaturePyramid,
    SpatialAttention,
    VisionEncoder,
    VLSTMCell,
    VlstmState,
    encode_vision,
    vlstm_step,
)
from vnnet.models.vision import PYRAMID_DILATIONS


def conv_oracle(x, weight, bias, *, dilation=1):
    """Same-padded convolution of one (C, H, W) map, one output pixel at a time."""
    kernel = weight.shape[-1]
    pad = dilation * (kernel // 2)
    padded = functional.pad(x, (pad, pad, pad, pad))
    span = dilation * (kernel - 1) + 1
    height, width = x.shape[-2:]
    out = torch.zeros(weight.shape[0], height, width)
    for i in range(height):
        for j in range(width):
            patch = padded[:, i : i + span : dilation, j : j + span : dilation]
            out[:, i, j] = torch.einsum("ocuv,cuv->o", weight, patch) + bias
    return out


def pyramid_oracle(pyramid: FeaturePyramid, x):
    branches = [conv_oracle(x, pyramid.point.weight, pyramid.point.bias)]
    for conv, rate in zip(pyramid.dilated, PYRAMID_DILATIONS):
        branches.append(conv_oracle(x, conv.weight, conv.bias, dilation=rate))
    return torch.cat(branches)


def channel_oracle(attention: ChannelAttention, x):
    first, _, second = attention.mlp

    def mlp(vector):
        return second.weight @ torch.relu(first.weight @ vector + first.bias) + second.bias

    return mlp(x.mean(dim=(1, 2))) + mlp(x.amax(dim=(1, 2)))


def spatial_oracle(attention: SpatialAttention, x):
    pooled = torch.stack([x.mean(dim=0), x.amax(dim=0)])
    return conv_oracle(pooled, attention.conv.weight, attention.conv.bias)[0]


def mscsm_oracle(module: MSCSM, x):
    f_m = pyramid_oracle(module.pyramid, x)
    gate = torch.sigmoid(channel_oracle(module.channel, f_m)[:, None, None] * spatial_oracle(module.spatial, f_m))
    return f_m * gate


def vlstm_oracle(cell: VLSTMCell, i_t, hidden, cell_state):
    features = mscsm_oracle(cell.mscsm, torch.cat([i_t, hidden]))
    gates = conv_oracle(features, cell.gates.weight, cell.gates.bias)
    input_gate, forget_gate, candidate, output_gate = gates.chunk(4)
    new_cell = torch.sigmoid(forget_gate) * cell_state + torch.sigmoid(input_gate) * torch.tanh(candidate)
    return torch.sigmoid(output_gate) * torch.tanh(new_cell), new_cell


def _zero_(module: torch.nn.Module) -> None:
    with torch.no_grad():
        for parameter in module.parameters():
            parameter.zero_()


class TestFeaturePyramid:
    def test_channels_must_divide_by_four(self):
        with pytest.raises(ConfigurationError):
            FeaturePyramid(6)

    def test_zero_input_zero_bias(self):
        pyramid = FeaturePyramid(8)
        with torch.no_grad():
            for conv in (pyramid.point, *pyramid.dilated):
                conv.bias.zero_()
        assert torch.equal(pyramid(torch.zeros(1, 8, 5, 5)), torch.zeros(1, 8, 5, 5))

    @pytest.mark.parametrize("size", [(1, 1), (3, 5), (7, 2), (9, 9)])
    def test_same_spatial_shape(self, size):
        assert FeaturePyramid(4)(torch.randn(2, 4, *size)).shape == (2, 4, *size)

    def test_dirac_matches_sliding_window(self):
        torch.manual_seed(0)
        pyramid = FeaturePyramid(4)
        x = torch.zeros(4, 5, 5)
        x[:, 2, 2] = 1.0
        assert torch.allclose(pyramid(x[None])[0], pyramid_oracle(pyramid, x), atol=1e-12)

    def test_translation_equivariant_in_interior(self):
        torch.manual_seed(1)
        pyramid = FeaturePyramid(4)
        x = torch.randn(1, 4, 12, 12)
        shifted = torch.roll(x, 1, dims=-1)
        # Columns 5..7 of the shifted output see neither the wrapped column nor the padding.
        assert torch.allclose(pyramid(shifted)[..., 5:8], pyramid(x)[..., 4:7], atol=1e-12)


class TestAttention:
    def test_constant_input_doubles_mlp(self):
        attention = ChannelAttention(8, reduction=4)
        constant = torch.randn(8)
        x = constant[None, :, None, None].expand(1, 8, 3, 3)
        assert torch.allclose(attention(x)[0, :, 0, 0], 2 * attention.mlp(constant), atol=1e-12)

    def test_channel_zero_input_zero_bias(self):
        attention = ChannelAttention(8)
        with torch.no_grad():
            attention.mlp[0].bias.zero_()
            attention.mlp[2].bias.zero_()
        assert torch.equal(attention(torch.zeros(1, 8, 2, 2)), torch.zeros(1, 8, 1, 1))

    def test_channel_matches_mlp_oracle(self):
        torch.manual_seed(2)
        attention = ChannelAttention(4, reduction=2)
        x = torch.randn(4, 2, 2)
        assert torch.allclose(attention(x[None])[0, :, 0, 0], channel_oracle(attention, x), atol=1e-12)

    def test_hidden_width_is_at_least_one(self):
        assert ChannelAttention(4, reduction=8).mlp[0].out_features == 1

    def test_spatial_channelwise_constant_is_constant_inside(self):
        attention = SpatialAttention()
        x = torch.randn(3)[None, :, None, None].expand(1, 3, 9, 9)
        interior = attention(x)[0, 0, 3:6, 3:6]
        assert torch.allclose(interior, interior[0, 0].expand(3, 3), atol=1e-12)

    def test_spatial_zero_input_zero_bias(self):
        attention = SpatialAttention()
        with torch.no_grad():
            attention.conv.bias.zero_()
        assert torch.equal(attention(torch.zeros(1, 4, 6, 6)), torch.zeros(1, 1, 6, 6))

    def test_spatial_matches_sliding_window(self):
        torch.manual_seed(3)
        attention = SpatialAttention()
        x = torch.randn(2, 8, 8)
        assert torch.allclose(attention(x[None])[0, 0], spatial_oracle(attention, x), atol=1e-12)


class TestMscsm:
    def test_zero_pyramid_gives_zero(self):
        module = MSCSM(4)
        _zero_(module.pyramid)
        assert torch.equal(module(torch.randn(1, 4, 5, 5)), torch.zeros(1, 4, 5, 5))

    def test_attention_only_attenuates(self):
        torch.manual_seed(4)
        module = MSCSM(8)
        x = 5 * torch.randn(3, 8, 6, 6)
        assert (module(x).abs() <= module.pyramid(x).abs()).all()

    def test_matches_composition_oracle(self):
        for seed in range(20):
            torch.manual_seed(seed)
            module = MSCSM(4, reduction=2)
            x = torch.randn(4, 4, 4)
            assert torch.allclose(module(x[None])[0], mscsm_oracle(module, x), atol=1e-8, rtol=0)


class TestRecurrentCells:
    @pytest.mark.parametrize("cell_type", [VLSTMCell, ConvLSTMCell])
    def test_zero_parameters_closed_form(self, cell_type):
        cell = cell_type(2, 2)
        _zero_(cell)
        state = VlstmState(torch.randn(1, 2, 4, 4), torch.randn(1, 2, 4, 4))
        out = cell(torch.randn(1, 2, 4, 4), state)
        assert torch.allclose(out.cell, 0.5 * state.cell, atol=1e-15)
        assert torch.allclose(out.hidden, 0.5 * torch.tanh(0.5 * state.cell), atol=1e-15)

    def test_saturated_forget_gate_carries_cell(self):
        cell = VLSTMCell(2, 2)
        with torch.no_grad():
            cell.gates.weight.zero_()
            cell.gates.bias.zero_()
            cell.gates.bias[:2] = -50.0
            cell.gates.bias[2:4] = 50.0
        state = VlstmState(torch.randn(1, 2, 4, 4), torch.randn(1, 2, 4, 4))
        assert torch.allclose(vlstm_step(torch.randn(1, 2, 4, 4), state, cell).cell, state.cell, atol=1e-12)

    def test_matches_dense_oracle(self):
        for seed in range(10):
            torch.manual_seed(seed)
            cell = VLSTMCell(2, 2, reduction=2)
            i_t, hidden, cell_state = torch.randn(2, 4, 4), torch.randn(2, 4, 4), torch.randn(2, 4, 4)
            expected_hidden, expected_cell = vlstm_oracle(cell, i_t, hidden, cell_state)
            out = cell(i_t[None], VlstmState(hidden[None], cell_state[None]))
            assert torch.allclose(out.hidden[0], expected_hidden, atol=1e-8, rtol=0)
            assert torch.allclose(out.cell[0], expected_cell, atol=1e-8, rtol=0)

    def test_hidden_is_bounded(self):
        torch.manual_seed(5)
        cell = VLSTMCell(4, 4)
        state = VlstmState.zeros(torch.zeros(2, 4, 6, 6), 4)
        for _ in range(5):
            state = cell(3 * torch.randn(2, 4, 6, 6), state)
            assert (state.hidden.abs() < 1).all()

    def test_grid_mismatch(self):
        cell = ConvLSTMCell(2, 2)
        with pytest.raises(ConfigurationError):
            cell(torch.randn(1, 2, 4, 4), VlstmState.zeros(torch.zeros(1, 2, 3, 3), 2))


class TestVisionEncoder:
    def test_single_layer_single_step(self):
        torch.manual_seed(6)
        encoder = VisionEncoder(2, (4,), 4)
        window = torch.randn(1, 1, 2, 6, 6)
        stem = encoder.stem(window[:, 0])
        expected = encoder.cells[0](stem, VlstmState.zeros(stem, 4)).hidden
        assert torch.allclose(encode_vision(window, encoder), expected, atol=1e-14)

    def test_three_layers_halve_twice(self):
        encoder = VisionEncoder(1, (4, 4, 4), 8)
        assert encoder.scale == 4
        assert encoder(torch.randn(1, 2, 1, 16, 16)).shape == (1, 8, 4, 4)

    def test_indivisible_grid(self):
        encoder = VisionEncoder(1, (4, 4, 4), 4)
        with pytest.raises(ConfigurationError):
            encoder(torch.randn(1, 2, 1, 6, 6))

    def test_empty_window(self):
        with pytest.raises(EmptyWindowError):
            VisionEncoder(1, (4,), 4)(torch.zeros(1, 0, 1, 4, 4))

    def test_two_layer_unroll(self):
        torch.manual_seed(7)
        encoder = VisionEncoder(2, (4, 8), 4, reduction=2)
        window = torch.randn(1, 2, 2, 8, 8)
        lower = VlstmState.zeros(torch.zeros(1, 4, 8, 8), 4)
        lower_hidden = []
        for t in range(2):
            lower = encoder.cells[0](encoder.stem(window[:, t]), lower)
            lower_hidden.append(lower.hidden)
        upper = VlstmState.zeros(torch.zeros(1, 4, 4, 4), 8)
        for hidden in lower_hidden:
            upper = encoder.cells[1](encoder.downsample[0](hidden), upper)
        expected = encoder.projection(upper.hidden)
        out = encoder(window)
        assert out.shape == (1, 4, 4, 4)
        assert torch.allclose(out, expected, atol=1e-8, rtol=0)

    def test_plain_conv_lstm_has_no_attention(self):
        encoder = VisionEncoder(1, (4,), 4, attention=False)
        assert isinstance(encoder.cells[0], ConvLSTMCell)
        assert not any("mscsm" in name for name, _ in encoder.named_parameters())

    def test_kernel_gradients_match_finite_differences(self):
        torch.manual_seed(8)
        encoder = VisionEncoder(1, (4,), 4)
        window = torch.randn(1, 2, 1, 8, 8)
        names = ("cells.0.mscsm.spatial.conv.weight", "cells.0.gates.bias", "stem.weight")
        owned = dict(encoder.named_parameters())
        params = tuple(owned[name].detach().clone().requires_grad_(True) for name in names)

        def fn(*values):
            return functional_call(encoder, dict(zip(names, values)), (window,))

        assert torch.autograd.gradcheck(fn, params, eps=1e-6, atol=1e-5, rtol=1e-3)
