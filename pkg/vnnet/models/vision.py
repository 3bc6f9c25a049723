"""Vision branch: multi-scale attention ConvLSTM over satellite frames.

Tensors are channel-first, (B, C, H, W) per frame and (B, T, C, H, W) per window.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Final, Self

import torch
from torch import Tensor, nn

from ..errors import ConfigurationError, EmptyWindowError, NumericDivergenceError

PYRAMID_DILATIONS: Final[tuple[int, ...]] = (1, 2, 4)
SPATIAL_KERNEL: Final[int] = 7


class FeaturePyramid(nn.Module):
    """One 1x1 branch plus dilated 3x3 branches, c/4 channels each, concatenated back to c."""

    def __init__(self, channels: int) -> None:
        super().__init__()
        if channels % 4:
            raise ConfigurationError(f"feature pyramid needs channels divisible by 4, got {channels}")
        branch = channels // 4
        self.point = nn.Conv2d(channels, branch, kernel_size=1)
        self.dilated = nn.ModuleList(
            nn.Conv2d(channels, branch, kernel_size=3, padding=rate, dilation=rate) for rate in PYRAMID_DILATIONS
        )

    def forward(self, f_in: Tensor) -> Tensor:
        return torch.cat([self.point(f_in), *(conv(f_in) for conv in self.dilated)], dim=1)


class ChannelAttention(nn.Module):
    """Shared MLP over spatial avg- and max-pooled descriptors; returns pre-sigmoid logits (B, c, 1, 1)."""

    def __init__(self, channels: int, reduction: int = 8) -> None:
        super().__init__()
        hidden = max(1, channels // reduction)
        self.mlp = nn.Sequential(nn.Linear(channels, hidden), nn.ReLU(), nn.Linear(hidden, channels))

    def forward(self, f_m: Tensor) -> Tensor:
        logits = self.mlp(f_m.mean(dim=(2, 3))) + self.mlp(f_m.amax(dim=(2, 3)))
        return logits[..., None, None]


class SpatialAttention(nn.Module):
    """7x7 convolution over the channel-wise average and max maps; returns logits (B, 1, h, w)."""

    def __init__(self) -> None:
        super().__init__()
        self.conv = nn.Conv2d(2, 1, kernel_size=SPATIAL_KERNEL, padding=SPATIAL_KERNEL // 2)

    def forward(self, f_m: Tensor) -> Tensor:
        pooled = torch.cat([f_m.mean(dim=1, keepdim=True), f_m.amax(dim=1, keepdim=True)], dim=1)
        return self.conv(pooled)


class MSCSM(nn.Module):
    """Feature pyramid followed by joint channel-spatial attention; attenuates only."""

    def __init__(self, channels: int, reduction: int = 8) -> None:
        super().__init__()
        self.pyramid = FeaturePyramid(channels)
        self.channel = ChannelAttention(channels, reduction)
        self.spatial = SpatialAttention()

    def forward(self, f_in: Tensor) -> Tensor:
        f_m = self.pyramid(f_in)
        attention = torch.sigmoid(self.channel(f_m) * self.spatial(f_m))
        return f_m * attention


@dataclass(slots=True, frozen=True)
class VlstmState:
    hidden: Tensor
    cell: Tensor

    @classmethod
    def zeros(cls, like: Tensor, channels: int) -> Self:
        batch, _, height, width = like.shape
        empty = like.new_zeros(batch, channels, height, width)
        return cls(empty, empty.clone())


class _RecurrentConvCell(nn.Module):
    def __init__(self, in_channels: int, hidden: int) -> None:
        super().__init__()
        self.in_channels = in_channels
        self.hidden = hidden
        self.gates = nn.Conv2d(in_channels + hidden, 4 * hidden, kernel_size=3, padding=1)

    def features(self, stacked: Tensor) -> Tensor:
        return stacked

    def forward(self, i_t: Tensor, state: VlstmState) -> VlstmState:
        if i_t.shape[-2:] != state.hidden.shape[-2:]:
            raise ConfigurationError(
                f"input grid {tuple(i_t.shape[-2:])} does not match state grid {tuple(state.hidden.shape[-2:])}"
            )
        features = self.features(torch.cat([i_t, state.hidden], dim=1))
        input_gate, forget_gate, cell_input, output_gate = self.gates(features).chunk(4, dim=1)
        cell = torch.sigmoid(forget_gate) * state.cell + torch.sigmoid(input_gate) * torch.tanh(cell_input)
        hidden = torch.sigmoid(output_gate) * torch.tanh(cell)
        if not (torch.isfinite(cell).all() and torch.isfinite(hidden).all()):
            raise NumericDivergenceError("recurrent vision state became non-finite")
        return VlstmState(hidden, cell)


class ConvLSTMCell(_RecurrentConvCell):
    """Plain convolutional LSTM: gates convolve the raw [input, hidden] stack."""


class VLSTMCell(_RecurrentConvCell):
    """ConvLSTM whose gate convolutions read the MSCSM-refined [input, hidden] stack."""

    def __init__(self, in_channels: int, hidden: int, reduction: int = 8) -> None:
        super().__init__(in_channels, hidden)
        self.mscsm = MSCSM(in_channels + hidden, reduction)

    def features(self, stacked: Tensor) -> Tensor:
        return self.mscsm(stacked)


def vlstm_step(i_t: Tensor, state: VlstmState, cell: VLSTMCell) -> VlstmState:
    return cell(i_t, state)


class VisionEncoder(nn.Module):
    """Stem, stacked recurrent conv layers with stride-2 downsampling between them, 1x1 output projection."""

    def __init__(
        self,
        bands: int,
        hidden_channels: Sequence[int],
        out_channels: int,
        *,
        attention: bool = True,
        reduction: int = 8,
    ) -> None:
        super().__init__()
        widths = tuple(hidden_channels)
        if not widths:
            raise ConfigurationError("vision encoder needs at least one layer")
        self.widths = widths
        self.stem = nn.Conv2d(bands, widths[0], kernel_size=1)
        cells: list[nn.Module] = []
        for layer, width in enumerate(widths):
            in_channels = widths[0] if layer == 0 else widths[layer - 1]
            cells.append(VLSTMCell(in_channels, width, reduction) if attention else ConvLSTMCell(in_channels, width))
        self.cells = nn.ModuleList(cells)
        self.downsample = nn.ModuleList(
            nn.Conv2d(widths[layer - 1], widths[layer - 1], kernel_size=3, stride=2, padding=1)
            for layer in range(1, len(widths))
        )
        self.projection = (
            nn.Identity() if widths[-1] == out_channels else nn.Conv2d(widths[-1], out_channels, kernel_size=1)
        )

    @property
    def scale(self) -> int:
        return 2 ** (len(self.widths) - 1)

    @staticmethod
    def _per_frame(module: nn.Module, sequence: Tensor) -> Tensor:
        batch, steps = sequence.shape[:2]
        return module(sequence.flatten(0, 1)).unflatten(0, (batch, steps))

    def forward(self, window: Tensor) -> Tensor:
        _, steps, _, height, width = window.shape
        if steps == 0:
            raise EmptyWindowError("vision window has no time steps")
        if height % self.scale or width % self.scale:
            raise ConfigurationError(f"vision grid {height}x{width} is not divisible by {self.scale}")
        sequence = self._per_frame(self.stem, window)
        state: VlstmState | None = None
        for layer, cell in enumerate(self.cells):
            if layer:
                sequence = self._per_frame(self.downsample[layer - 1], sequence)
            state = VlstmState.zeros(sequence[:, 0], cell.hidden)
            outputs: list[Tensor] = []
            for t in range(steps):
                state = cell(sequence[:, t], state)
                outputs.append(state.hidden)
            sequence = torch.stack(outputs, dim=1)
        assert state is not None
        return self.projection(state.hidden)


def encode_vision(window: Tensor, encoder: VisionEncoder) -> Tensor:
    return encoder(window)


__all__ = [
    "ChannelAttention",
    "ConvLSTMCell",
    "FeaturePyramid",
    "MSCSM",
    "PYRAMID_DILATIONS",
    "SpatialAttention",
    "VLSTMCell",
    "VisionEncoder",
    "VlstmState",
    "encode_vision",
    "vlstm_step",
]
