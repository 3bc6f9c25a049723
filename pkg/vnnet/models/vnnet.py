"""The assembled forecaster: numerical encoder, optional vision encoder and fusion, graph decoder."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import torch
from torch import Tensor, nn

from ..config import QueryMode, SamplingMode, VisionBranch
from ..errors import ConfigurationError
from ..graph import EmbeddingTables, build_embedding
from .decoder import GraphDecoder, SamplingSchedule
from .fusion import DoubleQueryAttention
from .numerical import NumericalEncoder
from .vision import VisionEncoder

type Forecaster = Callable[[Tensor, Tensor | None], Tensor]


@dataclass(slots=True, frozen=True, kw_only=True)
class ModelSettings:
    """Architecture of one model; every ablation row is a different combination of these."""

    nodes: int
    channels: int
    bands: int
    horizon: int = 12
    target_channel: int = 0
    hidden: int = 32
    embed_dim: int = 16
    num_layers: int = 2
    vision_layers: int = 3
    vision_hidden: tuple[int, ...] | None = None
    channel_reduction: int = 8
    time_embedding: bool = True
    vision_branch: VisionBranch = VisionBranch.V_LSTM
    query: QueryMode = QueryMode.DOUBLE

    def __post_init__(self) -> None:
        if not 0 <= self.target_channel < self.channels:
            raise ConfigurationError(f"target channel {self.target_channel} outside {self.channels} channels")
        if self.nodes < 1 or self.horizon < 1:
            raise ConfigurationError("nodes and horizon must be >= 1")

    @property
    def vision_widths(self) -> tuple[int, ...]:
        return self.vision_hidden or (self.hidden,) * self.vision_layers


class VNNet(nn.Module):
    def __init__(self, settings: ModelSettings) -> None:
        super().__init__()
        self.settings = settings
        self.embeddings = EmbeddingTables(settings.nodes, settings.embed_dim, time_embedding=settings.time_embedding)
        self.numerical = NumericalEncoder(settings.channels, settings.hidden, settings.embed_dim, settings.num_layers)
        self.vision: VisionEncoder | None = None
        self.fusion: DoubleQueryAttention | None = None
        if settings.vision_branch is not VisionBranch.NONE:
            self.vision = VisionEncoder(
                settings.bands,
                settings.vision_widths,
                settings.hidden,
                attention=settings.vision_branch is VisionBranch.V_LSTM,
                reduction=settings.channel_reduction,
            )
            self.fusion = DoubleQueryAttention(
                settings.num_layers * settings.nodes,
                settings.hidden,
                settings.hidden,
                double_query=settings.query is QueryMode.DOUBLE,
            )
        self.decoder = GraphDecoder(settings.hidden, settings.embed_dim, settings.num_layers)

    @property
    def uses_vision(self) -> bool:
        return self.vision is not None

    def encode(self, numerical: Tensor, timestamps: Tensor, vision: Tensor | None = None) -> Tensor:
        """Decoder initial states (B, L_n, N, F) from the two modalities."""
        if numerical.shape[-2:] != (self.settings.nodes, self.settings.channels):
            raise ConfigurationError(
                f"numerical window {tuple(numerical.shape)} does not match "
                f"{self.settings.nodes} stations x {self.settings.channels} channels"
            )
        embeddings = build_embedding(self.embeddings, timestamps)
        z_n = self.numerical(numerical, embeddings, self.embeddings.node_table)
        if self.vision is None or self.fusion is None:
            return z_n
        if vision is None:
            raise ConfigurationError("model has a vision branch but no vision window was given")
        return self.fusion(z_n, self.vision(vision))

    def forward(
        self,
        numerical: Tensor,
        timestamps: Tensor,
        vision: Tensor | None = None,
        *,
        teacher: Tensor | None = None,
        schedule: SamplingSchedule | None = None,
        batch_index: int = 0,
        generator: torch.Generator | None = None,
    ) -> Tensor:
        """Normalized forecasts of the target factor, shape (B, T_p, N, 1).

        Outside training mode the decoder always feeds back its own predictions.
        """
        if not self.training or schedule is None:
            schedule = SamplingSchedule(mode=SamplingMode.FREE_RUNNING)
        init = self.encode(numerical, timestamps, vision)
        channel = self.settings.target_channel
        seed = numerical[:, -1, :, channel : channel + 1]
        return self.decoder(
            init,
            seed,
            self.embeddings.node_table,
            self.settings.horizon,
            teacher=teacher,
            schedule=schedule,
            batch_index=batch_index,
            generator=generator,
        )

    def forecaster(self, timestamps: Tensor) -> Forecaster:
        """Free-running forecast as a function of the two inputs only, for attribution."""

        def run(numerical: Tensor, vision: Tensor | None) -> Tensor:
            stamps = timestamps.expand(numerical.shape[0], *timestamps.shape[-2:])
            return self(numerical, stamps, vision)

        return run

    def parameter_groups(self) -> dict[str, int]:
        groups = {
            "embeddings": self.embeddings,
            "numerical": self.numerical,
            "vision": self.vision,
            "fusion": self.fusion,
            "decoder": self.decoder,
        }
        return {name: count_parameters(module) if module is not None else 0 for name, module in groups.items()}


def count_parameters(module: nn.Module) -> int:
    return sum(parameter.numel() for parameter in module.parameters() if parameter.requires_grad)


__all__ = ["Forecaster", "ModelSettings", "VNNet", "count_parameters"]
