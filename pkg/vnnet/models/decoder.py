"""Autoregressive graph decoder with scheduled sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import Tensor, nn

from ..config import SamplingMode
from ..errors import ConfigurationError
from ..graph import static_adjacency
from .numerical import SDGRUCell


def scheduled_sampling_prob(i: int, k: float) -> float:
    """Inverse sigmoid decay k / (k + exp(i / k)) for mini-batch index ``i``."""
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    if i < 0:
        raise ConfigurationError(f"mini-batch index must be >= 0, got {i}")
    # Same ratio with exp(-i / k): underflows to 0.0 instead of overflowing.
    scaled = k * math.exp(-i / k)
    return scaled / (scaled + 1.0)


@dataclass(slots=True, frozen=True)
class SamplingSchedule:
    k: float = 1000.0
    mode: SamplingMode = SamplingMode.SCHEDULED

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")

    def probability(self, batch_index: int) -> float:
        """Probability of feeding ground truth at mini-batch ``batch_index``."""
        match self.mode:
            case SamplingMode.TEACHER_FORCED:
                return 1.0
            case SamplingMode.FREE_RUNNING:
                return 0.0
            case _:
                return scheduled_sampling_prob(batch_index, self.k)


def draw_teacher_mask(probability: float, steps: int, generator: torch.Generator | None = None) -> Tensor:
    """One Bernoulli draw per decoding step; True means feed the ground truth."""
    return torch.rand(steps, generator=generator) < probability


class GraphDecoder(nn.Module):
    """SDGRU stack on the node-embedding graph only (no calendar tables, no dynamic graph)."""

    def __init__(self, hidden: int, embed_dim: int, num_layers: int) -> None:
        super().__init__()
        self.cells = nn.ModuleList(
            SDGRUCell(1 if layer == 0 else hidden, hidden, embed_dim, dynamic=False) for layer in range(num_layers)
        )
        self.projection = nn.Linear(hidden, 1)

    def forward(
        self,
        init: Tensor,
        seed: Tensor,
        node_table: Tensor,
        horizon: int,
        *,
        teacher: Tensor | None = None,
        schedule: SamplingSchedule | None = None,
        batch_index: int = 0,
        generator: torch.Generator | None = None,
    ) -> Tensor:
        schedule = schedule or SamplingSchedule()
        if schedule.mode is SamplingMode.FREE_RUNNING:
            teacher = None
        elif teacher is None:
            raise ConfigurationError(f"{schedule.mode} decoding needs ground-truth targets")
        return self.unroll(
            init,
            seed,
            node_table,
            horizon,
            teacher=teacher,
            teacher_probability=schedule.probability(batch_index),
            generator=generator,
        )

    def unroll(
        self,
        init: Tensor,
        seed: Tensor,
        node_table: Tensor,
        horizon: int,
        *,
        teacher: Tensor | None = None,
        teacher_probability: float = 0.0,
        generator: torch.Generator | None = None,
    ) -> Tensor:
        """Decode ``horizon`` steps from per-layer hidden states ``init`` (B, L_n, N, F).

        ``seed`` (B, N, 1) is the last observed target value; ``teacher`` (B, T_p, N, 1)
        replaces the fed-back prediction where the per-step draw says so.
        """
        if init.shape[1] != len(self.cells):
            raise ConfigurationError(f"decoder has {len(self.cells)} layers, init carries {init.shape[1]}")
        if teacher is None or teacher_probability <= 0.0:
            use_truth = [False] * horizon
        elif teacher_probability >= 1.0:
            use_truth = [True] * horizon
        else:
            use_truth = draw_teacher_mask(teacher_probability, max(horizon - 1, 0), generator).tolist()

        static = static_adjacency(node_table)
        hidden = list(init.unbind(dim=1))
        step_input = seed
        predictions: list[Tensor] = []
        for step in range(horizon):
            x = step_input
            for layer, cell in enumerate(self.cells):
                hidden[layer] = cell(x, hidden[layer], node_table, node_table, static_adj=static)
                x = hidden[layer]
            prediction = self.projection(x)
            predictions.append(prediction)
            if step + 1 < horizon:
                step_input = teacher[:, step] if use_truth[step] else prediction
        return torch.stack(predictions, dim=1)


def decode(
    decoder: GraphDecoder,
    init: Tensor,
    seed: Tensor,
    node_table: Tensor,
    horizon: int,
    *,
    teacher: Tensor | None = None,
    schedule: SamplingSchedule | None = None,
    batch_index: int = 0,
    generator: torch.Generator | None = None,
) -> Tensor:
    return decoder(
        init,
        seed,
        node_table,
        horizon,
        teacher=teacher,
        schedule=schedule,
        batch_index=batch_index,
        generator=generator,
    )


__all__ = [
    "GraphDecoder",
    "SamplingSchedule",
    "decode",
    "draw_teacher_mask",
    "scheduled_sampling_prob",
]
