"""Integrated gradients over the numerical input along a straight path from a baseline."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Final, Self

import numpy as np
import torch
from numpy.typing import NDArray
from torch import Tensor

from ..data import NormalizationStats, WindowDataset
from ..errors import ConfigurationError, UnsupportedModelError
from ..models import Forecaster, VNNet

logger = logging.getLogger(__name__)

DEFAULT_STEPS: Final[int] = 64


@dataclass(slots=True, frozen=True)
class BaselineInputs:
    """Reference inputs: numerical (T_h, N, D) and optional vision (T_h, C_s, H, W)."""

    numerical: Tensor
    vision: Tensor | None = None

    @classmethod
    def from_stats(
        cls,
        stats: NormalizationStats,
        numerical_like: Tensor,
        vision_like: Tensor | None = None,
    ) -> Self:
        """Training-split mean per channel and per-band minimum, in the model's normalized input space."""
        mean = torch.as_tensor(stats.normalize(stats.mean), dtype=numerical_like.dtype)
        numerical = mean.expand_as(numerical_like).clone()
        vision = None
        if vision_like is not None:
            if stats.vision_min is None:
                raise ConfigurationError("vision baseline needs fitted band minima")
            minimum = torch.as_tensor(stats.normalize_vision(stats.vision_min), dtype=vision_like.dtype)
            vision = minimum[:, None, None].expand_as(vision_like).clone()
        return cls(numerical, vision)


@dataclass(slots=True, frozen=True)
class Attribution:
    """Signed per-cell attributions (T_h, N, D) and the aggregated (T_h, D) matrix."""

    raw: Tensor
    ig: Tensor
    m_steps: int

    @property
    def total(self) -> float:
        return float(self.raw.sum())

    def as_numpy(self) -> np.ndarray:
        return self.ig.detach().cpu().numpy()


def _path_points(m_steps: int, dtype: torch.dtype) -> Tensor:
    """Midpoints of ``m_steps`` equal sub-intervals of [0, 1]."""
    return (torch.arange(m_steps, dtype=dtype) + 0.5) / m_steps


def _forward(forecaster: Forecaster, numerical: Tensor, vision: Tensor | None) -> Tensor:
    try:
        out = forecaster(numerical, vision)
    except RuntimeError as exc:
        raise UnsupportedModelError(f"forecaster failed on the attribution path: {exc}") from exc
    if not isinstance(out, Tensor) or not out.requires_grad:
        raise UnsupportedModelError("forecaster output is not differentiable in its numerical input")
    return out


def _input_gradient(output: Tensor, numerical: Tensor, *, retain: bool) -> Tensor:
    try:
        (grad,) = torch.autograd.grad(output, numerical, retain_graph=retain)
    except RuntimeError as exc:
        raise UnsupportedModelError(f"no gradient path from the output to the numerical input: {exc}") from exc
    return grad


def path_gradients(
    forecaster: Forecaster,
    numerical: Tensor,
    vision: Tensor | None,
    baselines: BaselineInputs,
    m_steps: int = DEFAULT_STEPS,
    *,
    output: tuple[int, int] | None = None,
    per_output: bool = False,
    chunk: int = 16,
) -> Tensor:
    """Average gradient along the path, vision moving in lockstep with the numerical input.

    Returns (T_h, N, D), or (T_p, N_out, T_h, N, D) when ``per_output`` is set.
    """
    if m_steps < 1:
        raise ConfigurationError(f"m_steps must be >= 1, got {m_steps}")
    if baselines.numerical.shape != numerical.shape:
        raise ConfigurationError(f"baseline {tuple(baselines.numerical.shape)} vs input {tuple(numerical.shape)}")
    if (vision is None) != (baselines.vision is None):
        raise ConfigurationError("vision input and vision baseline must be given together")
    if vision is not None and baselines.vision is not None and baselines.vision.shape != vision.shape:
        raise ConfigurationError(f"vision baseline {tuple(baselines.vision.shape)} vs input {tuple(vision.shape)}")

    alphas = _path_points(m_steps, numerical.dtype)
    total: Tensor | None = None
    for alpha in alphas.split(chunk):
        scale = alpha.view(-1, *([1] * numerical.dim()))
        points = (baselines.numerical + scale * (numerical - baselines.numerical)).detach().requires_grad_(True)
        frames = None
        if vision is not None and baselines.vision is not None:
            frame_scale = alpha.view(-1, *([1] * vision.dim()))
            frames = (baselines.vision + frame_scale * (vision - baselines.vision)).detach()
        out = _forward(forecaster, points, frames)
        if per_output:
            horizon, nodes = out.shape[1], out.shape[2]
            grads = [
                _input_gradient(out[:, step, node].sum(), points, retain=True).sum(dim=0)
                for step in range(horizon)
                for node in range(nodes)
            ]
            summed = torch.stack(grads).view(horizon, nodes, *numerical.shape)
        else:
            selected = out.sum() if output is None else out[:, output[0], output[1]].sum()
            summed = _input_gradient(selected, points, retain=False).sum(dim=0)
        total = summed if total is None else total + summed
    assert total is not None
    return total / m_steps


def integrated_gradients(
    forecaster: Forecaster,
    numerical: Tensor,
    vision: Tensor | None,
    baselines: BaselineInputs,
    m_steps: int = DEFAULT_STEPS,
    *,
    output: tuple[int, int] | None = None,
    l1_over_outputs: bool = False,
    horizon: int | None = None,
) -> Attribution:
    """Non-negative (T_h, D) attribution of the summed forecast to each input step and channel.

    The signed attributions are collapsed over stations with an L1 norm scaled by 1 / (T_p * N^2).
    With ``l1_over_outputs`` the absolute value is taken per forecast output before summing.
    """
    nodes = numerical.shape[-2]
    difference = (numerical - baselines.numerical).detach()
    if l1_over_outputs:
        grads = path_gradients(forecaster, numerical, vision, baselines, m_steps, per_output=True)
        per_output = grads * difference
        raw = per_output.sum(dim=(0, 1))
        steps = per_output.shape[0]
        collapsed = per_output.abs().sum(dim=(0, 1, 3))
    else:
        grads = path_gradients(forecaster, numerical, vision, baselines, m_steps, output=output)
        raw = grads * difference
        steps = horizon if horizon is not None else _horizon(forecaster, numerical, vision)
        collapsed = raw.abs().sum(dim=-2)
    ig = collapsed / (steps * nodes**2)
    logger.debug("Integrated gradients with %d steps: total attribution %.6g", m_steps, float(raw.sum()))
    return Attribution(raw.detach(), ig.detach(), m_steps)


def _horizon(forecaster: Forecaster, numerical: Tensor, vision: Tensor | None) -> int:
    with torch.no_grad():
        return forecaster(numerical[None], None if vision is None else vision[None]).shape[1]


def attribute_split(
    model: VNNet,
    dataset: WindowDataset,
    m_steps: int = DEFAULT_STEPS,
    *,
    limit: int | None = None,
    l1_over_outputs: bool = False,
) -> NDArray[np.float64]:
    """Mean (T_h, D) attribution over the first ``limit`` windows of a split."""
    if dataset.stats is None:
        raise ConfigurationError("dataset carries no normalization statistics")
    count = len(dataset) if limit is None else min(limit, len(dataset))
    if count == 0:
        raise ConfigurationError("split has no windows to attribute")
    dtype = next(model.parameters()).dtype
    model.eval()
    matrices = []
    for index in range(count):
        sample = dataset[index]
        numerical = sample["numerical"].to(dtype)
        vision = sample["vision"].to(dtype) if model.uses_vision and "vision" in sample else None
        baselines = BaselineInputs.from_stats(dataset.stats, numerical, vision)
        forecaster = model.forecaster(sample["timestamps"])
        attribution = integrated_gradients(
            forecaster,
            numerical,
            vision,
            baselines,
            m_steps,
            l1_over_outputs=l1_over_outputs,
            horizon=model.settings.horizon,
        )
        matrices.append(attribution.as_numpy())
    logger.info("Attributed %d windows with %d path steps", count, m_steps)
    return np.mean(matrices, axis=0)


__all__ = [
    "Attribution",
    "BaselineInputs",
    "DEFAULT_STEPS",
    "attribute_split",
    "integrated_gradients",
    "path_gradients",
]
