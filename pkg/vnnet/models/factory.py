"""Factory helpers for assembling forecasting models."""

from __future__ import annotations

import dataclasses
import logging

import torch

from ..config import TrainConfig, VisionBranch
from .vnnet import ModelSettings, VNNet

logger = logging.getLogger(__name__)


def settings_from_config(
    config: TrainConfig,
    *,
    nodes: int,
    channels: int,
    bands: int,
    target_channel: int,
) -> ModelSettings:
    """Translate a run configuration plus dataset dimensions into model settings."""
    return ModelSettings(
        nodes=nodes,
        channels=channels,
        bands=bands,
        horizon=config.horizon,
        target_channel=target_channel,
        hidden=config.hidden,
        embed_dim=config.embed_dim,
        num_layers=config.num_layers,
        vision_layers=config.vision_layers,
        vision_hidden=config.vision_hidden,
        channel_reduction=config.channel_reduction,
        time_embedding=config.time_embedding,
        vision_branch=config.vision_branch,
        query=config.query,
    )


def create_model(
    settings: ModelSettings,
    *,
    seed: int | None = None,
    dtype: torch.dtype | None = None,
) -> VNNet:
    """Return the configured model, falling back to the numerical-only variant without satellite bands."""
    if settings.vision_branch is not VisionBranch.NONE and settings.bands < 1:
        logger.warning("Dataset has no satellite bands; building the numerical-only model instead.")
        settings = dataclasses.replace(settings, vision_branch=VisionBranch.NONE)
    if seed is not None:
        torch.manual_seed(seed)
    model = VNNet(settings)
    if dtype is not None:
        model = model.to(dtype)
    logger.debug("Created model with parameter groups %s", model.parameter_groups())
    return model


__all__ = ["create_model", "settings_from_config"]
