"""Single-file, versioned training checkpoints."""

from __future__ import annotations

import dataclasses
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Final

import torch

from ..config import QueryMode, TrainConfig, VisionBranch
from ..data import NormalizationStats
from ..errors import ConfigurationError
from ..models import ModelSettings, VNNet, create_model

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION: Final[int] = 1


def settings_to_dict(settings: ModelSettings) -> dict[str, Any]:
    echo = dataclasses.asdict(settings)
    echo["vision_branch"] = settings.vision_branch.value
    echo["query"] = settings.query.value
    if settings.vision_hidden is not None:
        echo["vision_hidden"] = list(settings.vision_hidden)
    return echo


def settings_from_dict(values: dict[str, Any]) -> ModelSettings:
    hidden = values.get("vision_hidden")
    merged = values | {
        "vision_branch": VisionBranch(values["vision_branch"]),
        "query": QueryMode(values["query"]),
        "vision_hidden": None if hidden is None else tuple(hidden),
    }
    return ModelSettings(**merged)


@dataclass(slots=True)
class Checkpoint:
    """Config echo, model and optimizer state, the global mini-batch counter and data statistics."""

    config: TrainConfig
    settings: ModelSettings
    model_state: dict[str, torch.Tensor]
    optimizer_state: dict[str, Any] | None
    batch_index: int
    epoch: int
    best_validation_mae: float
    stats: NormalizationStats
    factor: str
    version: int = CHECKPOINT_VERSION

    def to_payload(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "config": self.config.to_dict(),
            "settings": settings_to_dict(self.settings),
            "model_state": self.model_state,
            "optimizer_state": self.optimizer_state,
            "batch_index": self.batch_index,
            "epoch": self.epoch,
            "best_validation_mae": self.best_validation_mae,
            "stats": self.stats.to_dict(),
            "factor": self.factor,
        }

    def restore_model(self) -> VNNet:
        model = create_model(self.settings, dtype=self.config.torch_dtype)
        model.load_state_dict(self.model_state)
        model.eval()
        return model


def save_checkpoint(checkpoint: Checkpoint, path: Path) -> Path:
    """Write atomically: a temporary file in the same directory replaces ``path`` in one step."""
    path.parent.mkdir(parents=True, exist_ok=True)
    staging = path.with_name(f".{path.name}.tmp")
    torch.save(checkpoint.to_payload(), staging)
    os.replace(staging, path)
    logger.debug("Saved checkpoint for epoch %d to %s", checkpoint.epoch, path)
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    if not path.exists():
        raise ConfigurationError(f"checkpoint {path} does not exist")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise ConfigurationError(f"{path}: checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    return Checkpoint(
        config=TrainConfig.from_mapping(payload["config"]),
        settings=settings_from_dict(payload["settings"]),
        model_state=payload["model_state"],
        optimizer_state=payload["optimizer_state"],
        batch_index=int(payload["batch_index"]),
        epoch=int(payload["epoch"]),
        best_validation_mae=float(payload["best_validation_mae"]),
        stats=NormalizationStats.from_dict(payload["stats"]),
        factor=payload["factor"],
        version=version,
    )


__all__ = [
    "CHECKPOINT_VERSION",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "settings_from_dict",
    "settings_to_dict",
]
