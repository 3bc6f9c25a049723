"""Run configuration: TOML files, flag overrides and environment fallbacks."""

from __future__ import annotations

import dataclasses
import hashlib
import logging
import tomllib
from collections.abc import Mapping
from dataclasses import dataclass
from enum import StrEnum
from os import getenv
from pathlib import Path
from typing import Any, Final, Self

import torch
from dotenv import load_dotenv

from .errors import ConfigurationError
from .variables import TARGET_FACTORS

load_dotenv()

logger = logging.getLogger(__name__)

DATA_ROOT_ENV: Final[str] = "VNNET_DATA_ROOT"
REGIONS: Final[tuple[str, ...]] = ("NE", "SW", "SE", "synthetic")


class VisionBranch(StrEnum):
    NONE = "none"
    CONV_LSTM = "plain-conv-lstm"
    V_LSTM = "v-lstm"


class QueryMode(StrEnum):
    SINGLE = "single"
    DOUBLE = "double"


class SamplingMode(StrEnum):
    TEACHER_FORCED = "teacher-forced"
    SCHEDULED = "scheduled"
    FREE_RUNNING = "free-running"


@dataclass(slots=True, frozen=True, kw_only=True)
class TrainConfig:
    """Every knob of a training run."""

    history: int = 12
    horizon: int = 12
    hidden: int = 32
    embed_dim: int = 16
    num_layers: int = 2
    vision_layers: int = 3
    vision_hidden: tuple[int, ...] | None = None
    channel_reduction: int = 8
    sampling_k: float = 1000.0
    sampling_mode: SamplingMode = SamplingMode.SCHEDULED
    batch_size: int = 16
    lr: float = 1e-2
    lr_decay_factor: float = 0.5
    lr_decay_every: int = 10
    lr_decay_until: int = 50
    epochs: int = 100
    patience: int = 30
    clip_grad_norm: float | None = None
    seed: int = 0
    target: str = "temperature"
    region: str = "synthetic"
    time_embedding: bool = True
    vision_branch: VisionBranch = VisionBranch.V_LSTM
    query: QueryMode = QueryMode.DOUBLE
    dtype: str = "float32"
    num_workers: int = 0
    ig_steps: int = 64

    def __post_init__(self) -> None:
        for name in ("history", "horizon", "hidden", "embed_dim", "num_layers", "vision_layers", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.epochs < 0 or self.patience < 1:
            raise ConfigurationError("epochs must be >= 0 and patience >= 1")
        if self.sampling_k < 1:
            raise ConfigurationError(f"sampling_k must be >= 1, got {self.sampling_k}")
        if not 0 < self.lr_decay_factor <= 1:
            raise ConfigurationError(f"lr_decay_factor must lie in (0, 1], got {self.lr_decay_factor}")
        if self.target not in TARGET_FACTORS:
            raise ConfigurationError(f"unknown target {self.target!r}; expected one of {sorted(TARGET_FACTORS)}")
        if self.region not in REGIONS:
            raise ConfigurationError(f"unknown region {self.region!r}; expected one of {REGIONS}")
        if self.dtype not in ("float32", "float64"):
            raise ConfigurationError(f"dtype must be float32 or float64, got {self.dtype!r}")
        if self.vision_hidden is not None and len(self.vision_hidden) != self.vision_layers:
            raise ConfigurationError("vision_hidden needs one width per vision layer")
        if self.ig_steps < 1:
            raise ConfigurationError("ig_steps must be >= 1")

    @property
    def torch_dtype(self) -> torch.dtype:
        return torch.float64 if self.dtype == "float64" else torch.float32

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> Self:
        known = {item.name: item for item in dataclasses.fields(cls)}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        coerced: dict[str, Any] = {}
        try:
            for name, value in values.items():
                match name:
                    case "vision_branch":
                        value = VisionBranch(value)
                    case "query":
                        value = QueryMode(value)
                    case "sampling_mode":
                        value = SamplingMode(value)
                    case "vision_hidden" if value is not None:
                        value = tuple(int(width) for width in value)
                coerced[name] = value
            return cls(**coerced)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc

    def replace(self, **changes: Any) -> Self:
        merged = self.to_dict() | {key: value for key, value in changes.items() if value is not None}
        return type(self).from_mapping(merged)

    def to_dict(self) -> dict[str, Any]:
        echo = dataclasses.asdict(self)
        for name, value in echo.items():
            if isinstance(value, StrEnum):
                echo[name] = value.value
            elif isinstance(value, tuple):
                echo[name] = list(value)
        return echo


def load_config(path: Path | None = None, **overrides: Any) -> TrainConfig:
    """Read a flat TOML file (if given) and apply non-None overrides on top."""
    values: dict[str, Any] = {}
    if path is not None:
        try:
            with path.open("rb") as handle:
                values = tomllib.load(handle)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
        logger.debug("Loaded %d config keys from %s", len(values), path)
    values |= {key: value for key, value in overrides.items() if value is not None}
    return TrainConfig.from_mapping(values)


def sub_seed(seed: int, name: str) -> int:
    """Derive a stable named seed so every random stream is reproducible on its own."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


def data_root() -> Path | None:
    """Dataset root from the environment (or a .env file), if configured."""
    root = getenv(DATA_ROOT_ENV)
    return Path(root) if root else None


__all__ = [
    "DATA_ROOT_ENV",
    "QueryMode",
    "REGIONS",
    "SamplingMode",
    "TrainConfig",
    "VisionBranch",
    "data_root",
    "load_config",
    "sub_seed",
]
