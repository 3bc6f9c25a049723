"""Physical-unit error metrics and the append-only metric log."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Final

import pandas as pd
import torch
from torch import Tensor

from ..errors import ConfigurationError

METRIC_COLUMNS: Final[tuple[str, ...]] = ("epoch", "split", "factor", "mae", "rmse", "lr", "p_i")


def mae(prediction: Tensor, target: Tensor) -> float:
    _check_shapes(prediction, target)
    return float((prediction - target).abs().mean())


def rmse(prediction: Tensor, target: Tensor) -> float:
    _check_shapes(prediction, target)
    return float((prediction - target).square().mean().sqrt())


def _check_shapes(prediction: Tensor, target: Tensor) -> None:
    if prediction.shape != target.shape:
        raise ConfigurationError(f"prediction {tuple(prediction.shape)} and target {tuple(target.shape)} differ")


@dataclass(slots=True, frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_mae: float
    validation_mae: float | None
    lr: float
    teacher_probability: float


@dataclass(slots=True, frozen=True)
class MetricReport:
    """Errors of one factor over one split, overall and per forecast step, in physical units."""

    factor: str
    split: str
    mae: float
    rmse: float
    step_mae: tuple[float, ...]
    step_rmse: tuple[float, ...]
    windows: int
    curve: tuple[EpochRecord, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "factor": self.factor,
            "split": self.split,
            "mae": self.mae,
            "rmse": self.rmse,
            "step_mae": list(self.step_mae),
            "step_rmse": list(self.step_rmse),
            "windows": self.windows,
            "curve": [
                {
                    "epoch": record.epoch,
                    "train_loss": record.train_loss,
                    "train_mae": record.train_mae,
                    "validation_mae": record.validation_mae,
                    "lr": record.lr,
                    "p_i": record.teacher_probability,
                }
                for record in self.curve
            ],
        }


@dataclass(slots=True)
class ErrorAccumulator:
    """Running per-step sums of absolute and squared errors over (B, T_p, N, 1) batches."""

    horizon: int
    abs_sum: Tensor = field(init=False)
    sq_sum: Tensor = field(init=False)
    count: int = 0
    windows: int = 0

    def __post_init__(self) -> None:
        self.abs_sum = torch.zeros(self.horizon, dtype=torch.float64)
        self.sq_sum = torch.zeros(self.horizon, dtype=torch.float64)

    def update(self, prediction: Tensor, target: Tensor) -> None:
        _check_shapes(prediction, target)
        if prediction.shape[1] != self.horizon:
            raise ConfigurationError(f"expected {self.horizon} forecast steps, got {prediction.shape[1]}")
        error = (prediction.detach().to(torch.float64) - target.to(torch.float64)).flatten(2)
        self.abs_sum += error.abs().sum(dim=(0, 2)).cpu()
        self.sq_sum += error.square().sum(dim=(0, 2)).cpu()
        self.count += error.shape[0] * error.shape[2]
        self.windows += error.shape[0]

    def report(self, factor: str, split: str, curve: tuple[EpochRecord, ...] = ()) -> MetricReport:
        if self.count == 0:
            nan = (math.nan,) * self.horizon
            return MetricReport(factor, split, math.nan, math.nan, nan, nan, 0, curve)
        step_mae = self.abs_sum / self.count
        step_mse = self.sq_sum / self.count
        return MetricReport(
            factor,
            split,
            float(step_mae.mean()),
            float(step_mse.mean().sqrt()),
            tuple(step_mae.tolist()),
            tuple(step_mse.sqrt().tolist()),
            self.windows,
            curve,
        )


def append_metric_row(path: Path, **row: Any) -> None:
    """Append one row to the metric CSV, writing the header on first use."""
    unknown = set(row) - set(METRIC_COLUMNS)
    if unknown:
        raise ConfigurationError(f"unknown metric columns {sorted(unknown)}")
    frame = pd.DataFrame([{column: row.get(column) for column in METRIC_COLUMNS}])
    frame.to_csv(path, mode="a", header=not path.exists(), index=False)


def read_metric_log(path: Path) -> pd.DataFrame:
    return pd.read_csv(path)


__all__ = [
    "ErrorAccumulator",
    "EpochRecord",
    "METRIC_COLUMNS",
    "MetricReport",
    "append_metric_row",
    "mae",
    "read_metric_log",
    "rmse",
]
