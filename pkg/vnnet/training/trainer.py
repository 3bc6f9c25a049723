"""Training loop: Adam on normalized MAE, scheduled sampling, step LR decay and early stopping."""

from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Final

import torch
from torch import Tensor
from torch.nn import functional
from torch.optim import Adam
from torch.optim.lr_scheduler import MultiStepLR
from torch.utils.data import DataLoader

from ..config import TrainConfig, VisionBranch, sub_seed
from ..data import WindowDataset, WindowedDataset
from ..errors import ConfigurationError, TrainingDivergedError
from ..models import SamplingSchedule, VNNet, create_model, settings_from_config
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .metrics import EpochRecord, ErrorAccumulator, MetricReport, append_metric_row

logger = logging.getLogger(__name__)

BEST_CHECKPOINT: Final[str] = "best.pt"
METRIC_LOG: Final[str] = "metrics.csv"


@dataclass(slots=True)
class Batch:
    numerical: Tensor
    timestamps: Tensor
    target: Tensor
    target_physical: Tensor
    vision: Tensor | None

    @classmethod
    def from_sample(cls, sample: dict[str, Tensor], dtype: torch.dtype) -> Batch:
        vision = sample.get("vision")
        return cls(
            sample["numerical"].to(dtype),
            sample["timestamps"],
            sample["target"].to(dtype),
            sample["target_physical"],
            None if vision is None else vision.to(dtype),
        )


@dataclass(slots=True)
class TrainResult:
    checkpoint_path: Path
    metric_log: Path
    validation: MetricReport
    test: MetricReport
    curve: tuple[EpochRecord, ...]
    best_epoch: int
    stopped_early: bool
    sampling_history: list[float] = field(default_factory=list)


def decay_milestones(config: TrainConfig) -> list[int]:
    """Epoch counts after which the learning rate is multiplied by the decay factor."""
    return list(range(config.lr_decay_every, config.lr_decay_until + 1, config.lr_decay_every))


def _batches(dataset: WindowDataset, config: TrainConfig, generator: torch.Generator | None) -> Iterator[Batch]:
    loader = DataLoader(
        dataset,
        batch_size=config.batch_size,
        shuffle=generator is not None,
        generator=generator,
        num_workers=config.num_workers,
    )
    for sample in loader:
        yield Batch.from_sample(sample, config.torch_dtype)


def evaluate(
    model: VNNet,
    dataset: WindowDataset,
    config: TrainConfig,
    *,
    split: str,
) -> MetricReport:
    """Free-running forecasts of ``dataset`` scored in physical units."""
    if dataset.stats is None:
        raise ConfigurationError("dataset carries no normalization statistics")
    accumulator = ErrorAccumulator(model.settings.horizon)
    was_training = model.training
    model.eval()
    with torch.no_grad():
        for batch in _batches(dataset, config, None):
            if batch.numerical.shape[-2:] != (model.settings.nodes, model.settings.channels):
                raise ConfigurationError(
                    f"checkpoint expects {model.settings.nodes} stations x {model.settings.channels} channels, "
                    f"data has {tuple(batch.numerical.shape[-2:])}"
                )
            forecast = model(batch.numerical, batch.timestamps, batch.vision)
            physical = dataset.stats.denormalize(forecast.to(torch.float64), dataset.target_channel)
            accumulator.update(physical, batch.target_physical)
    model.train(was_training)
    return accumulator.report(config.target, split)


class Trainer:
    """Owns the model, optimizer and the global mini-batch counter of one run."""

    def __init__(self, config: TrainConfig, data: WindowedDataset, out_dir: Path) -> None:
        self.config = config
        self.data = data
        self.out_dir = out_dir
        settings = settings_from_config(
            config,
            nodes=data.nodes,
            channels=data.channels,
            bands=data.bands,
            target_channel=data.target_channel,
        )
        self.model = create_model(settings, seed=sub_seed(config.seed, "model"), dtype=config.torch_dtype)
        self.optimizer = Adam(self.model.parameters(), lr=config.lr)
        self.scheduler = MultiStepLR(self.optimizer, milestones=decay_milestones(config), gamma=config.lr_decay_factor)
        self.schedule = SamplingSchedule(config.sampling_k, config.sampling_mode)
        self.loader_generator = torch.Generator().manual_seed(sub_seed(config.seed, "loader"))
        self.sampling_generator = torch.Generator().manual_seed(sub_seed(config.seed, "sampling"))
        self.batch_index = 0
        self.sampling_history: list[float] = []

    @property
    def checkpoint_path(self) -> Path:
        return self.out_dir / BEST_CHECKPOINT

    @property
    def metric_log(self) -> Path:
        return self.out_dir / METRIC_LOG

    def checkpoint(self, epoch: int, best_validation_mae: float) -> Checkpoint:
        return Checkpoint(
            config=self.config,
            settings=self.model.settings,
            model_state={name: tensor.detach().clone() for name, tensor in self.model.state_dict().items()},
            optimizer_state=self.optimizer.state_dict(),
            batch_index=self.batch_index,
            epoch=epoch,
            best_validation_mae=best_validation_mae,
            stats=self.data.stats,
            factor=self.config.target,
        )

    def train_epoch(self, epoch: int) -> tuple[float, MetricReport]:
        self.model.train()
        stats = self.data.stats
        accumulator = ErrorAccumulator(self.model.settings.horizon)
        losses: list[float] = []
        for batch in _batches(self.data.train, self.config, self.loader_generator):
            probability = self.schedule.probability(self.batch_index)
            self.sampling_history.append(probability)
            logger.debug("batch %d: teacher-forcing probability %.6f", self.batch_index, probability)

            forecast = self.model(
                batch.numerical,
                batch.timestamps,
                batch.vision,
                teacher=batch.target,
                schedule=self.schedule,
                batch_index=self.batch_index,
                generator=self.sampling_generator,
            )
            loss = functional.l1_loss(forecast, batch.target)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss.item()} at epoch {epoch}, mini-batch {self.batch_index} "
                    f"(lr {self.optimizer.param_groups[0]['lr']:.3g})"
                )
            self.optimizer.zero_grad()
            loss.backward()
            if self.config.clip_grad_norm is not None:
                torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.config.clip_grad_norm)
            self.optimizer.step()

            losses.append(loss.item())
            physical = stats.denormalize(forecast.detach().to(torch.float64), self.data.target_channel)
            accumulator.update(physical, batch.target_physical)
            self.batch_index += 1
        mean_loss = sum(losses) / len(losses) if losses else math.nan
        return mean_loss, accumulator.report(self.config.target, "train")

    def fit(self) -> TrainResult:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if not len(self.data.train):
            raise ConfigurationError("training split has no complete windows")
        best = math.inf
        best_epoch = 0
        stale = 0
        stopped_early = False
        curve: list[EpochRecord] = []
        save_checkpoint(self.checkpoint(0, best), self.checkpoint_path)

        for epoch in range(1, self.config.epochs + 1):
            lr = self.optimizer.param_groups[0]["lr"]
            loss, train_report = self.train_epoch(epoch)
            self.scheduler.step()
            probability = self.sampling_history[-1] if self.sampling_history else math.nan
            validation_report = None
            if len(self.data.validation):
                validation_report = evaluate(self.model, self.data.validation, self.config, split="validation")
            validation_mae = None if validation_report is None else validation_report.mae
            score = validation_mae if validation_mae is not None else train_report.mae
            curve.append(EpochRecord(epoch, loss, train_report.mae, validation_mae, lr, probability))

            append_metric_row(
                self.metric_log,
                epoch=epoch,
                split="train",
                factor=self.config.target,
                mae=train_report.mae,
                rmse=train_report.rmse,
                lr=lr,
                p_i=probability,
            )
            if validation_report is not None:
                append_metric_row(
                    self.metric_log,
                    epoch=epoch,
                    split="validation",
                    factor=self.config.target,
                    mae=validation_report.mae,
                    rmse=validation_report.rmse,
                    lr=lr,
                    p_i=probability,
                )
            logger.info(
                "epoch %d/%d loss %.4f train MAE %.4f validation MAE %s lr %.3g",
                epoch,
                self.config.epochs,
                loss,
                train_report.mae,
                "n/a" if validation_mae is None else f"{validation_mae:.4f}",
                lr,
            )

            if score < best:
                best, best_epoch, stale = score, epoch, 0
                save_checkpoint(self.checkpoint(epoch, best), self.checkpoint_path)
            else:
                stale += 1
                if stale >= self.config.patience:
                    logger.info("No improvement for %d epochs; stopping after epoch %d", stale, epoch)
                    stopped_early = True
                    break

        best_model = load_checkpoint(self.checkpoint_path).restore_model()
        validation = evaluate(best_model, self.data.validation, self.config, split="validation")
        validation = dataclasses.replace(validation, curve=tuple(curve))
        test = evaluate(best_model, self.data.test, self.config, split="test")
        return TrainResult(
            self.checkpoint_path,
            self.metric_log,
            validation,
            test,
            tuple(curve),
            best_epoch,
            stopped_early,
            self.sampling_history,
        )


def train(config: TrainConfig, data: WindowedDataset, out_dir: Path) -> TrainResult:
    return Trainer(config, data, out_dir).fit()


def evaluate_checkpoint(path: Path, data: WindowedDataset, split: str = "test") -> MetricReport:
    checkpoint = load_checkpoint(path)
    if checkpoint.factor != checkpoint.config.target:
        raise ConfigurationError(f"{path}: inconsistent target {checkpoint.factor!r}")
    dataset = data.split(split)
    if data.channels != checkpoint.settings.channels or data.nodes != checkpoint.settings.nodes:
        raise ConfigurationError(
            f"{path}: trained on {checkpoint.settings.nodes} stations x {checkpoint.settings.channels} channels, "
            f"data has {data.nodes} x {data.channels}"
        )
    if checkpoint.settings.vision_branch is not VisionBranch.NONE and checkpoint.settings.bands != data.bands:
        raise ConfigurationError(f"{path}: trained on {checkpoint.settings.bands} bands, data has {data.bands}")
    return evaluate(checkpoint.restore_model(), dataset, checkpoint.config, split=split)


__all__ = [
    "BEST_CHECKPOINT",
    "METRIC_LOG",
    "TrainResult",
    "Trainer",
    "decay_milestones",
    "evaluate",
    "evaluate_checkpoint",
    "train",
]
