"""Training, evaluation, checkpoints and the ablation ladder."""

from .ablation import ABLATION_LADDER, ABLATION_TABLE, AblationRow, run_ablation
from .checkpoint import CHECKPOINT_VERSION, Checkpoint, load_checkpoint, save_checkpoint
from .metrics import EpochRecord, ErrorAccumulator, MetricReport, append_metric_row, mae, read_metric_log, rmse
from .trainer import (
    BEST_CHECKPOINT,
    METRIC_LOG,
    Trainer,
    TrainResult,
    decay_milestones,
    evaluate,
    evaluate_checkpoint,
    train,
)

__all__ = [
    "ABLATION_LADDER",
    "ABLATION_TABLE",
    "AblationRow",
    "BEST_CHECKPOINT",
    "CHECKPOINT_VERSION",
    "Checkpoint",
    "EpochRecord",
    "ErrorAccumulator",
    "METRIC_LOG",
    "MetricReport",
    "TrainResult",
    "Trainer",
    "append_metric_row",
    "decay_milestones",
    "evaluate",
    "evaluate_checkpoint",
    "load_checkpoint",
    "mae",
    "read_metric_log",
    "rmse",
    "run_ablation",
    "save_checkpoint",
    "train",
]
