"""The five-configuration ablation ladder, trained one after another on the same data."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Final

import pandas as pd

from ..config import QueryMode, TrainConfig, VisionBranch
from ..data import WindowedDataset
from ..errors import ConfigurationError
from ..models import count_parameters
from .checkpoint import load_checkpoint
from .trainer import train

logger = logging.getLogger(__name__)

ABLATION_TABLE: Final[str] = "ablation.csv"


@dataclass(slots=True, frozen=True)
class AblationRow:
    time_embedding: bool
    vision_branch: VisionBranch
    query: QueryMode | None

    @property
    def numerical_label(self) -> str:
        return "N-GCN" if self.time_embedding else "N-GCN*"

    @property
    def vision_label(self) -> str:
        match self.vision_branch:
            case VisionBranch.NONE:
                return "-"
            case VisionBranch.CONV_LSTM:
                return "ConvLSTM"
            case VisionBranch.V_LSTM:
                return "V-LSTM"

    @property
    def fusion_label(self) -> str:
        return "-" if self.query is None else self.query.value.capitalize()

    @property
    def label(self) -> str:
        parts = (self.numerical_label, self.vision_label, self.fusion_label)
        return " + ".join(part for part in parts if part != "-")

    @property
    def slug(self) -> str:
        return self.label.lower().replace(" + ", "_").replace("*", "-no-time")

    def apply(self, config: TrainConfig) -> TrainConfig:
        return config.replace(
            time_embedding=self.time_embedding,
            vision_branch=self.vision_branch,
            query=self.query or QueryMode.SINGLE,
        )


ABLATION_LADDER: Final[tuple[AblationRow, ...]] = (
    AblationRow(False, VisionBranch.NONE, None),
    AblationRow(True, VisionBranch.NONE, None),
    AblationRow(True, VisionBranch.CONV_LSTM, QueryMode.SINGLE),
    AblationRow(True, VisionBranch.V_LSTM, QueryMode.SINGLE),
    AblationRow(True, VisionBranch.V_LSTM, QueryMode.DOUBLE),
)


def run_ablation(
    config: TrainConfig,
    data: WindowedDataset,
    out_dir: Path,
    rows: tuple[AblationRow, ...] = ABLATION_LADDER,
) -> pd.DataFrame:
    """Train every row with the same seed and data; write and return the comparison table."""
    needs_vision = [row.label for row in rows if row.vision_branch is not VisionBranch.NONE]
    if needs_vision and data.bands < 1:
        raise ConfigurationError(f"dataset has no satellite frames for {', '.join(needs_vision)}")
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for row in rows:
        logger.info("Ablation run %s", row.label)
        result = train(row.apply(config), data, out_dir / row.slug)
        model = load_checkpoint(result.checkpoint_path).restore_model()
        records.append(
            {
                "configuration": row.label,
                "numerical": row.numerical_label,
                "vision": row.vision_label,
                "fusion": row.fusion_label,
                "parameters": count_parameters(model),
                "factor": config.target,
                "validation_mae": result.validation.mae,
                "validation_rmse": result.validation.rmse,
                "test_mae": result.test.mae,
                "test_rmse": result.test.rmse,
                "best_epoch": result.best_epoch,
            }
        )
    table = pd.DataFrame.from_records(records)
    table.to_csv(out_dir / ABLATION_TABLE, index=False)
    return table


__all__ = ["ABLATION_LADDER", "ABLATION_TABLE", "AblationRow", "run_ablation"]
