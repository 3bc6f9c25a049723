"""Contribution percentages, day-grouped tables and the Top-5 MFC / SIC summary metrics."""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Final

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from ..errors import ComparisonError, ConfigurationError, DegenerateAttributionError

TOP_FACTORS: Final[int] = 5
STATIC_GROUP: Final[str] = "Static"
HOURS_PER_DAY: Final[int] = 24
# Most recent hour, the four before it, then everything older (for histories up to one day).
SHORT_HISTORY_GROUPS: Final[tuple[int, ...]] = (1, 4)


def day_groups(history: int) -> list[tuple[str, list[int]]]:
    """Row indices (oldest first) of each group, most recent group first."""
    if history < 1:
        raise ConfigurationError("history must be >= 1")
    if history > HOURS_PER_DAY:
        days = -(-history // HOURS_PER_DAY)
        groups = []
        for day in range(1, days + 1):
            stop = history - (day - 1) * HOURS_PER_DAY
            start = max(stop - HOURS_PER_DAY, 0)
            groups.append((f"-{day}D", list(range(start, stop))))
        return groups
    groups = []
    stop = history
    for index, size in enumerate(SHORT_HISTORY_GROUPS):
        if stop <= 0:
            break
        start = max(stop - size, 0)
        groups.append((f"-{index + 1}D", list(range(start, stop))))
        stop = start
    if stop > 0:
        groups.append((f"-{len(groups) + 1}D", list(range(0, stop))))
    return groups


@dataclass(slots=True, frozen=True)
class AttributionReport:
    channels: tuple[str, ...]
    static_ids: tuple[int, ...]
    percentages: NDArray[np.float64]
    top5: tuple[str, ...]
    top5_mfc: float
    sic: float

    @property
    def totals(self) -> NDArray[np.float64]:
        return self.percentages.sum(axis=0)

    @property
    def factor_ids(self) -> tuple[int, ...]:
        return tuple(index for index in range(len(self.channels)) if index not in self.static_ids)

    def group_table(self) -> pd.DataFrame:
        """Percent per channel (rows) and group (columns); static channels sit in the Static column."""
        groups = day_groups(self.percentages.shape[0])
        table = pd.DataFrame(0.0, index=list(self.channels), columns=[label for label, _ in groups] + [STATIC_GROUP])
        factors = [self.channels[index] for index in self.factor_ids]
        for label, rows in groups:
            table.loc[factors, label] = self.percentages[rows][:, list(self.factor_ids)].sum(axis=0)
        statics = [self.channels[index] for index in self.static_ids]
        table.loc[statics, STATIC_GROUP] = self.totals[list(self.static_ids)]
        table.index.name = "channel"
        return table

    def to_dict(self) -> dict[str, Any]:
        return {
            "channels": list(self.channels),
            "static_ids": list(self.static_ids),
            "percentages": self.percentages.tolist(),
            "totals": dict(zip(self.channels, self.totals.tolist(), strict=True)),
            "top5": list(self.top5),
            "top5_mfc": self.top5_mfc,
            "sic": self.sic,
        }


def contribution_report(
    ig: NDArray[np.floating],
    channel_names: Sequence[str],
    static_ids: Sequence[int],
) -> AttributionReport:
    """Percent contributions of each (step, channel) cell of a non-negative (T_h, D) attribution."""
    ig = np.asarray(ig, dtype=np.float64)
    if ig.ndim != 2 or ig.shape[1] != len(channel_names):
        raise ConfigurationError(f"attribution {ig.shape} does not match {len(channel_names)} channels")
    if np.any(ig < 0) or not np.all(np.isfinite(ig)):
        raise ConfigurationError("attributions must be finite and non-negative")
    total = ig.sum()
    if total <= 0:
        raise DegenerateAttributionError("attributions sum to zero; the input equals its baseline")
    percentages = ig / total * 100.0
    statics = tuple(sorted(set(static_ids)))
    if any(not 0 <= index < len(channel_names) for index in statics):
        raise ConfigurationError(f"static channel ids {statics} outside {len(channel_names)} channels")
    totals = percentages.sum(axis=0)
    factors = [index for index in range(len(channel_names)) if index not in statics]
    # Stable sort so ties keep channel order.
    ranked = sorted(factors, key=lambda index: -totals[index])[:TOP_FACTORS]
    return AttributionReport(
        channels=tuple(channel_names),
        static_ids=statics,
        percentages=percentages,
        top5=tuple(channel_names[index] for index in ranked),
        top5_mfc=float(totals[ranked].sum()),
        sic=float(totals[list(statics)].sum()),
    )


def modal_delta(report_uni: AttributionReport, report_multi: AttributionReport) -> tuple[float, float]:
    """(Top-5 MFC, SIC) of the multi-modal run minus the numerical-only run, in percentage points."""
    if report_uni.channels != report_multi.channels or report_uni.static_ids != report_multi.static_ids:
        raise ComparisonError("reports cover different channel sets")
    return report_multi.top5_mfc - report_uni.top5_mfc, report_multi.sic - report_uni.sic


def write_report_json(report: AttributionReport, path: Path, **extra: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict() | extra, indent=2) + "\n")


def write_report_csv(report: AttributionReport, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    report.group_table().to_csv(path, float_format="%.6f")


__all__ = [
    "AttributionReport",
    "STATIC_GROUP",
    "contribution_report",
    "day_groups",
    "modal_delta",
    "write_report_csv",
    "write_report_json",
]
