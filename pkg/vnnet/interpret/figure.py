"""Stacked-bar figure of channel contributions split by history group."""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .report import AttributionReport  # noqa: E402

logger = logging.getLogger(__name__)


def plot_contributions(report: AttributionReport, path: Path, *, title: str | None = None) -> Path:
    table = report.group_table()
    table = table.loc[table.sum(axis=1).sort_values(ascending=True).index]
    figure, axes = plt.subplots(figsize=(7.0, 0.28 * len(table) + 1.5))
    left = None
    for column in table.columns:
        values = table[column].to_numpy()
        axes.barh(table.index, values, left=left, label=column)
        left = values if left is None else left + values
    axes.set_xlabel("contribution (%)")
    axes.legend(loc="lower right", fontsize="small", frameon=False)
    if title:
        axes.set_title(title)
    figure.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(path, dpi=150)
    plt.close(figure)
    logger.debug("Wrote contribution figure to %s", path)
    return path


__all__ = ["plot_contributions"]
