"""Attribution of forecasts to input factors and history steps."""

from .figure import plot_contributions
from .integrated_gradients import (
    DEFAULT_STEPS,
    Attribution,
    BaselineInputs,
    attribute_split,
    integrated_gradients,
    path_gradients,
)
from .report import (
    STATIC_GROUP,
    AttributionReport,
    contribution_report,
    day_groups,
    modal_delta,
    write_report_csv,
    write_report_json,
)

__all__ = [
    "Attribution",
    "AttributionReport",
    "BaselineInputs",
    "DEFAULT_STEPS",
    "STATIC_GROUP",
    "attribute_split",
    "contribution_report",
    "day_groups",
    "integrated_gradients",
    "modal_delta",
    "path_gradients",
    "plot_contributions",
    "write_report_csv",
    "write_report_json",
]
