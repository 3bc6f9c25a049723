"""Hourly station observations: schema, CSV/NPY containers and gap filling."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Final, Self

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from ..errors import ConfigurationError, OrderingError
from ..variables import FACTOR_NAMES, STATIC_NAMES, SYNTHETIC_FACTOR_ORDER

logger = logging.getLogger(__name__)

FORWARD_FILL_LIMIT: Final[int] = 3
ID_COLUMN: Final[str] = "station_id"
TIME_COLUMN: Final[str] = "timestamp"


@dataclass(slots=True, frozen=True)
class NumericalSchema:
    """Channel layout: meteorological factors first, then the static constants."""

    factors: tuple[str, ...] = FACTOR_NAMES
    statics: tuple[str, ...] = STATIC_NAMES

    @property
    def channels(self) -> tuple[str, ...]:
        return self.factors + self.statics

    @property
    def static_indices(self) -> tuple[int, ...]:
        return tuple(range(len(self.factors), len(self.channels)))

    def index(self, name: str) -> int:
        try:
            return self.channels.index(name)
        except ValueError:
            raise ConfigurationError(f"channel {name!r} is not part of this dataset") from None

    @classmethod
    def synthetic(cls, channels: int) -> Self:
        factors = channels - len(STATIC_NAMES)
        if not 1 <= factors <= len(SYNTHETIC_FACTOR_ORDER):
            raise ConfigurationError(f"need between {len(STATIC_NAMES) + 1} and 23 channels, got {channels}")
        return cls(SYNTHETIC_FACTOR_ORDER[:factors], STATIC_NAMES)


@dataclass(slots=True, frozen=True)
class StationSeries:
    """Observations of shape (T, N, D) on a gap-free hourly index; missing hours hold NaN."""

    values: NDArray[np.float64]
    timestamps: pd.DatetimeIndex
    station_ids: tuple[str, ...]
    schema: NumericalSchema = field(default_factory=NumericalSchema)

    def __post_init__(self) -> None:
        expected = (len(self.timestamps), len(self.station_ids), len(self.schema.channels))
        if self.values.shape != expected:
            raise ConfigurationError(f"values {self.values.shape} do not match (T, N, D) = {expected}")
        if len(self.timestamps) > 1:
            steps = np.diff(self.timestamps.asi8)
            if np.any(steps <= 0):
                raise OrderingError("timestamps are not strictly increasing")
            if np.any(steps != pd.Timedelta(hours=1).value):
                raise ConfigurationError("timestamps must form a gap-free hourly index")

    @property
    def length(self) -> int:
        return len(self.timestamps)

    def calendar(self) -> NDArray[np.int64]:
        """(month, day, hour) per step, shape (T, 3)."""
        stamps = self.timestamps
        return np.stack([stamps.month, stamps.day, stamps.hour], axis=-1).astype(np.int64)

    def fill_gaps(self, limit: int = FORWARD_FILL_LIMIT) -> Self:
        """Forward-fill runs of at most ``limit`` missing hours; longer gaps stay NaN."""
        steps, nodes, channels = self.values.shape
        frame = pd.DataFrame(self.values.reshape(steps, nodes * channels))

        def bounded_ffill(column: pd.Series) -> pd.Series:
            missing = column.isna()
            gap_length = missing.groupby((~missing).cumsum()).transform("sum")
            return column.ffill().where(~missing | (gap_length <= limit))

        filled = frame.apply(bounded_ffill)
        values = filled.to_numpy().reshape(steps, nodes, channels)
        return type(self)(values, self.timestamps, self.station_ids, self.schema)

    def complete_steps(self) -> NDArray[np.bool_]:
        return np.isfinite(self.values).all(axis=(1, 2))


def read_station_csv(path: Path, schema: NumericalSchema | None = None) -> StationSeries:
    """Long CSV (station id, ISO timestamp, one column per channel) to a dense hourly series."""
    frame = pd.read_csv(path, dtype={ID_COLUMN: str})
    if ID_COLUMN not in frame or TIME_COLUMN not in frame:
        raise ConfigurationError(f"{path}: needs {ID_COLUMN!r} and {TIME_COLUMN!r} columns")
    if schema is None:
        channel_columns = [name for name in frame.columns if name not in (ID_COLUMN, TIME_COLUMN)]
        factors = tuple(name for name in channel_columns if name not in STATIC_NAMES)
        schema = NumericalSchema(factors, STATIC_NAMES)
    missing = [name for name in schema.channels if name not in frame]
    if missing:
        raise ConfigurationError(f"{path}: missing columns {missing}")
    frame[TIME_COLUMN] = pd.to_datetime(frame[TIME_COLUMN])

    ordered = frame.groupby(ID_COLUMN, sort=False)[TIME_COLUMN].agg(
        lambda stamps: stamps.is_monotonic_increasing and stamps.is_unique
    )
    if not ordered.all():
        bad = ", ".join(ordered.index[~ordered])
        raise OrderingError(f"{path}: timestamps not strictly increasing for stations {bad}")

    index = pd.date_range(frame[TIME_COLUMN].min(), frame[TIME_COLUMN].max(), freq="h")
    station_ids = tuple(pd.unique(frame[ID_COLUMN]))
    values = np.full((len(index), len(station_ids), len(schema.channels)), np.nan)
    for column, (_, rows) in enumerate(frame.groupby(ID_COLUMN, sort=False)):
        values[:, column] = rows.set_index(TIME_COLUMN)[list(schema.channels)].reindex(index).to_numpy()
    gaps = int((~np.isfinite(values).all(axis=(1, 2))).sum())
    if gaps:
        logger.warning("%s: %d of %d hours have missing observations", path, gaps, len(index))
    return StationSeries(values, index, station_ids, schema)


def write_station_csv(series: StationSeries, path: Path) -> None:
    frames = []
    for column, station in enumerate(series.station_ids):
        rows = pd.DataFrame(series.values[:, column], columns=list(series.schema.channels))
        rows.insert(0, TIME_COLUMN, series.timestamps.strftime("%Y-%m-%dT%H:%M:%S"))
        rows.insert(0, ID_COLUMN, station)
        frames.append(rows.dropna(subset=list(series.schema.channels), how="all"))
    pd.concat(frames, ignore_index=True).to_csv(path, index=False, float_format="%.6f")


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def write_station_npy(series: StationSeries, path: Path) -> None:
    """NPY v1.0 array (T, N, D) plus a JSON sidecar with the start time, station ids and channel names."""
    np.save(path, series.values.astype(np.float64))
    meta = {
        "start": series.timestamps[0].isoformat() if series.length else None,
        "station_ids": list(series.station_ids),
        "factors": list(series.schema.factors),
        "statics": list(series.schema.statics),
    }
    _sidecar(path).write_text(json.dumps(meta, indent=2) + "\n")


def read_station_npy(path: Path) -> StationSeries:
    values = np.load(path)
    meta = json.loads(_sidecar(path).read_text())
    schema = NumericalSchema(tuple(meta["factors"]), tuple(meta["statics"]))
    timestamps = pd.date_range(meta["start"], periods=values.shape[0], freq="h")
    return StationSeries(values.astype(np.float64), timestamps, tuple(meta["station_ids"]), schema)


__all__ = [
    "FORWARD_FILL_LIMIT",
    "NumericalSchema",
    "StationSeries",
    "read_station_csv",
    "read_station_npy",
    "write_station_csv",
    "write_station_npy",
]
