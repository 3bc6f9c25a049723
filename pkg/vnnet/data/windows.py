"""Sliding history/horizon windows over normalized station series and satellite frames."""

from __future__ import annotations

import functools
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Final, override

import numpy as np
import torch
from numpy.typing import NDArray
from torch.utils.data import Dataset

from ..errors import ConfigurationError
from ..variables import TARGET_FACTORS
from .numerical import FORWARD_FILL_LIMIT, NumericalSchema, StationSeries, read_station_csv, read_station_npy
from .splits import DatasetSplit, NormalizationStats

logger = logging.getLogger(__name__)

type Sample = dict[str, torch.Tensor]

FRAME_CACHE_SIZE: Final[int] = 512


def count_windows(length: int, history: int, horizon: int) -> int:
    """Number of length ``history + horizon`` windows in a series of ``length`` steps."""
    if history < 1 or horizon < 1:
        raise ConfigurationError("history and horizon must be >= 1")
    return max(length - history - horizon + 1, 0)


def window_starts(complete: NDArray[np.bool_], history: int, horizon: int) -> NDArray[np.int64]:
    """Start offsets of every window whose steps are all complete."""
    span = history + horizon
    if count_windows(len(complete), history, horizon) == 0:
        return np.zeros(0, dtype=np.int64)
    usable = np.lib.stride_tricks.sliding_window_view(complete, span).all(axis=-1)
    return np.flatnonzero(usable).astype(np.int64)


class VisionFrames:
    """Hourly satellite frames (H, W, C_s), held in memory or loaded per window from NPY files.

    File-backed frames are decoded once and kept in a bounded cache shared by overlapping windows.
    """

    def __init__(self, frames: NDArray[np.floating] | None = None, paths: Sequence[Path] = ()) -> None:
        if (frames is None) == (not paths):
            raise ConfigurationError("give either an in-memory frame array or per-hour frame files")
        self._frames = None if frames is None else np.asarray(frames, dtype=np.float32)
        self._paths = tuple(paths)
        if self._frames is not None and self._frames.ndim != 4:
            raise ConfigurationError(f"frames must be (T, H, W, C_s), got {self._frames.shape}")
        self._bands: int | None = None

    def __len__(self) -> int:
        return len(self._paths) if self._frames is None else len(self._frames)

    @property
    def bands(self) -> int:
        if self._bands is None:
            self._bands = self.window(0, 1).shape[-1]
        return self._bands

    @functools.lru_cache(maxsize=FRAME_CACHE_SIZE)
    def _load(self, hour: int) -> NDArray[np.float32]:
        frame = np.load(self._paths[hour]).astype(np.float32)
        frame.flags.writeable = False
        return frame

    def window(self, start: int, stop: int) -> NDArray[np.float32]:
        if self._frames is not None:
            return self._frames[start:stop]
        return np.stack([self._load(hour) for hour in range(start, min(stop, len(self._paths)))])

    def band_range(self, start: int, stop: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Per-band minimum and maximum over hours ``start:stop``."""
        low = high = None
        for hour in range(start, stop):
            frame = self.window(hour, hour + 1)
            frame = frame.reshape(-1, frame.shape[-1]).astype(np.float64)
            low = frame.min(axis=0) if low is None else np.minimum(low, frame.min(axis=0))
            high = frame.max(axis=0) if high is None else np.maximum(high, frame.max(axis=0))
        if low is None or high is None:
            raise ConfigurationError("cannot fit vision statistics on an empty training split")
        return low, high


class WindowDataset(Dataset[Sample]):
    """Windows of one split; every tensor is float64 except the calendar indices."""

    def __init__(
        self,
        values: NDArray[np.float64],
        physical_target: NDArray[np.float64],
        calendar: NDArray[np.int64],
        starts: NDArray[np.int64],
        *,
        history: int,
        horizon: int,
        target_channel: int,
        vision: VisionFrames | None = None,
        stats: NormalizationStats | None = None,
    ) -> None:
        self.values = values
        self.physical_target = physical_target
        self.calendar = calendar
        self.starts = starts
        self.history = history
        self.horizon = horizon
        self.target_channel = target_channel
        self.vision = vision
        self.stats = stats

    def __len__(self) -> int:
        return len(self.starts)

    @override
    def __getitem__(self, index: int) -> Sample:
        start = int(self.starts[index])
        split = start + self.history
        stop = split + self.horizon
        channel = self.target_channel
        sample = {
            "numerical": torch.from_numpy(self.values[start:split]),
            "timestamps": torch.from_numpy(self.calendar[start:split]),
            "target": torch.from_numpy(self.values[split:stop, :, channel : channel + 1]),
            "target_physical": torch.from_numpy(self.physical_target[split:stop, :, None]),
        }
        if self.vision is not None:
            frames = self.vision.window(start, split)
            if self.stats is not None and self.stats.vision_min is not None:
                frames = self.stats.normalize_vision(frames)
            sample["vision"] = torch.from_numpy(np.ascontiguousarray(frames.transpose(0, 3, 1, 2), dtype=np.float64))
        return sample


@dataclass(slots=True, frozen=True)
class WindowedDataset:
    train: WindowDataset
    validation: WindowDataset
    test: WindowDataset
    stats: NormalizationStats
    schema: NumericalSchema
    station_ids: tuple[str, ...]
    target_channel: int

    @property
    def nodes(self) -> int:
        return len(self.station_ids)

    @property
    def channels(self) -> int:
        return len(self.schema.channels)

    @property
    def bands(self) -> int:
        vision = self.train.vision
        return 0 if vision is None else vision.bands

    def split(self, name: str) -> WindowDataset:
        match name:
            case "train" | "validation" | "test":
                return getattr(self, name)
            case _:
                raise ConfigurationError(f"unknown split {name!r}")


def _read_series(source: StationSeries | Path) -> StationSeries:
    if isinstance(source, StationSeries):
        return source
    match source.suffix.lower():
        case ".csv":
            return read_station_csv(source)
        case ".npy":
            return read_station_npy(source)
        case _:
            raise ConfigurationError(f"{source}: expected a .csv or .npy station file")


def load_numerical_dataset(
    source: StationSeries | Path,
    split: DatasetSplit,
    history: int,
    horizon: int,
    *,
    target: str = "temperature",
    vision: VisionFrames | None = None,
    fill_limit: int = FORWARD_FILL_LIMIT,
) -> WindowedDataset:
    """Window a station series per split with z-score statistics fitted on the training range only.

    Gaps of up to ``fill_limit`` hours are forward-filled; windows touching a longer gap are dropped.
    """
    series = _read_series(source).fill_gaps(fill_limit)
    if split.test[1] > series.length:
        raise ConfigurationError(f"split ends at step {split.test[1]} but the series has {series.length} steps")
    if vision is not None and len(vision) != series.length:
        raise ConfigurationError(f"{len(vision)} satellite frames for {series.length} station hours")
    target_channel = series.schema.index(TARGET_FACTORS.get(target, target))

    train_start, train_stop = split.train
    vision_min = vision_max = None
    if vision is not None:
        vision_min, vision_max = vision.band_range(train_start, train_stop)
    stats = NormalizationStats.fit(series.values[train_start:train_stop], vision_min, vision_max)
    normalized = stats.normalize(series.values)
    calendar = series.calendar()
    complete = series.complete_steps()

    parts: dict[str, WindowDataset] = {}
    for name, (start, stop) in split.ranges().items():
        starts = window_starts(complete[start:stop], history, horizon) + start
        expected = count_windows(stop - start, history, horizon)
        if len(starts) < expected:
            dropped = expected - len(starts)
            logger.warning("%s split: dropped %d of %d windows around data gaps", name, dropped, expected)
        parts[name] = WindowDataset(
            normalized,
            series.values[..., target_channel],
            calendar,
            starts,
            history=history,
            horizon=horizon,
            target_channel=target_channel,
            vision=vision,
            stats=stats,
        )
    if not len(parts["validation"]):
        logger.warning("Validation split has no windows; early stopping will track the training loss.")
    return WindowedDataset(
        parts["train"],
        parts["validation"],
        parts["test"],
        stats,
        series.schema,
        series.station_ids,
        target_channel,
    )


__all__ = [
    "Sample",
    "VisionFrames",
    "WindowDataset",
    "WindowedDataset",
    "count_windows",
    "load_numerical_dataset",
    "window_starts",
]
