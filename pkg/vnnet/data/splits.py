"""Chronological splits and train-only normalization statistics."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from typing import Any, Final, Self

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from ..errors import ConfigurationError

# Last day (inclusive) of the train, validation and test periods of the station corpus.
WEATHER2K_BOUNDARIES: Final[tuple[str, str, str]] = ("2019-08-31", "2020-08-31", "2021-08-31")
SPLIT_NAMES: Final[tuple[str, str, str]] = ("train", "validation", "test")
NORMALIZATION_EPS: Final[float] = 1e-6

type IndexRange = tuple[int, int]


@dataclass(slots=True, frozen=True)
class DatasetSplit:
    """Half-open hourly index ranges, contiguous and in chronological order."""

    train: IndexRange
    validation: IndexRange
    test: IndexRange

    def __post_init__(self) -> None:
        ranges = (self.train, self.validation, self.test)
        if self.train[0] < 0 or any(start > stop for start, stop in ranges):
            raise ConfigurationError(f"invalid split ranges {ranges}")
        if self.train[1] != self.validation[0] or self.validation[1] != self.test[0]:
            raise ConfigurationError(f"split ranges {ranges} are not contiguous")

    def ranges(self) -> dict[str, IndexRange]:
        return dict(zip(SPLIT_NAMES, (self.train, self.validation, self.test), strict=True))

    @classmethod
    def chronological(cls, length: int, fractions: tuple[float, float, float] = (0.7, 0.1, 0.2)) -> Self:
        if length < 0 or any(part < 0 for part in fractions) or not np.isclose(sum(fractions), 1.0):
            raise ConfigurationError(f"invalid split fractions {fractions} for length {length}")
        train_end = int(round(length * fractions[0]))
        validation_end = int(round(length * (fractions[0] + fractions[1])))
        return cls((0, train_end), (train_end, validation_end), (validation_end, length))

    @classmethod
    def from_dates(cls, timestamps: pd.DatetimeIndex, boundaries: Iterable[str]) -> Self:
        """Split at the end of each given (inclusive) last day."""
        train_end, validation_end, test_end = (
            int(timestamps.searchsorted(pd.Timestamp(day) + pd.Timedelta(days=1))) for day in boundaries
        )
        return cls((0, train_end), (train_end, validation_end), (validation_end, test_end))

    @classmethod
    def weather2k(cls, timestamps: pd.DatetimeIndex) -> Self:
        return cls.from_dates(timestamps, WEATHER2K_BOUNDARIES)


@dataclass(slots=True, frozen=True)
class NormalizationStats:
    """Per-channel z-score statistics and per-band min/max, fitted on the training split."""

    mean: NDArray[np.float64]
    std: NDArray[np.float64]
    vision_min: NDArray[np.float64] | None = None
    vision_max: NDArray[np.float64] | None = None
    eps: float = NORMALIZATION_EPS

    @classmethod
    def fit(cls, train_values: NDArray[np.floating], vision_min=None, vision_max=None) -> Self:
        """Statistics over every finite (step, station) observation of each channel."""
        flat = train_values.reshape(-1, train_values.shape[-1])
        if not np.isfinite(flat).any(axis=0).all():
            raise ConfigurationError("training split has a channel without any observation")
        return cls(np.nanmean(flat, axis=0), np.nanstd(flat, axis=0), vision_min, vision_max)

    def normalize(self, values: NDArray[np.floating]) -> NDArray[np.float64]:
        return (values - self.mean) / (self.std + self.eps)

    def denormalize(self, values: Any, channel: int) -> Any:
        return values * (self.std[channel] + self.eps) + self.mean[channel]

    def normalize_vision(self, frames: NDArray[np.floating]) -> NDArray[np.float64]:
        """Min-max scale frames (..., C_s) to [0, 1] per band; constant bands map to 0."""
        if self.vision_min is None or self.vision_max is None:
            raise ConfigurationError("no vision statistics were fitted")
        span = self.vision_max - self.vision_min
        return (frames - self.vision_min) / np.where(span > 0, span, 1.0)

    def to_dict(self) -> dict[str, Any]:
        echo: dict[str, Any] = {"mean": self.mean.tolist(), "std": self.std.tolist(), "eps": self.eps}
        if self.vision_min is not None and self.vision_max is not None:
            echo |= {"vision_min": self.vision_min.tolist(), "vision_max": self.vision_max.tolist()}
        return echo

    @classmethod
    def from_dict(cls, values: dict[str, Any]) -> Self:
        vision_min = values.get("vision_min")
        vision_max = values.get("vision_max")
        return cls(
            np.asarray(values["mean"], dtype=np.float64),
            np.asarray(values["std"], dtype=np.float64),
            None if vision_min is None else np.asarray(vision_min, dtype=np.float64),
            None if vision_max is None else np.asarray(vision_max, dtype=np.float64),
            float(values.get("eps", NORMALIZATION_EPS)),
        )


__all__ = [
    "DatasetSplit",
    "IndexRange",
    "NORMALIZATION_EPS",
    "NormalizationStats",
    "SPLIT_NAMES",
    "WEATHER2K_BOUNDARIES",
]
