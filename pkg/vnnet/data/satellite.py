"""Gridded infrared satellite tiles: decoding, calibration and regional cropping."""

from __future__ import annotations

import bz2
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Final, Self

import numpy as np
from numpy.typing import NDArray

from ..errors import ConfigurationError, CorruptTileError, DecompressionError, GridRangeError, TileLengthError
from .regions import BoundingBox

logger = logging.getLogger(__name__)

COUNT_MIN: Final[int] = 1
COUNT_MAX: Final[int] = 4096
BZ2_MAGIC: Final[bytes] = b"BZh"
FULL_DISK_PIXELS: Final[int] = 6000

type Frame = NDArray[np.float32]


class InfraredBand(Enum):
    """Thermal infrared AHI bands with their gridded-product names and wavelengths (um)."""

    B11 = (11, "tir09", 8.6)
    B12 = (12, "tir10", 9.6)
    B13 = (13, "tir01", 10.4)
    B14 = (14, "tir02", 11.2)
    B15 = (15, "tir03", 12.4)
    B16 = (16, "tir04", 13.3)

    def __init__(self, number: int, gridded_name: str, wavelength: float) -> None:
        self.number = number
        self.gridded_name = gridded_name
        self.wavelength = wavelength

    @classmethod
    def from_name(cls, name: str) -> InfraredBand:
        lowered = name.casefold()
        for band in cls:
            if lowered in (band.name.casefold(), band.gridded_name):
                return band
        raise ConfigurationError(f"unknown infrared band {name!r}")


@dataclass(slots=True, frozen=True)
class GridSpec:
    """Regular lat/lon grid anchored at its north-west corner."""

    north: float = 60.0
    west: float = 85.0
    resolution: float = 0.02
    pixels: int = FULL_DISK_PIXELS

    def window(self, bbox: BoundingBox) -> tuple[slice, slice]:
        """Row and column slices of the pixels covering ``bbox``."""
        top = round((self.north - bbox.north) / self.resolution)
        left = round((bbox.west - self.west) / self.resolution)
        height = round((bbox.north - bbox.south) / self.resolution)
        width = round((bbox.east - bbox.west) / self.resolution)
        if top < 0 or left < 0 or top + height > self.pixels or left + width > self.pixels or height < 1 or width < 1:
            raise GridRangeError(f"bounding box {bbox} lies outside the {self.pixels}-pixel grid")
        return slice(top, top + height), slice(left, left + width)


@dataclass(slots=True, frozen=True)
class CalibrationTable:
    """Monotone count -> brightness temperature (K) map, interpolated between listed rows."""

    counts: NDArray[np.float64]
    kelvin: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.counts.ndim != 1 or self.counts.shape != self.kelvin.shape or self.counts.size < 2:
            raise ConfigurationError("calibration table needs two equally long columns with at least two rows")
        if np.any(np.diff(self.counts) <= 0):
            raise ConfigurationError("calibration counts must be strictly ascending")
        if self.counts[0] > COUNT_MIN or self.counts[-1] < COUNT_MAX:
            raise ConfigurationError(f"calibration table must cover counts {COUNT_MIN}-{COUNT_MAX}")
        if not np.all(np.isfinite(self.kelvin)):
            raise ConfigurationError("calibration temperatures must be finite")
        steps = np.diff(self.kelvin)
        if not (np.all(steps >= 0) or np.all(steps <= 0)):
            raise ConfigurationError("calibration temperatures must be monotone in the count")

    @classmethod
    def from_file(cls, path: Path) -> Self:
        table = np.loadtxt(path, dtype=np.float64, ndmin=2)
        if table.shape[1] != 2:
            raise ConfigurationError(f"{path}: expected two columns (count, Tbb), got {table.shape[1]}")
        return cls(np.ascontiguousarray(table[:, 0]), np.ascontiguousarray(table[:, 1]))

    @classmethod
    def identity(cls) -> Self:
        counts = np.array([COUNT_MIN, COUNT_MAX], dtype=np.float64)
        return cls(counts, counts.copy())

    def to_file(self, path: Path) -> None:
        np.savetxt(path, np.column_stack([self.counts, self.kelvin]), fmt=["%d", "%.4f"])

    def lookup(self, counts: NDArray[np.integer]) -> NDArray[np.float64]:
        return np.interp(counts.astype(np.float64), self.counts, self.kelvin)


@dataclass(slots=True, frozen=True)
class SatelliteTile:
    counts: NDArray[np.uint16]
    band: InfraredBand

    def __post_init__(self) -> None:
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise TileLengthError(f"tile must be a square grid, got shape {self.counts.shape}")
        low, high = int(self.counts.min()), int(self.counts.max())
        if low < COUNT_MIN or high > COUNT_MAX:
            raise CorruptTileError(f"{self.band.name} counts span {low}-{high}, outside {COUNT_MIN}-{COUNT_MAX}")

    def calibrate(self, calibration: CalibrationTable) -> NDArray[np.float64]:
        return calibration.lookup(self.counts)


def _inflate(raw: bytes) -> bytes:
    if not raw.startswith(BZ2_MAGIC):
        return raw
    try:
        return bz2.decompress(raw)
    except (OSError, ValueError, EOFError) as exc:
        raise DecompressionError(f"bad bz2 stream: {exc}") from exc


def decode_tile(raw: bytes, band: InfraredBand, size: int | None = None) -> SatelliteTile:
    """Decode a (possibly bz2-compressed) big-endian uint16 P x P payload.

    The decoded array is byte-swapped to native order so it can be stored as-is.
    """
    payload = _inflate(raw)
    words, remainder = divmod(len(payload), 2)
    side = size if size is not None else math.isqrt(words)
    if remainder or side < 1 or words != side * side:
        expected = f"{2 * side * side} bytes" if size is not None else "2*P^2 bytes"
        raise TileLengthError(f"payload of {len(payload)} bytes is not {expected}")
    counts = np.frombuffer(payload, dtype=">u2").reshape(side, side).astype(np.uint16)
    return SatelliteTile(counts, band)


def encode_tile(counts: NDArray[np.integer], *, compress: bool = False) -> bytes:
    payload = np.ascontiguousarray(counts, dtype=">u2").tobytes()
    return bz2.compress(payload) if compress else payload


def parse_satellite_tile(
    raw: bytes,
    band: InfraredBand,
    calibration: CalibrationTable,
    size: int | None = None,
) -> NDArray[np.float64]:
    """Brightness temperature grid (K) of one raw tile."""
    return decode_tile(raw, band, size).calibrate(calibration)


def read_tile(path: Path, band: InfraredBand, calibration: CalibrationTable) -> NDArray[np.float64]:
    return parse_satellite_tile(path.read_bytes(), band, calibration)


def mean_pool(grid: NDArray[np.floating], factor: int) -> NDArray[np.float64]:
    """Average non-overlapping factor x factor blocks of a 2-D grid."""
    height, width = grid.shape
    if factor < 1 or height % factor or width % factor:
        raise ConfigurationError(f"{height}x{width} crop is not divisible by pooling factor {factor}")
    return grid.reshape(height // factor, factor, width // factor, factor).mean(axis=(1, 3))


def build_vision_window(
    hours: Sequence[Mapping[InfraredBand, NDArray[np.floating]]],
    bbox: BoundingBox,
    *,
    grid: GridSpec | None = None,
    factor: int = 2,
    bands: Sequence[InfraredBand] = tuple(InfraredBand),
) -> Frame:
    """Crop each hour's calibrated band grids to ``bbox``, mean-pool and stack to (T, H, W, C_s)."""
    grid = grid or GridSpec()
    rows, cols = grid.window(bbox)
    frames = []
    for hour in hours:
        missing = [band.name for band in bands if band not in hour]
        if missing:
            raise ConfigurationError(f"hour is missing bands {missing}")
        channels = []
        for band in bands:
            tbb = hour[band]
            if tbb.shape != (grid.pixels, grid.pixels):
                raise GridRangeError(f"{band.name} grid {tbb.shape} does not match a {grid.pixels}-pixel grid")
            channels.append(mean_pool(np.asarray(tbb, dtype=np.float64)[rows, cols], factor))
        frames.append(np.stack(channels, axis=-1))
    return np.stack(frames).astype(np.float32)


def save_vision_frame(path: Path, frame: NDArray[np.floating]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, np.asarray(frame, dtype=np.float32))


__all__ = [
    "BZ2_MAGIC",
    "COUNT_MAX",
    "COUNT_MIN",
    "CalibrationTable",
    "Frame",
    "GridSpec",
    "InfraredBand",
    "SatelliteTile",
    "build_vision_window",
    "decode_tile",
    "encode_tile",
    "mean_pool",
    "parse_satellite_tile",
    "read_tile",
    "save_vision_frame",
]
