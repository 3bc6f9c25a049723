"""Seeded desk-scale datasets written in the same formats as the real sources."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Final

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from ..config import sub_seed
from ..errors import ConfigurationError
from .numerical import NumericalSchema, StationSeries, write_station_csv
from .regions import BoundingBox
from .satellite import COUNT_MAX, COUNT_MIN, CalibrationTable, GridSpec, InfraredBand, encode_tile
from .store import DatasetInfo, DatasetLayout, IngestSummary, ingest_dataset

logger = logging.getLogger(__name__)

HOURS_PER_DAY: Final[int] = 24
HOURS_PER_YEAR: Final[int] = 24 * 365
# Linear count -> kelvin calibration of the synthetic sensor.
KELVIN_AT_MIN_COUNT: Final[float] = 340.0
KELVIN_PER_COUNT: Final[float] = 0.04
SYNTHETIC_NORTH: Final[float] = 40.0
SYNTHETIC_WEST: Final[float] = 110.0


@dataclass(slots=True, frozen=True, kw_only=True)
class SyntheticSpec:
    nodes: int = 8
    steps: int = 500
    channels: int = 5
    height: int = 16
    width: int = 16
    bands: int = 2
    start: str = "2021-01-01T00:00"
    noise: float = 0.3

    def __post_init__(self) -> None:
        for name in ("nodes", "steps", "height", "width"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 <= self.bands <= len(InfraredBand):
            raise ConfigurationError(f"bands must lie in 0..{len(InfraredBand)}, got {self.bands}")
        NumericalSchema.synthetic(self.channels)

    @property
    def band_list(self) -> tuple[InfraredBand, ...]:
        # Split-window bands first.
        first = (InfraredBand.B13, InfraredBand.B14)
        order = first + tuple(band for band in InfraredBand if band not in first)
        return order[: self.bands]

    @property
    def grid(self) -> GridSpec:
        return GridSpec(SYNTHETIC_NORTH, SYNTHETIC_WEST, 0.02, 2 * max(self.height, self.width))

    @property
    def vision_bbox(self) -> BoundingBox:
        grid = self.grid
        return BoundingBox(
            grid.north - 2 * self.height * grid.resolution,
            grid.north,
            grid.west,
            grid.west + 2 * self.width * grid.resolution,
        )


SYNTHETIC_PRESETS: Final[dict[str, SyntheticSpec]] = {
    "synthetic-micro": SyntheticSpec(),
    "synthetic-tiny": SyntheticSpec(nodes=3, steps=72, channels=4, height=4, width=4, bands=1),
}


@dataclass(slots=True, frozen=True)
class SyntheticData:
    series: StationSeries
    counts: NDArray[np.uint16]
    calibration: CalibrationTable
    bands: tuple[InfraredBand, ...]


def synthetic_calibration() -> CalibrationTable:
    counts = np.unique(np.r_[np.arange(COUNT_MIN, COUNT_MAX, 64), COUNT_MAX]).astype(np.float64)
    return CalibrationTable(counts, KELVIN_AT_MIN_COUNT - KELVIN_PER_COUNT * (counts - COUNT_MIN))


def _kelvin_to_counts(kelvin: NDArray[np.float64]) -> NDArray[np.uint16]:
    counts = np.rint((KELVIN_AT_MIN_COUNT - kelvin) / KELVIN_PER_COUNT) + COUNT_MIN
    return np.clip(counts, COUNT_MIN, COUNT_MAX).astype(np.uint16)


def _stations(spec: SyntheticSpec, rng: np.random.Generator) -> NDArray[np.float64]:
    bbox = spec.vision_bbox
    latitude = rng.uniform(bbox.south, bbox.north, spec.nodes)
    longitude = rng.uniform(bbox.west, bbox.east, spec.nodes)
    altitude = rng.uniform(0.0, 1500.0, spec.nodes)
    return np.stack([latitude, longitude, altitude], axis=-1)


def _factors(spec: SyntheticSpec, statics: NDArray[np.float64], rng: np.random.Generator) -> NDArray[np.float64]:
    """(T, N, factors): diurnal and seasonal cycles, station offsets, shared weather and noise."""
    schema = NumericalSchema.synthetic(spec.channels)
    hours = np.arange(spec.steps, dtype=np.float64)[:, None]
    diurnal = np.sin(2 * np.pi * (hours - 9.0) / HOURS_PER_DAY)
    seasonal = np.sin(2 * np.pi * hours / HOURS_PER_YEAR)

    # Regional weather: an AR(1) anomaly shared by every station.
    shocks = rng.normal(0.0, spec.noise, spec.steps)
    weather = np.zeros(spec.steps)
    for step in range(1, spec.steps):
        weather[step] = 0.95 * weather[step - 1] + shocks[step]
    weather = weather[:, None]

    altitude = statics[:, 2][None, :]
    temperature = (
        12.0
        + 8.0 * diurnal
        + 6.0 * seasonal
        - 0.0065 * altitude
        + rng.normal(0.0, 1.0, spec.nodes)[None, :]
        + weather
        + rng.normal(0.0, spec.noise, (spec.steps, spec.nodes))
    )
    columns = {"air_temperature": temperature}
    columns["relative_humidity"] = np.clip(
        70.0 - 2.0 * (temperature - temperature.mean()) + rng.normal(0.0, 2.0 * spec.noise, temperature.shape),
        5.0,
        100.0,
    )
    columns["horizontal_visibility_1min"] = np.clip(
        15000.0 + 4000.0 * diurnal - 300.0 * weather + rng.normal(0.0, 200.0 * spec.noise, temperature.shape),
        100.0,
        None,
    )
    for name in schema.factors:
        if name in columns:
            continue
        amplitude, phase, level = rng.uniform(1.0, 5.0), rng.uniform(0.0, 2 * np.pi), rng.uniform(0.0, 100.0)
        cycle = np.sin(2 * np.pi * hours / HOURS_PER_DAY + phase)
        offsets = rng.normal(0.0, 1.0, spec.nodes)[None, :]
        columns[name] = level + amplitude * cycle + offsets + rng.normal(0.0, spec.noise, temperature.shape)
    return np.stack([columns[name] for name in schema.factors], axis=-1)


def _tiles(
    spec: SyntheticSpec,
    temperature: NDArray[np.float64],
    rng: np.random.Generator,
) -> NDArray[np.uint16]:
    """(T, C_s, P, P) counts whose brightness temperature tracks the station-mean temperature."""
    pixels = spec.grid.pixels
    rows, cols = np.meshgrid(np.linspace(-1.0, 1.0, pixels), np.linspace(-1.0, 1.0, pixels), indexing="ij")
    gradient = 4.0 * rows - 2.0 * cols
    regional = temperature.mean(axis=1)[:, None, None]
    counts = np.empty((spec.steps, spec.bands, pixels, pixels), dtype=np.uint16)
    for index in range(spec.bands):
        kelvin = (
            260.0
            + 1.5 * regional
            + gradient
            - 3.0 * index
            + rng.normal(0.0, 0.5 * spec.noise, (spec.steps, pixels, pixels))
        )
        counts[:, index] = _kelvin_to_counts(kelvin)
    return counts


def generate_synthetic(spec: SyntheticSpec, seed: int) -> SyntheticData:
    """Deterministic in ``seed``: station series, raw satellite counts and the calibration table."""
    rng = np.random.default_rng(sub_seed(seed, "synthetic"))
    statics = _stations(spec, rng)
    factors = _factors(spec, statics, rng)
    values = np.concatenate([factors, np.broadcast_to(statics, (spec.steps, *statics.shape))], axis=-1)
    series = StationSeries(
        values,
        pd.date_range(spec.start, periods=spec.steps, freq="h"),
        tuple(f"S{index:03d}" for index in range(spec.nodes)),
        NumericalSchema.synthetic(spec.channels),
    )
    counts = _tiles(spec, factors[..., 0], rng)
    return SyntheticData(series, counts, synthetic_calibration(), spec.band_list)


def synthesize_dataset(root: Path, spec: SyntheticSpec, seed: int) -> IngestSummary:
    """Write a synthetic dataset under ``root`` in the real raw formats, then ingest it."""
    data = generate_synthetic(spec, seed)
    layout = DatasetLayout(root)
    root.mkdir(parents=True, exist_ok=True)
    info = DatasetInfo(
        region="synthetic",
        bands=data.bands,
        grid=spec.grid,
        vision_bbox=spec.vision_bbox if data.bands else None,
        split_dates=None,
    )
    info.write(layout.info_path)
    write_station_csv(data.series, layout.numerical_csv)

    layout.raw_dir.mkdir(parents=True, exist_ok=True)
    for index, band in enumerate(data.bands):
        path = layout.calibration_path(band)
        path.parent.mkdir(parents=True, exist_ok=True)
        data.calibration.to_file(path)
        for step, stamp in enumerate(data.series.timestamps):
            # Alternate compressed and raw payloads so both decode paths see real files.
            compressed = step % 2 == 0
            payload = encode_tile(data.counts[step, index], compress=compressed)
            layout.tile_path(stamp, band, compressed=compressed).write_bytes(payload)
    logger.info("Synthesized %d stations x %d hours under %s", spec.nodes, spec.steps, root)
    return ingest_dataset(root, info)


__all__ = [
    "SYNTHETIC_PRESETS",
    "SyntheticData",
    "SyntheticSpec",
    "generate_synthetic",
    "synthesize_dataset",
    "synthetic_calibration",
]
