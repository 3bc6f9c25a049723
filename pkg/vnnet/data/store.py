"""On-disk dataset layout, ingestion of raw files into model-ready arrays, and loading."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Final, Self

import pandas as pd

from ..config import TrainConfig, VisionBranch
from ..errors import ConfigurationError, IngestionError
from .numerical import StationSeries, read_station_csv, read_station_npy, write_station_npy
from .regions import BoundingBox, get_region
from .satellite import CalibrationTable, GridSpec, InfraredBand, build_vision_window, read_tile, save_vision_frame
from .splits import WEATHER2K_BOUNDARIES, DatasetSplit
from .windows import VisionFrames, WindowedDataset, load_numerical_dataset

logger = logging.getLogger(__name__)

DATASET_FILE: Final[str] = "dataset.json"
STAMP_FORMAT: Final[str] = "%Y%m%d%H%M"
TILE_SUFFIXES: Final[tuple[str, ...]] = (".geoss.bz2", ".geoss")


@dataclass(slots=True, frozen=True)
class DatasetLayout:
    """Where every file of one dataset directory lives."""

    root: Path

    @property
    def info_path(self) -> Path:
        return self.root / DATASET_FILE

    @property
    def numerical_csv(self) -> Path:
        return self.root / "numerical.csv"

    @property
    def numerical_npy(self) -> Path:
        return self.root / "processed" / "numerical.npy"

    @property
    def raw_dir(self) -> Path:
        return self.root / "raw"

    @property
    def vision_dir(self) -> Path:
        return self.root / "processed" / "vision"

    def calibration_path(self, band: InfraredBand) -> Path:
        return self.root / "calibration" / f"{band.gridded_name}.txt"

    def tile_path(self, stamp: pd.Timestamp, band: InfraredBand, *, compressed: bool = True) -> Path:
        """Tile timestamped at the top of ``stamp``'s hour."""
        suffix = TILE_SUFFIXES[0] if compressed else TILE_SUFFIXES[1]
        return self.raw_dir / f"{stamp:{STAMP_FORMAT}}.{band.gridded_name}{suffix}"

    def find_tile(self, stamp: pd.Timestamp, band: InfraredBand) -> Path | None:
        for compressed in (True, False):
            path = self.tile_path(stamp, band, compressed=compressed)
            if path.exists():
                return path
        return None

    def frame_path(self, stamp: pd.Timestamp) -> Path:
        return self.vision_dir / f"{stamp:{STAMP_FORMAT}}.npy"


@dataclass(slots=True, frozen=True)
class DatasetInfo:
    """Contents of ``dataset.json``: georeference, bands and split policy of one dataset."""

    region: str
    bands: tuple[InfraredBand, ...] = tuple(InfraredBand)
    grid: GridSpec = field(default_factory=GridSpec)
    vision_bbox: BoundingBox | None = None
    pool_factor: int = 2
    split_dates: tuple[str, ...] | None = WEATHER2K_BOUNDARIES
    split_fractions: tuple[float, ...] = (0.7, 0.1, 0.2)

    @classmethod
    def for_region(cls, name: str) -> Self:
        return cls(region=name, vision_bbox=get_region(name).vision)

    def split_for(self, series: StationSeries) -> DatasetSplit:
        if self.split_dates is not None:
            return DatasetSplit.from_dates(series.timestamps, self.split_dates)
        return DatasetSplit.chronological(series.length, self.split_fractions)

    def to_dict(self) -> dict[str, Any]:
        bbox = self.vision_bbox
        return {
            "region": self.region,
            "bands": [band.name for band in self.bands],
            "grid": {
                "north": self.grid.north,
                "west": self.grid.west,
                "resolution": self.grid.resolution,
                "pixels": self.grid.pixels,
            },
            "vision_bbox": None if bbox is None else [bbox.south, bbox.north, bbox.west, bbox.east],
            "pool_factor": self.pool_factor,
            "split_dates": None if self.split_dates is None else list(self.split_dates),
            "split_fractions": list(self.split_fractions),
        }

    @classmethod
    def from_dict(cls, values: dict[str, Any]) -> Self:
        try:
            bbox = values.get("vision_bbox")
            dates = values.get("split_dates")
            return cls(
                region=values["region"],
                bands=tuple(InfraredBand.from_name(name) for name in values["bands"]),
                grid=GridSpec(**values["grid"]),
                vision_bbox=None if bbox is None else BoundingBox(*bbox),
                pool_factor=int(values.get("pool_factor", 2)),
                split_dates=None if dates is None else tuple(dates),
                split_fractions=tuple(values.get("split_fractions", (0.7, 0.1, 0.2))),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed dataset description: {exc}") from exc

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def read(cls, path: Path) -> Self:
        if not path.exists():
            raise ConfigurationError(f"{path} not found; run `vnnet ingest` or `vnnet synth` first")
        return cls.from_dict(json.loads(path.read_text()))


@dataclass(slots=True, frozen=True)
class IngestSummary:
    stations: int
    hours: int
    frames: int
    skipped_hours: int


def ingest_dataset(root: Path, info: DatasetInfo | None = None) -> IngestSummary:
    """Convert ``numerical.csv`` and the raw tiles under ``root`` into processed NPY files."""
    layout = DatasetLayout(root)
    if info is None:
        info = DatasetInfo.read(layout.info_path)
    elif not layout.info_path.exists():
        info.write(layout.info_path)
    if not layout.numerical_csv.exists():
        raise IngestionError(f"{layout.numerical_csv} not found")

    series = read_station_csv(layout.numerical_csv)
    layout.numerical_npy.parent.mkdir(parents=True, exist_ok=True)
    write_station_npy(series, layout.numerical_npy)
    logger.info("Wrote %d hours x %d stations to %s", series.length, len(series.station_ids), layout.numerical_npy)

    if info.vision_bbox is None or not layout.raw_dir.is_dir():
        logger.info("No satellite tiles to ingest under %s", root)
        return IngestSummary(len(series.station_ids), series.length, 0, 0)

    calibrations: dict[InfraredBand, CalibrationTable] = {}
    for band in info.bands:
        path = layout.calibration_path(band)
        calibrations[band] = CalibrationTable.from_file(path) if path.exists() else CalibrationTable.identity()
        if not path.exists():
            logger.warning("No calibration table for %s; using counts as kelvin", band.name)

    frames = skipped = 0
    for stamp in series.timestamps:
        tiles = {band: layout.find_tile(stamp, band) for band in info.bands}
        missing = [band.name for band, path in tiles.items() if path is None]
        if missing:
            skipped += 1
            logger.debug("Skipping %s: missing bands %s", stamp, missing)
            continue
        hour = {band: read_tile(path, band, calibrations[band]) for band, path in tiles.items() if path is not None}
        bbox = info.vision_bbox
        window = build_vision_window([hour], bbox, grid=info.grid, factor=info.pool_factor, bands=info.bands)
        save_vision_frame(layout.frame_path(stamp), window[0])
        frames += 1
    if skipped:
        logger.warning("%d of %d hours have no complete tile set", skipped, series.length)
    return IngestSummary(len(series.station_ids), series.length, frames, skipped)


def prepare_data(root: Path, config: TrainConfig) -> WindowedDataset:
    """Load a processed dataset directory as windowed train/validation/test splits."""
    layout = DatasetLayout(root)
    info = DatasetInfo.read(layout.info_path)
    if not layout.numerical_npy.exists():
        logger.info("Processed arrays missing under %s; ingesting first", root)
        ingest_dataset(root, info)
    series = read_station_npy(layout.numerical_npy)

    vision = None
    if config.vision_branch is not VisionBranch.NONE:
        paths = [layout.frame_path(stamp) for stamp in series.timestamps]
        if all(path.exists() for path in paths):
            vision = VisionFrames(paths=paths)
        else:
            logger.warning("Satellite frames incomplete under %s; training without the vision branch", root)
    return load_numerical_dataset(
        series,
        info.split_for(series),
        config.history,
        config.horizon,
        target=config.target,
        vision=vision,
    )


__all__ = [
    "DATASET_FILE",
    "DatasetInfo",
    "DatasetLayout",
    "IngestSummary",
    "ingest_dataset",
    "prepare_data",
]
