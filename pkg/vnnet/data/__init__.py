"""Ingestion of station and satellite data into windowed, normalized model inputs."""

from .numerical import (
    FORWARD_FILL_LIMIT,
    NumericalSchema,
    StationSeries,
    read_station_csv,
    read_station_npy,
    write_station_csv,
    write_station_npy,
)
from .regions import REGIONS, BoundingBox, Region, get_region
from .satellite import (
    CalibrationTable,
    GridSpec,
    InfraredBand,
    SatelliteTile,
    build_vision_window,
    decode_tile,
    encode_tile,
    mean_pool,
    parse_satellite_tile,
)
from .splits import WEATHER2K_BOUNDARIES, DatasetSplit, NormalizationStats
from .store import DatasetInfo, DatasetLayout, IngestSummary, ingest_dataset, prepare_data
from .synthetic import SYNTHETIC_PRESETS, SyntheticSpec, generate_synthetic, synthesize_dataset
from .windows import VisionFrames, WindowDataset, WindowedDataset, count_windows, load_numerical_dataset

__all__ = [
    "BoundingBox",
    "CalibrationTable",
    "DatasetInfo",
    "DatasetLayout",
    "DatasetSplit",
    "FORWARD_FILL_LIMIT",
    "GridSpec",
    "InfraredBand",
    "IngestSummary",
    "NormalizationStats",
    "NumericalSchema",
    "REGIONS",
    "Region",
    "SYNTHETIC_PRESETS",
    "SatelliteTile",
    "StationSeries",
    "SyntheticSpec",
    "VisionFrames",
    "WEATHER2K_BOUNDARIES",
    "WindowDataset",
    "WindowedDataset",
    "build_vision_window",
    "count_windows",
    "decode_tile",
    "encode_tile",
    "generate_synthetic",
    "get_region",
    "ingest_dataset",
    "load_numerical_dataset",
    "mean_pool",
    "parse_satellite_tile",
    "prepare_data",
    "read_station_csv",
    "read_station_npy",
    "synthesize_dataset",
    "write_station_csv",
    "write_station_npy",
]
