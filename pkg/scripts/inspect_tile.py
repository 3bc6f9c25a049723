"""Decode one satellite tile and print count and brightness-temperature statistics."""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from vnnet.data import CalibrationTable, InfraredBand, decode_tile
from vnnet.errors import VNNetError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Inspect a gridded infrared tile (raw or bz2-compressed, big-endian uint16).",
    )
    parser.add_argument("tile", type=Path, help="Tile file to decode.")
    parser.add_argument(
        "--band",
        default="B13",
        help="Band name, e.g. B13 or tir01 (default: %(default)s).",
    )
    parser.add_argument(
        "--calibration",
        type=Path,
        help="Two-column count/Tbb table; counts are reported as kelvin without it.",
    )
    parser.add_argument(
        "--size",
        type=int,
        help="Declared grid side P; inferred from the payload length when omitted.",
    )
    parser.add_argument(
        "--json",
        action="store_true",
        help="Print the statistics as JSON.",
    )
    return parser


@dataclass(slots=True, frozen=True)
class TileStats:
    band: str
    side: int
    count_min: int
    count_max: int
    tbb_min: float
    tbb_mean: float
    tbb_max: float


def inspect(path: Path, band: InfraredBand, calibration: CalibrationTable, size: int | None) -> TileStats:
    tile = decode_tile(path.read_bytes(), band, size)
    tbb = tile.calibrate(calibration)
    return TileStats(
        band=band.name,
        side=tile.counts.shape[0],
        count_min=int(tile.counts.min()),
        count_max=int(tile.counts.max()),
        tbb_min=float(tbb.min()),
        tbb_mean=float(np.mean(tbb)),
        tbb_max=float(tbb.max()),
    )


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    try:
        band = InfraredBand.from_name(args.band)
        calibration = (
            CalibrationTable.from_file(args.calibration) if args.calibration else CalibrationTable.identity()
        )
        stats = inspect(args.tile, band, calibration, args.size)
    except (VNNetError, OSError) as exc:
        parser.error(str(exc))

    if args.json:
        print(json.dumps(asdict(stats), indent=2))
    else:
        print(
            f"{stats.band} {stats.side}x{stats.side}: counts {stats.count_min}-{stats.count_max}, "
            f"Tbb {stats.tbb_min:.2f}/{stats.tbb_mean:.2f}/{stats.tbb_max:.2f} K (min/mean/max)"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
