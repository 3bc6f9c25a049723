"""Variable and band catalogues for the station and satellite sources."""

from __future__ import annotations

from typing import Final

FACTOR_NAMES: Final[tuple[str, ...]] = (
    "air_pressure",
    "water_vapor_pressure",
    "air_temperature",
    "max_temperature",
    "min_temperature",
    "dewpoint_temperature",
    "land_surface_temperature",
    "relative_humidity",
    "wind_speed",
    "max_wind_speed",
    "wind_direction",
    "max_wind_direction",
    "vertical_visibility",
    "horizontal_visibility_1min",
    "horizontal_visibility_10min",
    "precipitation_1h",
    "precipitation_3h",
    "precipitation_6h",
    "precipitation_12h",
    "precipitation_24h",
)

FACTOR_UNITS: Final[dict[str, str]] = {
    "air_pressure": "hPa",
    "water_vapor_pressure": "hPa",
    "air_temperature": "degC",
    "max_temperature": "degC",
    "min_temperature": "degC",
    "dewpoint_temperature": "degC",
    "land_surface_temperature": "degC",
    "relative_humidity": "%",
    "wind_speed": "m/s",
    "max_wind_speed": "m/s",
    "wind_direction": "deg",
    "max_wind_direction": "deg",
    "vertical_visibility": "m",
    "horizontal_visibility_1min": "m",
    "horizontal_visibility_10min": "m",
    "precipitation_1h": "mm",
    "precipitation_3h": "mm",
    "precipitation_6h": "mm",
    "precipitation_12h": "mm",
    "precipitation_24h": "mm",
}

STATIC_NAMES: Final[tuple[str, ...]] = ("latitude", "longitude", "altitude")

# Short names accepted on the command line for the studied forecast targets.
TARGET_FACTORS: Final[dict[str, str]] = {
    "temperature": "air_temperature",
    "relative_humidity": "relative_humidity",
    "visibility": "horizontal_visibility_1min",
}

# Factor order used when a synthetic dataset carries fewer than 20 factors.
SYNTHETIC_FACTOR_ORDER: Final[tuple[str, ...]] = (
    "air_temperature",
    "relative_humidity",
    "horizontal_visibility_1min",
    *(name for name in FACTOR_NAMES if name not in TARGET_FACTORS.values()),
)


__all__ = [
    "FACTOR_NAMES",
    "FACTOR_UNITS",
    "STATIC_NAMES",
    "SYNTHETIC_FACTOR_ORDER",
    "TARGET_FACTORS",
]
