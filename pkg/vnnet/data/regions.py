"""Study regions: station boxes and the wider satellite boxes around them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Final, Self

from ..errors import ConfigurationError

VISION_MARGIN_DEG: Final[float] = 0.7


@dataclass(slots=True, frozen=True)
class BoundingBox:
    south: float
    north: float
    west: float
    east: float

    def __post_init__(self) -> None:
        if self.south >= self.north or self.west >= self.east:
            raise ConfigurationError(f"degenerate bounding box {self}")

    def expand(self, margin: float) -> Self:
        return type(self)(self.south - margin, self.north + margin, self.west - margin, self.east + margin)

    def contains(self, latitude: float, longitude: float) -> bool:
        return self.south <= latitude <= self.north and self.west <= longitude <= self.east


@dataclass(slots=True, frozen=True)
class Region:
    name: str
    stations: BoundingBox
    station_count: int

    @property
    def vision(self) -> BoundingBox:
        return self.stations.expand(VISION_MARGIN_DEG)


REGIONS: Final[dict[str, Region]] = {
    "NE": Region("NE", BoundingBox(39.0, 44.0, 118.0, 123.0), 60),
    "SW": Region("SW", BoundingBox(27.0, 32.0, 101.0, 106.0), 96),
    "SE": Region("SE", BoundingBox(27.5, 32.5, 117.5, 122.5), 139),
}


def get_region(name: str) -> Region:
    try:
        return REGIONS[name]
    except KeyError:
        raise ConfigurationError(f"unknown region {name!r}; expected one of {sorted(REGIONS)}") from None


__all__ = ["BoundingBox", "REGIONS", "Region", "VISION_MARGIN_DEG", "get_region"]
