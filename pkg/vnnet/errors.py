"""Exception hierarchy shared by every vnnet subpackage."""

from __future__ import annotations


class VNNetError(Exception):
    """Base class for all errors raised by vnnet."""


class ConfigurationError(VNNetError, ValueError):
    """Shapes, sizes or settings that cannot work together."""


class InvalidTimestampError(VNNetError, ValueError):
    """Calendar index outside its lookup table."""


class NumericError(VNNetError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class NumericDivergenceError(NumericError):
    """A recurrent state became non-finite."""


class InvariantViolationError(VNNetError, ValueError):
    """An input breaks a structural invariant (e.g. non row-stochastic adjacency)."""


class EmptyWindowError(VNNetError, ValueError):
    """A numerical window without time steps."""


class EmptyVisionError(VNNetError, ValueError):
    """A vision feature map without spatial tokens."""


class IngestionError(VNNetError, OSError):
    """Raw input files that cannot be turned into model inputs."""


class CorruptTileError(IngestionError):
    """Satellite counts outside the valid 1-4096 range."""


class TileLengthError(IngestionError):
    """Satellite payload length inconsistent with the declared grid."""


class DecompressionError(IngestionError):
    """A bz2 stream that cannot be decompressed."""


class GridRangeError(IngestionError):
    """A bounding box that falls outside the satellite grid."""


class OrderingError(IngestionError):
    """Station timestamps that are not strictly increasing."""


class TrainingDivergedError(NumericError):
    """Training produced a non-finite loss."""


class UnsupportedModelError(VNNetError, TypeError):
    """A model whose output cannot be differentiated with respect to its input."""


class DegenerateAttributionError(VNNetError, ValueError):
    """Attributions that sum to zero and cannot be turned into percentages."""


class ComparisonError(VNNetError, ValueError):
    """Two reports that do not describe the same factors."""


class MissingInputError(ConfigurationError):
    """A required flag or input path was not supplied."""


__all__ = [
    "ComparisonError",
    "ConfigurationError",
    "CorruptTileError",
    "DecompressionError",
    "DegenerateAttributionError",
    "EmptyVisionError",
    "EmptyWindowError",
    "GridRangeError",
    "IngestionError",
    "InvalidTimestampError",
    "InvariantViolationError",
    "MissingInputError",
    "NumericDivergenceError",
    "NumericError",
    "OrderingError",
    "TileLengthError",
    "TrainingDivergedError",
    "UnsupportedModelError",
    "VNNetError",
]
