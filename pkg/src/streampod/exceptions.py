"""Exception hierarchy for streampod."""

import numpy as np


class StreamPODError(Exception):
    """Base class for all errors raised by streampod."""


class DimensionMismatchError(StreamPODError, ValueError):
    pass


class NotPositiveDefiniteError(StreamPODError, np.linalg.LinAlgError):
    pass


class RankDeficiencyError(StreamPODError, np.linalg.LinAlgError):
    pass


class ZeroDataError(StreamPODError, ValueError):
    pass


class VariantMismatchError(StreamPODError, ValueError):
    pass


class BreakpointError(StreamPODError, ValueError):
    """Raised when a piecewise-constant function is evaluated off its open intervals."""


class IntegrityError(StreamPODError, RuntimeError):
    """Raised when a computed basis fails its orthonormality check."""


class RightVectorsNotTrackedError(StreamPODError, RuntimeError):
    pass


class GridError(StreamPODError, ValueError):
    pass


class DataFormatError(StreamPODError, ValueError):
    """Raised when an input file cannot be parsed."""
