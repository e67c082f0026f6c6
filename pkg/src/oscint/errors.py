"""Exception types shared across the toolkit."""

__all__ = [
    "DimensionMismatchError",
    "GridCoverageError",
    "DegenerateLevelError",
    "MollifierResolutionError",
    "ConfigError",
    "NumericalCheckError",
]


class DimensionMismatchError(ValueError):
    """Operands live on different groups or grids."""


class GridCoverageError(ValueError):
    """A grid is too small to contain the data a computation needs."""


class DegenerateLevelError(ValueError):
    """Stopping-time level lies below the root-cell average.

    Carries ``threshold``, the smallest level for which the
    decomposition is non-degenerate.
    """

    def __init__(self, message, threshold):
        super().__init__(message)
        self.threshold = float(threshold)


class MollifierResolutionError(ValueError):
    """A mollifier radius fell below the grid spacing."""


class ConfigError(ValueError):
    """Bad experiment configuration; carries a location hint."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class NumericalCheckError(RuntimeError):
    """A runtime numerical invariant failed."""
