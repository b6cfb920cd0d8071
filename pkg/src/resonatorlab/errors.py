"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: data/schema problems exit with 2,
failed optimizations with 3 and physical-domain violations with 4.
"""


class ResonatorLabError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ResonatorLabError):
    """Input data violates a structural requirement (ordering, grids, ...)."""


class SchemaError(DataError):
    """A file does not match the expected column schema."""


class InsufficientDataError(DataError):
    """Not enough samples to perform the requested operation."""


class DegenerateGeometryError(DataError):
    """Geometric fit input is degenerate (e.g. collinear circle-fit points)."""


class ConvergenceError(ResonatorLabError):
    """An iterative fit failed to converge.

    ``last_params`` carries the final iterate so callers can inspect where
    the optimizer stalled.
    """

    def __init__(self, message, last_params=None):
        super().__init__(message)
        self.last_params = last_params


class DomainError(ResonatorLabError):
    """Arguments are outside the physical domain of validity of a formula."""
