"""Exception types shared across the package."""


class GradMatchError(Exception):
    """Base class for all errors raised by this package."""


class InvalidKnotsError(GradMatchError):
    """Knot sequence is unsorted, duplicated, or falls outside its interval."""


class OutOfDomainError(GradMatchError):
    """Evaluation point lies outside the basis interval."""


class DerivativeOrderError(GradMatchError):
    """Requested derivative order is >= the spline order."""


class EmptyInputError(GradMatchError):
    """An operation received an empty grid or data set."""


class TooFewObservationsError(GradMatchError):
    """Sample size is below the minimum the knot heuristics support."""


class DegreesOfFreedomError(GradMatchError):
    """Effective parameter count of a knot subset reaches the sample size."""


class InvalidMatrixError(GradMatchError):
    """Matrix input contains non-finite entries."""


class BlowupError(GradMatchError):
    """Trajectory norm exceeded the blow-up bound in finite time."""

    def __init__(self, message, escape_time=None):
        super().__init__(message)
        self.escape_time = escape_time


class IdentifiabilityError(GradMatchError):
    """Estimation problem is rank deficient along some parameter directions.

    ``directions`` holds the offending unit vectors in free-parameter space,
    one per row, when the caller could compute them.
    """

    def __init__(self, message, directions=None):
        super().__init__(message)
        self.directions = directions


class IdentifiabilityWarning(UserWarning):
    """Criterion Hessian is numerically singular at the evaluation point."""


class DegenerateSampleError(GradMatchError):
    """Sample has zero variance, so a studentized statistic is undefined."""


class ConfigError(GradMatchError):
    """Configuration document failed validation."""


class ExperimentError(GradMatchError):
    """Too many Monte Carlo replications failed."""
