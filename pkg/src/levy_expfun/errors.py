"""Exception types raised by the numerics."""


class LevyExpfunError(Exception):
    """Base class for all package errors."""


class DomainError(LevyExpfunError, ValueError):
    """Argument outside the region where the quantity is finite or defined."""


class GridTooNarrow(LevyExpfunError):
    """A grid captured less probability mass than required."""


class AliasingError(LevyExpfunError):
    """An FFT window was too small for the law being inverted."""


class QuadratureError(LevyExpfunError):
    """A quadrature failed its convergence test."""


class DivergentIntegral(LevyExpfunError):
    """An integral that was asked for is infinite."""


class NonConvergence(LevyExpfunError):
    """An extrapolated limit did not settle within tolerance."""


class CriterionViolated(LevyExpfunError):
    """The integrability criterion needed for a q = 0 derivative fails."""


class TransienceRequired(LevyExpfunError):
    """The operation needs a process drifting to minus infinity."""


class GridMismatch(LevyExpfunError):
    """Two grid measures do not live on compatible grids."""


class AssumptionUnmet(LevyExpfunError):
    """A structural assumption (such as a bounded density) does not hold."""


class ContourTruncationError(LevyExpfunError):
    """The truncated tail of a contour integral is too large."""


class UnsupportedSubordinator(LevyExpfunError):
    """The subordinator cannot be simulated exactly."""


class DegenerateWeights(LevyExpfunError):
    """Importance weights collapsed onto a handful of samples."""


class DivergentTail(LevyExpfunError):
    """A repeated tail integral does not converge."""


class NotRegularlyVarying(LevyExpfunError):
    """The model has no regularly varying positive tail."""
