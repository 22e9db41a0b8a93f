"""Exception hierarchy shared by every flatlab module."""


class FlatlabError(Exception):
    """Base class for all flatlab errors."""


class NotPositiveDefinite(FlatlabError, ValueError):
    pass


class ShapeMismatch(FlatlabError, ValueError):
    pass


class OutOfDomain(FlatlabError, ValueError):
    pass


class GaugeViolation(FlatlabError, ValueError):
    """Raised when a harmonic-gauge formula is used off-gauge."""


class DimensionTooSmall(FlatlabError, ValueError):
    pass


class DimensionMismatch(FlatlabError, ValueError):
    pass


class LineSearchFailed(FlatlabError, RuntimeError):
    pass


class NumericalFailure(FlatlabError, RuntimeError):
    pass


class ConfigInvalid(FlatlabError, ValueError):
    pass


class IoFailure(FlatlabError, OSError):
    """A report or table could not be written."""
