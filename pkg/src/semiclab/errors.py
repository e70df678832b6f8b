"""Exception types raised across the package."""


class LabError(Exception):
    """Base class for all package errors."""


class InvalidGridError(LabError, ValueError):
    pass


class DecompositionError(LabError, RuntimeError):
    pass


class InvalidWindowError(LabError, ValueError):
    pass


class DimensionError(LabError, ValueError):
    pass


class DomainError(LabError, ValueError):
    pass


class SingularFrequencyError(LabError, ValueError):
    pass


class CutoffTooSmallError(LabError, ValueError):
    pass


class RangeError(LabError, ValueError):
    pass


class NotRegularError(LabError, TypeError):
    pass


class InvalidDensityError(LabError, ValueError):
    pass


class BracketError(LabError, RuntimeError):
    pass


class SCFDivergedError(LabError, RuntimeError):
    """Raised when the self-consistent iteration fails to converge.

    The residual history is kept on the exception so callers can inspect
    how far the iteration got.
    """

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class SizeError(LabError, ValueError):
    pass


class IllFormedTensorError(LabError, ValueError):
    pass


class EigensolverError(LabError, RuntimeError):
    pass


class AliasingError(LabError, ValueError):
    pass


class FitDomainError(LabError, ValueError):
    pass


class ConfigError(LabError, ValueError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
