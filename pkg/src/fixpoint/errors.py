"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`FixpointError`.  The CLI maps the three families below to distinct
exit codes.
"""


class FixpointError(Exception):
    """Base class for package errors."""


class InvalidInputError(FixpointError, ValueError):
    """Malformed numeric input (non-finite entries, dimension mismatch, ...)."""


class WeightValidationError(InvalidInputError):
    """Convex weights that leave the simplex or the allowed band."""


class DomainError(InvalidInputError):
    """A point lies outside the domain of a mapping."""


class DivisionGuardError(InvalidInputError):
    """A ratio with a zero denominator was requested."""


class ConfigurationError(FixpointError, ValueError):
    """Inconsistent configuration; `path` names the offending field when known."""

    def __init__(self, message, path=None):
        self.path = path
        self.message = message
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class NumericRangeError(FixpointError, ArithmeticError):
    """Floating-point overflow or a computation beyond the supported range."""
