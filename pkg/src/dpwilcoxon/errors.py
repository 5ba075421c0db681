"""Exception types raised by the package."""


class DPWilcoxonError(Exception):
    """Base class for all package errors."""


class ValidationError(DPWilcoxonError, ValueError):
    """Input data failed validation (non-finite value, malformed row, ...)."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class EmptyInputError(ValidationError):
    """An operation received no rows / no values."""


class ParameterError(DPWilcoxonError, ValueError):
    """A numeric parameter is outside its valid range."""


class ResourceError(DPWilcoxonError, RuntimeError):
    """A request would exceed a configured resource cap."""
