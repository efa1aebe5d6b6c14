"""
Custom exception classes for the spectral-transition laboratory.

Provides structured error handling with user-friendly messages and a fixed
mapping from error category to process exit code:

    2  usage (invalid parameters, configuration, unsupported combinations)
    3  data (too few levels, degenerate or malformed input, refused lookups)
    4  numeric failure (quadrature, singular systems, calibration)
"""

from __future__ import annotations

from typing import Any

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class SpectralLabError(Exception):
    """Base exception for all application errors."""

    exit_code: int = EXIT_NUMERIC

    def __init__(
        self,
        message: str,
        details: dict[str, Any] | None = None,
        user_message: str | None = None,
    ):
        super().__init__(message)
        self.message = message
        self.details = details or {}
        self.user_message = user_message or self._get_default_user_message()

    def _get_default_user_message(self) -> str:
        """Provide a user-friendly version of the error message."""
        return "An unexpected error occurred. Please check the run log."

    def __str__(self) -> str:
        return f"{self.__class__.__name__}: {self.message}"


# --------------------------------------------------------------------------
# Usage errors
# --------------------------------------------------------------------------


class ValidationError(SpectralLabError):
    """Raised when an input parameter violates its documented bound."""

    exit_code = EXIT_USAGE

    def __init__(
        self, field: str, message: str, value: Any = None, details: dict[str, Any] | None = None
    ):
        self.field = field
        self.value = value
        super().__init__(
            message=f"Validation failed for field '{field}': {message}",
            details=details or {"field": field, "value": value},
            user_message=f"Invalid {field.replace('_', ' ')}: {message}",
        )

    def _get_default_user_message(self) -> str:
        return f"Please check the value of {self.field.replace('_', ' ')} and try again."


class MultipleValidationError(SpectralLabError):
    """Raised when several parameters fail validation at once."""

    exit_code = EXIT_USAGE

    def __init__(self, errors: list[ValidationError]):
        self.validation_errors = errors
        messages = [f"{e.field}: {e.message}" for e in errors]
        super().__init__(
            message=f"Multiple validation errors: {'; '.join(messages)}",
            details={
                "errors": [
                    {"field": e.field, "message": e.message, "value": e.value} for e in errors
                ]
            },
            user_message="Please correct the following parameters and try again.",
        )


class ConfigurationError(SpectralLabError):
    """Raised when a configuration is internally inconsistent."""

    exit_code = EXIT_USAGE

    def __init__(
        self,
        message: str,
        config_key: str | None = None,
        details: dict[str, Any] | None = None,
    ):
        self.config_key = config_key
        super().__init__(
            message=message,
            details=details or {"config_key": config_key},
            user_message="Configuration error. Please check your settings.",
        )


class NotAvailableError(SpectralLabError):
    """Raised when a requested combination (e.g. ensemble and observable) is unsupported."""

    exit_code = EXIT_USAGE

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message,
            details=details,
            user_message="The requested statistic is not available for this ensemble.",
        )


# --------------------------------------------------------------------------
# Data errors
# --------------------------------------------------------------------------


class DataError(SpectralLabError):
    """Base class for problems with the supplied data."""

    exit_code = EXIT_DATA

    def _get_default_user_message(self) -> str:
        return "The input data cannot be analyzed. Please check the files."


class InsufficientDataError(DataError):
    """Raised when a sequence is too short for the requested estimator."""

    def __init__(
        self,
        message: str,
        required: int | float | None = None,
        available: int | float | None = None,
    ):
        self.required = required
        self.available = available
        super().__init__(
            message=message,
            details={"required": required, "available": available},
            user_message="Not enough levels or samples for this statistic.",
        )


class DegenerateInputError(DataError):
    """Raised on zero spacings or otherwise degenerate input sequences."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message=message, details=details)


class DegenerateFitError(DataError):
    """Raised when a fitted mean staircase is not monotone over the data range."""

    def __init__(self, message: str, degree: int | None = None):
        self.degree = degree
        super().__init__(message=message, details={"degree": degree})


class DataFormatError(DataError):
    """Raised when an input file cannot be parsed."""

    def __init__(self, message: str, file_path: str | None = None, line: int | None = None):
        self.file_path = file_path
        self.line = line
        location = f"{file_path}:{line}" if line is not None else f"{file_path}"
        super().__init__(
            message=f"{location}: {message}",
            details={"file_path": file_path, "line": line},
            user_message=f"Could not read {location}. Please check the file format.",
        )


class UndefinedCorrelationError(DataError):
    """Raised when a correlation coefficient has a zero-variance denominator."""

    def __init__(self, message: str):
        super().__init__(message=message)


class ContractViolationError(DataError):
    """Raised when an argument violates a structural contract (e.g. Hermiticity)."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message=message, details=details)


class ExtrapolationRefusedError(DataError):
    """Raised when a lookup would require extrapolating beyond a precomputed table."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message,
            details=details,
            user_message="The value lies outside the precomputed calibration table.",
        )


class ExportError(DataError):
    """Raised when writing results fails."""

    def __init__(
        self,
        message: str,
        export_format: str | None = None,
        details: dict[str, Any] | None = None,
    ):
        self.export_format = export_format
        super().__init__(
            message=message,
            details=details or {"export_format": export_format},
            user_message="Export failed. Please check the output directory.",
        )


# --------------------------------------------------------------------------
# Numeric failures
# --------------------------------------------------------------------------


class NumericFailureError(SpectralLabError):
    """Raised when a numerical procedure does not converge or hits a singularity."""

    exit_code = EXIT_NUMERIC

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(
            message=message,
            details=self.diagnostics,
            user_message="A numerical procedure failed. See the diagnostics in the log.",
        )


class CalibrationError(NumericFailureError):
    """Raised when a coupling calibration search cannot bracket its target."""


def exit_code_for(error: BaseException) -> int:
    """
    Map an exception to the process exit code.

    Args:
        error: Any exception raised while running a command

    Returns:
        Exit code (2 usage, 3 data, 4 numeric failure)

    Example:
        >>> exit_code_for(InsufficientDataError("too short"))
        3
    """
    if isinstance(error, SpectralLabError):
        return error.exit_code
    if isinstance(error, (ValueError, TypeError)):
        return EXIT_USAGE
    if isinstance(error, (OSError, KeyError)):
        return EXIT_DATA
    return EXIT_NUMERIC


def create_user_friendly_error_message(error: Exception) -> str:
    """
    Create a user-friendly error message from any exception.

    Example:
        >>> error = ValidationError("dim", "must be at least 2", 1)
        >>> create_user_friendly_error_message(error)
        'Invalid dim: must be at least 2'
    """
    if isinstance(error, SpectralLabError):
        return error.user_message

    error_type = type(error).__name__
    messages = {
        "ValueError": "Invalid input provided. Please check your parameters and try again.",
        "FileNotFoundError": "An input file could not be found.",
        "FloatingPointError": "A floating-point error occurred during the computation.",
    }
    return messages.get(error_type, "An unexpected error occurred. Please check the run log.")


def log_error_details(error: Exception, context: dict[str, Any] | None = None) -> dict[str, Any]:
    """
    Create structured error details for logging and manifests.

    Example:
        >>> details = log_error_details(NumericFailureError("no convergence"), {"lambda": 0.4})
        >>> details["exit_code"]
        4
    """
    details: dict[str, Any] = {
        "error_type": type(error).__name__,
        "error_message": str(error),
        "exit_code": exit_code_for(error),
        "context": context or {},
    }

    if isinstance(error, SpectralLabError):
        details.update({"user_message": error.user_message, "error_details": error.details})

    return details
