"""Centralized error handling for the numerical lab."""

import logging
import sys
from enum import Enum
from typing import Any, Optional

import numpy as np

# Configure module logger
logger = logging.getLogger(__name__)


class ErrorType(Enum):
    """Classification of error types for consistent handling."""

    # Configuration
    CONFIG_MISSING = "config_missing"
    CONFIG_INVALID = "config_invalid"

    # Shapes and algebra
    DIMENSION_MISMATCH = "dimension_mismatch"
    ORDER_MISMATCH = "order_mismatch"

    # Preconditions of numerical routines
    OUT_OF_RANGE = "out_of_range"
    NONZERO_MEAN = "nonzero_mean"
    NOT_PSD = "not_psd"
    EMPTY_INPUT = "empty_input"
    GRID = "grid"

    # Numerical failures
    QUADRATURE = "quadrature"
    NON_FINITE = "non_finite"

    # Files
    FILE_FORMAT = "file_format"

    UNEXPECTED = "unexpected"


class ChaosLabError(Exception):
    """Base exception class for chaoslab errors."""

    def __init__(
        self,
        message: str,
        error_type: ErrorType = ErrorType.UNEXPECTED,
        details: Optional[dict] = None,
        original_exception: Optional[Exception] = None
    ):
        super().__init__(message)
        self.error_type = error_type
        self.details = details or {}
        self.original_exception = original_exception

        # Log the error immediately
        self._log_error()

    def _log_error(self):
        """Log the error with appropriate level and details."""
        log_data = {
            "error_type": self.error_type.value,
            "message": str(self),
            "details": self.details
        }

        if self.original_exception:
            log_data["original_exception"] = str(self.original_exception)

        if self.error_type == ErrorType.QUADRATURE:
            logger.warning("chaoslab warning: %s", log_data)
        else:
            logger.error("chaoslab error: %s", log_data, exc_info=self.original_exception)


class ConfigError(ChaosLabError):
    """Invalid or incomplete experiment configuration."""

    def __init__(
        self,
        message: str,
        config_key: Optional[str] = None,
        error_type: ErrorType = ErrorType.CONFIG_INVALID,
        details: Optional[dict] = None,
        original_exception: Optional[Exception] = None
    ):
        merged = {"config_key": config_key}
        merged.update(details or {})
        super().__init__(message, error_type, merged, original_exception)


class DimensionError(ChaosLabError, ValueError):
    """Shape, order or Hilbert-space mismatch between operands."""

    def __init__(
        self,
        message: str,
        expected: Any = None,
        actual: Any = None,
        error_type: ErrorType = ErrorType.DIMENSION_MISMATCH,
    ):
        super().__init__(message, error_type, {"expected": expected, "actual": actual})


class DomainError(ChaosLabError, ValueError):
    """An argument lies outside the domain of the operation."""

    def __init__(
        self,
        message: str,
        parameter: Optional[str] = None,
        value: Any = None,
        error_type: ErrorType = ErrorType.OUT_OF_RANGE,
    ):
        super().__init__(message, error_type, {"parameter": parameter, "value": value})


class QuadratureError(ChaosLabError, ArithmeticError):
    """A quadrature or series evaluation failed to produce a usable value."""

    def __init__(
        self,
        message: str,
        details: Optional[dict] = None,
        error_type: ErrorType = ErrorType.QUADRATURE,
    ):
        super().__init__(message, error_type, details)


class KernelFormatError(ChaosLabError):
    """A kernel snapshot file could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message, ErrorType.FILE_FORMAT, {"path": path, "line": line})


def require_finite(values, what: str) -> None:
    """Raise :class:`QuadratureError` if ``values`` holds NaN or infinity."""
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise QuadratureError(
            f"{what} contains non-finite values",
            details={"what": what, "n_bad": int(np.size(arr) - np.count_nonzero(np.isfinite(arr)))},
            error_type=ErrorType.NON_FINITE,
        )


def format_user_error(error: Exception, context: str = None) -> str:
    """Format an error message for user-friendly display.

    Args:
        error: The exception to format
        context: Optional context string to prefix the message

    Returns:
        Formatted user-friendly error message
    """

    if isinstance(error, ChaosLabError):
        base_message = str(error)

        if error.error_type == ErrorType.CONFIG_MISSING:
            formatted = f"{base_message}\nHint: every experiment file needs at least a top-level `seed`"
        elif error.error_type == ErrorType.CONFIG_INVALID:
            formatted = f"{base_message}\nHint: unknown keys are rejected; check spelling against the README"
        elif error.error_type == ErrorType.NOT_PSD:
            formatted = f"{base_message}\nHint: the target covariance must be positive semidefinite"
        else:
            formatted = base_message
    else:
        formatted = f"Unexpected error: {str(error)}"

    if context:
        return f"{context}: {formatted}"

    return formatted


def setup_global_error_handler():
    """Setup global exception handler for uncaught exceptions."""

    def handle_exception(exc_type, exc_value, exc_traceback):
        if issubclass(exc_type, KeyboardInterrupt):
            sys.__excepthook__(exc_type, exc_value, exc_traceback)
            return

        logger.critical(
            "Uncaught exception",
            exc_info=(exc_type, exc_value, exc_traceback)
        )

        user_message = format_user_error(exc_value)
        print(f"\nchaoslab error: {user_message}", file=sys.stderr)

    sys.excepthook = handle_exception
