"""Custom exceptions for the Posterior Fusion Toolkit."""

from typing import Optional

from .constants import ExitCode


class PosteriorFusionException(Exception):
    """Base exception for the toolkit."""

    code = "error"
    exit_code = ExitCode.VALIDATION

    def __init__(self, message: str, code: Optional[str] = None, row: Optional[int] = None):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.row = row


class ConfigurationError(PosteriorFusionException):
    """Raised when a configuration file or object is invalid."""
    code = "invalid-config"
    exit_code = ExitCode.USAGE


class UsageError(PosteriorFusionException):
    """Raised when command-line flags are inconsistent."""
    code = "conflicting-flags"
    exit_code = ExitCode.USAGE


class ValidationError(PosteriorFusionException):
    """Base class for data validation failures."""
    code = "validation-failed"
    exit_code = ExitCode.VALIDATION


class DimensionMismatchError(ValidationError):
    """Raised when matrix or vector dimensions disagree."""
    code = "dimension-mismatch"


class AlignmentError(ValidationError):
    """Raised when posteriorgrams do not correspond frame by frame."""
    code = "align-mismatch"


class WeightError(ValidationError):
    """Raised when a fusion weight vector is invalid or misused."""
    code = "invalid-weights"


class RangeError(ValidationError):
    """Raised when a scalar argument is outside its admissible range."""
    code = "out-of-range"


class FormatError(PosteriorFusionException):
    """Raised when a binary or text artifact cannot be decoded."""
    code = "bad-format"
    exit_code = ExitCode.IO


class FileAccessError(PosteriorFusionException):
    """Raised when a referenced file does not exist or cannot be opened."""
    code = "file-not-found"
    exit_code = ExitCode.IO


class NumericalError(PosteriorFusionException):
    """Raised on non-finite values during computation."""
    code = "divergence"
    exit_code = ExitCode.NUMERICAL

    def __init__(self, message: str, code: Optional[str] = None, trace=None):
        super().__init__(message, code=code)
        self.trace = trace
