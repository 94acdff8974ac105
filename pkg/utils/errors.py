"""
Error types for ONQ Lab.
Every library failure is an OnqError; the entry script maps each class to a process exit code.
"""

from typing import Optional


EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


class OnqError(Exception):
    """Base class for all ONQ Lab errors."""

    exit_code = EXIT_CONFIG


class InvalidArgumentError(OnqError, ValueError):
    """An argument is outside the domain of the operation."""


class SpinTooSmallError(InvalidArgumentError):
    """A quadrupole quantity was requested for a spin-1/2 nucleus."""


class ConfigError(OnqError, ValueError):
    """A scenario file could not be parsed or validated."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        """
        Args:
            message: Human readable description
            key: Dotted key path the problem was found at
            line: 1-based line number in the scenario file, when known
        """
        self.key = key
        self.line = line
        location = []
        if key:
            location.append(f"key '{key}'")
        if line:
            location.append(f"line {line}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class SingularityError(OnqError, ZeroDivisionError):
    """A denominator vanished (resonance with zero linewidth, zero detuning, zero decay rate)."""

    exit_code = EXIT_NUMERICAL


class FitFailureError(OnqError):
    """The least-squares design matrix is rank deficient."""

    exit_code = EXIT_NUMERICAL


class IntegratorRefusalError(OnqError):
    """The requested step exceeds the integrator's stability bound."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, requested_dt: float, required_dt: float):
        self.requested_dt = requested_dt
        self.required_dt = required_dt
        super().__init__(
            f"time step {requested_dt:.3e} s exceeds the stability bound; "
            f"use dt <= {required_dt:.3e} s"
        )


class DataFileError(OnqError, OSError):
    """A data file is missing or malformed."""

    exit_code = EXIT_IO

    def __init__(self, message: str, path: Optional[str] = None, row: Optional[int] = None):
        self.path = path
        self.row = row
        if path:
            message = f"{path}: {message}"
        if row is not None:
            message = f"{message} (row {row})"
        super().__init__(message)
