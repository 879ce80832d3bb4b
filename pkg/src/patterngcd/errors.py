"""Exception hierarchy shared across the package.

Each error family carries the exit code the command line layer maps it to.
"""


class PatternGCDError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(PatternGCDError):
    """Invalid configuration file contents or option values."""

    exit_code = 2


class DataFormatError(PatternGCDError):
    """Malformed or internally inconsistent dataset / checkpoint input."""

    exit_code = 3


class PatternOracleError(PatternGCDError):
    """The pattern oracle could not produce usable output.

    Raised after the retry budget is exhausted, on transport failures, or
    when a replay transcript runs dry.
    """

    exit_code = 4

    def __init__(self, message, transcript=None):
        super().__init__(message)
        self.transcript = list(transcript) if transcript else []


class TrainingError(PatternGCDError):
    """Optimizer state became unusable (non-finite loss or gradients)."""
