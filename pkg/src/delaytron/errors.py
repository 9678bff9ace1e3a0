"""Exception hierarchy shared across the package."""


class DelaytronError(Exception):
    """Base class for all package errors."""


class ConfigError(DelaytronError, ValueError):
    """Invalid hyper-parameter or run configuration."""


class ShapeError(DelaytronError, ValueError):
    """Dimension mismatch between weights, features or updates."""


class InputError(DelaytronError, ValueError):
    """Input data is missing, too short or otherwise unusable."""


class ParseError(InputError):
    """A data or schedule file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UsageError(DelaytronError, RuntimeError):
    """An API was driven out of its protocol (wrong order, repeated call)."""
