"""Exception types shared across the package.

The command-line front end maps these onto distinct exit codes, so the
kind of failure must be recoverable from the exception class alone.
"""


class QubocimError(ValueError):
    """Base class for all package-specific errors."""


class DimensionError(QubocimError):
    """A vector or matrix does not match the expected dimensions."""


class CapacityError(QubocimError):
    """A problem exceeds a hard size limit (e.g. exhaustive enumeration cap)."""


class ConfigError(QubocimError):
    """An invalid solver or run configuration."""


class ParseError(QubocimError):
    """A malformed input file.

    ``line`` carries the 1-based line number when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedInstanceError(QubocimError):
    """A problem instance outside the supported domain (e.g. even N for factoring)."""


class EncodingError(QubocimError):
    """A value cannot be represented by the requested hardware encoding."""
