"""Exception taxonomy.

Two broad categories matter to callers: configuration/schema problems
(CATEGORY_CONFIG, CLI exit code 2) and data problems discovered while
processing otherwise well-formed inputs (CATEGORY_DATA, CLI exit code 3).
"""

CATEGORY_CONFIG = "config"
CATEGORY_DATA = "data"


class WindcmError(Exception):
    """Base class for all errors raised by this package."""

    category = CATEGORY_DATA


class ConfigError(WindcmError):
    """Invalid or inconsistent configuration."""

    category = CATEGORY_CONFIG


class SchemaError(WindcmError):
    """Input file does not match the expected schema (headers, columns)."""

    category = CATEGORY_CONFIG


class ParseError(WindcmError):
    """Malformed cell or row in an input file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AlignmentError(WindcmError):
    """Timestamp cannot be placed on the time grid."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownIdError(WindcmError):
    """Reference to a turbine or sensor that does not exist."""


class PeriodRangeError(WindcmError):
    """Requested evaluation period does not fit the available grid."""


class InsufficientDataError(WindcmError):
    """Not enough usable rows or samples for the requested operation."""


class CalibrationError(InsufficientDataError):
    """Too little data to establish a detector baseline."""


class SingularityError(WindcmError):
    """Normal equations are singular; a positive ridge penalty is required."""


class EmptyDistributionError(WindcmError):
    """No turbine contributes positive probability mass."""
