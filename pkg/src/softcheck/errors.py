"""Exception hierarchy shared across the package.

Every error carries an ``exit_code`` so the command line layer can map
failures onto distinct process exit statuses without inspecting types.
"""


class SoftcheckError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(SoftcheckError):
    """Invalid configuration value or inconsistent option combination."""

    exit_code = 2


class DataError(SoftcheckError):
    """Dataset-level problem: bad values, empty partitions, size mismatches."""

    exit_code = 3


class ShapeError(DataError):
    """Array shape does not match what the operation requires."""


class ParseError(DataError):
    """File content could not be parsed into the expected structure."""


class NumericError(SoftcheckError):
    """A computation produced non-finite or otherwise unusable numbers."""

    exit_code = 4


class SamplingError(SoftcheckError):
    """Rejection sampling failed to produce enough points within budget."""

    exit_code = 5
