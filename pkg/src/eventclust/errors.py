"""Exception hierarchy shared across the toolkit.

The three leaf categories map onto the CLI exit codes: ConfigError -> 1,
DataError -> 2, NumericsError -> 3.
"""


class EventClustError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(EventClustError):
    """Invalid or inconsistent study configuration."""


class DataError(EventClustError):
    """Malformed, missing, or invariant-violating input data."""


class InsufficientDataError(DataError):
    """Too few observations to carry out a computation."""


class NumericsError(EventClustError):
    """Degenerate numerical situation (zero variance, undefined statistic)."""
