"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: config errors -> 2, data errors -> 3,
solver errors -> 4.
"""


class LrcsError(Exception):
    """Base class for all package errors."""


class ConfigError(LrcsError):
    """Invalid or unknown configuration input."""


class DataError(LrcsError):
    """Malformed or inconsistent input data."""


class SolverError(LrcsError):
    """Numerical failure inside an iterative solver."""
