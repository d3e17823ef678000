"""Exception hierarchy shared across the toolkit.

The CLI maps these onto stable exit codes: usage errors exit 2, data
errors exit 3, numerical failures exit 4.
"""


class ConfigError(ValueError):
    """Invalid configuration: bad grid, unknown method, missing key."""


class DataError(ValueError):
    """Malformed or insufficient input data (files, records, series)."""


class NumericsError(RuntimeError):
    """Numerical failure: solver divergence, calibration breakdown."""
