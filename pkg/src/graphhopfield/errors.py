"""Exception taxonomy shared across the package.

The CLI maps these onto its exit-code contract: config errors exit 2,
data errors 3, numeric failures 4.
"""


class GraphHopfieldError(Exception):
    """Base class for all package errors."""


class ConfigError(GraphHopfieldError):
    """Bad configuration: unknown keys, out-of-range values, bad flags."""


class DataError(GraphHopfieldError):
    """Malformed or inconsistent input data."""


class NumericsError(GraphHopfieldError):
    """Numerical failure: non-finite values, non-convergent iterations."""
