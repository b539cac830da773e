"""Exception types shared across the package."""


class AuNnError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AuNnError):
    """Invalid configuration: bad architecture, schedule, or option values."""


class DataError(AuNnError):
    """Invalid data: bad labels, malformed files, too-short signals."""


class ShapeError(DataError):
    """Input vector or matrix does not match the expected dimensions."""
