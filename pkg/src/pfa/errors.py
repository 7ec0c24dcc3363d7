"""Exception hierarchy shared across the package."""


class PfaError(Exception):
    """Base class for all package errors."""


class DimensionError(PfaError):
    """Array shapes do not chain or do not match a declared width."""


class NumericError(PfaError):
    """A non-finite value appeared where finite math was required."""


class StateError(PfaError):
    """An operation was called with missing or stale cached state."""


class DegenerateGroupError(PfaError):
    """A group (or a label cell within a group) required by a metric is empty."""


class ConfigError(PfaError):
    """Invalid configuration value or malformed config file."""


class DataError(PfaError):
    """Unreadable, empty, or structurally invalid input data."""
