"""Exception types shared across the package."""


class AutosilError(Exception):
    """Base class for all package errors."""


class ConfigError(AutosilError):
    """Invalid configuration: bad dimensions, missing files, bad ranges."""


class InputError(AutosilError):
    """Malformed runtime input (empty sequence, dimension mismatch, ...)."""


class DivergenceError(AutosilError):
    """Training produced non-finite values; the iteration must be aborted."""
