"""Exception types raised across the package."""


class OpCoorbitError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(OpCoorbitError, ValueError):
    pass


class NotAFrame(OpCoorbitError):
    """The frame operator is (numerically) singular."""

    def __init__(self, message, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class DegenerateFit(OpCoorbitError):
    pass


class ZeroReference(OpCoorbitError, ZeroDivisionError):
    pass


class NotMonotone(OpCoorbitError, ValueError):
    pass


class ConfigError(OpCoorbitError, ValueError):
    pass


class MalformedOperatorFile(OpCoorbitError):
    """Raised when an HSO1 file cannot be parsed.

    ``offset`` is the byte position at which parsing failed.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
