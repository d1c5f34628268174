"""Exception hierarchy shared by all rbis5g modules."""


class RbisError(Exception):
    """Base class for every error raised by this package."""


class TimeRangeError(RbisError, OverflowError):
    """A time quantity left the representable picosecond range."""


class SfnAmbiguityError(RbisError):
    """An observed SFN cannot be mapped to a unique absolute event index."""


class OrderingError(RbisError, ValueError):
    """Timestamps arrived out of order (master time did not increase)."""


class UninitializedError(RbisError):
    """An estimator was queried before it processed any timestamp tuple."""


class PeriodAssociationError(RbisError, ValueError):
    """Two validation edges do not belong to the same signal period."""


class ConfigError(RbisError, ValueError):
    """A scenario configuration could not be parsed (missing key, bad type)."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ConfigInvariantError(ConfigError):
    """A scenario configuration parsed but violates a value constraint."""


class SimulationAbort(RbisError):
    """The event loop stopped because a protocol invariant broke."""

    def __init__(self, message, event_index=None, device=None):
        super().__init__(message)
        self.event_index = event_index
        self.device = device
