"""Exception types raised across the package."""


class BedSimError(Exception):
    """Base class for every error raised by bedsim."""


class PastEventError(BedSimError):
    """An event was scheduled before the current simulation time."""


class EmptyCalendarError(BedSimError):
    """The future event list had nothing left to pop."""


class InvalidRateError(BedSimError, ValueError):
    pass


class InvalidRangeError(BedSimError, ValueError):
    pass


class UnderflowError(BedSimError):
    """A resource was released while holding no units."""


class TimeRegressionError(BedSimError, ValueError):
    pass


class AllSickSuspension(BedSimError):
    """Raised by the arrival generator when nobody is left to get sick.

    The event loop treats it as a suspension: the generator stays parked
    until the next healing reactivates it.
    """


class ConfigError(BedSimError, ValueError):
    """Invalid or contradictory configuration value; ``field`` names the key."""

    def __init__(self, field, message=""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)
