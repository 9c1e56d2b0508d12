"""Exception hierarchy shared by every module."""


class SchedulingError(Exception):
    """Base class for errors raised by mcsched."""


class UsageError(SchedulingError, ValueError):
    """An argument is out of range or otherwise malformed."""


class ConfigurationError(SchedulingError, ValueError):
    """Channel or experiment parameters are non-physical or inconsistent."""


class InfeasibleError(SchedulingError):
    """No schedule (independent set) of the requested size exists."""


class ProtocolError(SchedulingError, RuntimeError):
    """A distributed-protocol message violates the bus contract."""
