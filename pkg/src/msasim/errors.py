"""Exception taxonomy shared across the simulator."""


class MsaError(Exception):
    """Base class for all simulator errors."""


class ParameterError(MsaError, ValueError):
    """An operation was called with invalid arguments."""


class ConfigError(MsaError, ValueError):
    """A configuration object violates one of its invariants."""


class FramingError(MsaError, ValueError):
    """Bit stream length is incompatible with the requested framing."""


class SyncError(MsaError, RuntimeError):
    """Frame synchronization failed (no reliable correlation peak)."""


class CapacityError(MsaError, ValueError):
    """Problem size exceeds a hard enumeration bound."""
