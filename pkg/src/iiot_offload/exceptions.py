"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or unknown configuration key."""


class ProtocolError(ValueError):
    """An action or message outside the agent's alphabet."""


class ContractViolation(RuntimeError):
    """A call made in a state where the operation is undefined (e.g. stepping after done)."""


class OffloadFailure(RuntimeError):
    """Raised when a remote execution is requested without a granted channel."""
