"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A parameter or input violates a documented invariant."""


class DegenerateConfigurationError(ConfigurationError):
    """An operation is undefined on a collapsed (zero-spread) configuration."""


class EpochBudgetError(RuntimeError):
    """A replica hit its per-replica cap on synchronization epochs."""

    def __init__(self, limit: int, replica: int):
        super().__init__(
            f"replica {replica} exceeded the epoch budget of {limit} events"
        )
        self.limit = limit
        self.replica = replica
