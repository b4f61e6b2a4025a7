"""Exception types shared across the package."""


class DataError(ValueError):
    """Invalid or inconsistent input data (CSV rows, ids, ranges)."""


class ConfigError(ValueError):
    """Invalid configuration: unknown algorithm, bad key or out-of-range value."""


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name for attribution."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
