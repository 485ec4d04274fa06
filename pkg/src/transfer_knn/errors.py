"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration object is malformed; `field` names the offender."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class NumericError(RuntimeError):
    """A numeric procedure failed without a fallback (e.g. divergence)."""


class NoClosedFormError(ValueError):
    """The requested pair has no known closed-form transferability indices."""


class RadiusSearchError(NumericError):
    """The ball-radius search exceeded its bracket cap before reaching h."""
