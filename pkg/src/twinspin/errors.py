class ValidationError(ValueError):
    """Input violates a documented precondition (bad dims, non-unit vector, ...)."""


class DimensionLimitError(ValidationError):
    """A register would exceed the configured dimension bound."""
