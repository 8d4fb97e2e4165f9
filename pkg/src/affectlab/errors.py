"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Tensor shapes are incompatible for the requested operation."""


class ConfigError(ValueError):
    """A configuration value or key is invalid."""


class StateError(RuntimeError):
    """An operation was attempted in a state that does not allow it."""


class DegenerateInputError(ValueError):
    """Input is mathematically degenerate (e.g. a zero vector where a direction is needed)."""
