"""Exception types shared across the package."""


class ShapeMismatchError(ValueError):
    """Incompatible particle counts, dimensions, or an empty grid."""


class BlowUpError(RuntimeError):
    """A particle coordinate left the finite range during integration."""


class ConfigError(ValueError):
    """A scenario configuration is missing or misusing a field."""


class ResolutionError(ValueError):
    """Requested time blocks are finer than the available grid."""
