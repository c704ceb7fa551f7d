"""Exception types shared across the package."""


class EgoHoiError(Exception):
    """Base class for all package errors."""


class ParseError(EgoHoiError):
    """A file could not be decoded or is structurally malformed."""


class ValidationError(EgoHoiError):
    """Decoded data violates a schema invariant."""


class ShapeError(EgoHoiError):
    """Tensor shapes are incompatible for the requested operation."""


class ConfigError(EgoHoiError):
    """A configuration value is out of range or inconsistent."""
