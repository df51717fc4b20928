"""Exception types shared across the package."""


class NeurosubError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(NeurosubError, ValueError):
    """Tensor/vector shapes do not line up."""


class DomainError(NeurosubError, ValueError):
    """An input value is outside its documented domain."""


class NumericError(NeurosubError, ArithmeticError):
    """A computation produced a non-finite value."""

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)
        self.step = step


class SaturationError(NeurosubError, ValueError):
    """Haze transmission too low to invert; the scene is irrecoverable."""


class ConfigurationError(NeurosubError, ValueError):
    """A component was used before it was configured/loaded."""


class ConversionError(NeurosubError, ValueError):
    """A network cannot be converted to its spiking equivalent."""
