"""Exception hierarchy shared by all modules."""


class SwapClfError(Exception):
    """Base class for all package errors."""


class DimensionError(SwapClfError, ValueError):
    """Qubit indices or operator sizes do not fit the state."""


class CircuitError(SwapClfError, ValueError):
    """Malformed gate or circuit."""


class CapacityError(SwapClfError):
    """Requested width exceeds a backend or resource budget."""

    def __init__(self, message: str, required: int | None = None, limit: int | None = None):
        super().__init__(message)
        self.required = required
        self.limit = limit


class NoiseModelError(SwapClfError, ValueError):
    """Invalid device calibration or channel parameters."""


class TranspileError(SwapClfError):
    """A circuit cannot be lowered to the native gate set."""


class FitError(SwapClfError):
    """Nonlinear least squares did not converge."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(SwapClfError, ValueError):
    """Invalid experiment configuration."""
