"""Exception hierarchy for polysmooth."""


class PolysmoothError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(PolysmoothError, ValueError):
    """Operands have incompatible shapes or arities."""


class InvalidMatrixError(PolysmoothError, ValueError):
    """Matrix is not square, not symmetric, or contains non-finite values."""


class NumericalError(PolysmoothError, ArithmeticError):
    """Base class for failures caused by the numbers rather than the shapes."""


class NotPSDError(NumericalError):
    """Matrix has an eigenvalue below the PSD tolerance."""


class NotSPDError(NumericalError):
    """Matrix is singular or indefinite where positive definiteness is needed."""


class DegreeError(PolysmoothError, ValueError):
    """Polynomial power exceeds what the moment computation supports."""


class InvalidParameterError(PolysmoothError, ValueError):
    """A scalar parameter is outside its admissible range."""


class NumericalFailure(NumericalError):
    """A recursion step could not be completed.

    Attributes
    ----------
    step : int
        One-based time index at which the failure happened.
    """

    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step


class ConfigError(PolysmoothError, ValueError):
    """Experiment configuration is malformed or violates an invariant."""
