"""Exception hierarchy shared by all modules."""


class LevyCreditError(Exception):
    """Base class for package errors."""


class ParameterError(LevyCreditError, ValueError):
    """A model or operation parameter lies outside its domain."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class UnsupportedSchemeError(LevyCreditError):
    """Requested simulation scheme or check is not available for the model."""


class QuadratureError(LevyCreditError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, abserr):
        super().__init__(f"{message} (achieved error estimate {abserr:.3e})")
        self.abserr = abserr


class DataIntegrityError(LevyCreditError):
    """A path violates its running-minimum or ordering invariants."""


class ConfigError(LevyCreditError, ValueError):
    """Monte Carlo or experiment configuration is unusable."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NumericalFailure(LevyCreditError, ArithmeticError):
    """A Monte Carlo estimate is degenerate (e.g. zero survival in a log)."""
