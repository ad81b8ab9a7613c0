"""Exception types raised across the package."""


class WarpspecError(Exception):
    """Base class for all package errors."""


class DomainError(WarpspecError, ValueError):
    """A radius or coordinate lies outside the domain of the object queried."""


class ParameterError(WarpspecError, ValueError):
    """Constants or parameters violate the preconditions of a formula."""


class EvaluationError(WarpspecError, ArithmeticError):
    """A profile evaluation produced an invalid value (e.g. h <= 0)."""


class WindowError(WarpspecError, ValueError):
    """A radial window is empty, outside the end, or too short for a fit."""


class IntegrationError(WarpspecError, RuntimeError):
    """The ODE integrator failed; ``location`` records where it stopped."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class BracketError(WarpspecError, ValueError):
    """No interior minimum of the tail functional inside the bracket."""


class EstimationError(WarpspecError, ValueError):
    """A decay fit was too poor to report a rate."""


class UnsatisfiableHypotheses(WarpspecError):
    """Fitted constants cannot satisfy the hypotheses (e.g. A0* <= 0)."""

    def __init__(self, message, fitted=None):
        super().__init__(message)
        self.fitted = dict(fitted or {})


class ConfigError(WarpspecError, ValueError):
    """Malformed run configuration (unknown key, bad value, missing file)."""
