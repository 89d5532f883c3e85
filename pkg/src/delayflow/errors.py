"""Exception hierarchy.

Every failure mode the library reports maps onto one of these classes so the
CLI can translate exceptions into its exit-code contract (2 = configuration,
3 = hypothesis violation, 4 = numerical failure).
"""

from __future__ import annotations


class DelayflowError(Exception):
    """Base class for all library errors."""


class ConfigError(DelayflowError):
    """Bad user input: config files, option values, malformed model tables."""


class ConstructionError(ConfigError):
    """Invalid parameters passed to a model constructor."""


class EvaluationError(DelayflowError):
    """An energy evaluation produced a non-finite value."""

    def __init__(self, message: str, t: float | None = None, x=None):
        super().__init__(message)
        self.t = t
        self.x = x


class HypothesisError(DelayflowError):
    """A standing hypothesis of the underlying theory fails on this model."""


class UnsupportedRegimeError(HypothesisError):
    """The model is outside the regime the analysis covers (e.g. more than
    one unstable direction at the jump time)."""


class BoundInapplicableError(HypothesisError):
    """A diagnostic bound was requested outside its range of validity; the
    message names the failed precondition."""


class NumericalError(DelayflowError):
    """Base class for solver/algorithm failures."""


class SpectralError(NumericalError):
    """Eigen-decomposition failed at some grid time."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class StiffFailureError(NumericalError):
    """Newton iteration failed to converge even at the minimum step size."""

    def __init__(self, message: str, t: float | None = None, last_state=None):
        super().__init__(message)
        self.t = t
        self.last_state = last_state


class BlowUpError(NumericalError):
    """The numerical state left the floating-point range; records when."""

    def __init__(self, message: str, escape_time: float | None = None):
        super().__init__(message)
        self.escape_time = escape_time


class NonConvergenceError(NumericalError):
    """An asymptotic computation (omega limit) did not stall in time."""

    def __init__(self, message: str, final_state=None):
        super().__init__(message)
        self.final_state = final_state


class NotFoundError(NumericalError):
    """A required object (critical point, hitting time) was not found."""


class AmbiguityError(NumericalError):
    """A nearest-point assignment could not be resolved uniquely."""


class DomainError(DelayflowError):
    """Argument outside the domain covered by the data (time grid, span)."""
