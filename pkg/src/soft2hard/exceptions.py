"""Exception hierarchy for soft2hard."""


class Soft2HardError(Exception):
    """Base class for all errors raised by soft2hard."""


class ConfigError(Soft2HardError, ValueError):
    """Invalid experiment configuration or command-line overrides."""


class HypothesisError(ConfigError):
    """A reference potential violates one of the structural hypotheses.

    Attributes:
        hypothesis: Short name of the failed condition (e.g. "P1-monotone")
        location: Radius at which the violation was detected, if any
    """

    def __init__(self, message: str, hypothesis: str = "", location: float | None = None):
        super().__init__(message)
        self.hypothesis = hypothesis
        self.location = location


class OverlapError(Soft2HardError, ValueError):
    """Hard-sphere initial data with overlapping bodies."""


class NumericalError(Soft2HardError, RuntimeError):
    """A numerical procedure failed to produce a trustworthy result."""


class IntegrationError(NumericalError):
    """The ODE integrator failed (step-size underflow, non-finite state)."""


class EnergyDriftError(NumericalError):
    """Hamiltonian drift along an integrated trajectory exceeded the limit."""

    def __init__(self, message: str, drift: float):
        super().__init__(message)
        self.drift = drift


class BracketError(NumericalError):
    """No sign change was found where a root was expected."""


class QuadratureError(NumericalError):
    """A radial integral could not be evaluated (negative radicand, no convergence)."""
