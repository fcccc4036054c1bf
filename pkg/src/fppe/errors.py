"""Exception hierarchy shared by all modules."""


class FPPEError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(FPPEError, ValueError):
    """A configuration value violates a documented invariant."""


class QuadratureInstabilityError(FPPEError):
    """An assembled integral changed by more than the tolerance under refinement."""


class ConvergenceError(FPPEError):
    """An iterative solver did not converge within its iteration budget."""


class CrossCheckError(FPPEError):
    """Two independent routes to the same constant disagree beyond tolerance."""


class BracketError(FPPEError):
    """A root-finding bracket could not be established."""


class StepError(FPPEError):
    """A time step produced a singular system or non-finite coefficients."""


class VerificationError(FPPEError):
    """At least one property in the invariant suite failed."""
