"""Exception types shared across the package."""


class WaveQEDError(Exception):
    """Base class for all package errors."""


class DomainError(WaveQEDError, ValueError):
    """A physical input lies outside the domain of an operation."""


class BandEdgeSingularity(WaveQEDError, ArithmeticError):
    """Raised when a frequency sits exactly on a mode cutoff.

    The density of states diverges there, so callers must take a one-sided
    limit instead of evaluating directly.
    """

    def __init__(self, omega, cutoff, message=None):
        self.omega = omega
        self.cutoff = cutoff
        if message is None:
            message = (
                f"omega={omega!r} lies on the cutoff {cutoff!r}; "
                "evaluate a one-sided limit instead"
            )
        super().__init__(message)


class QuadratureError(WaveQEDError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, error_estimate):
        self.error_estimate = error_estimate
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
