"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad parameters or an ill-formed request (CLI exit code 1)."""


class NumericsError(RuntimeError):
    """A numerical routine failed to deliver its contract (CLI exit code 2)."""


class QuadratureError(NumericsError):
    """Adaptive integration did not reach the requested tolerance.

    The message carries the achieved error estimate so callers can decide
    whether a degraded answer is acceptable.
    """

    def __init__(self, message, estimate=None):
        if estimate is not None:
            message = f"{message} (achieved error estimate {estimate:.3e})"
        super().__init__(message)
        self.estimate = estimate


class DivergenceError(NumericsError):
    """A stochastic trajectory blew past the overflow guard."""

    def __init__(self, step, member=0):
        super().__init__(
            f"trajectory diverged at step {step} (ensemble member {member}); "
            "dt is likely too large for these coefficients"
        )
        self.step = step
        self.member = member
