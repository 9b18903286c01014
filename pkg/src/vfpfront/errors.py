"""Exception hierarchy shared across the package.

The CLI maps :class:`ValidationError` to exit code 2 and
:class:`NumericalError` to exit code 3.
"""


class VfpError(Exception):
    """Base class for all package errors."""


class ValidationError(VfpError, ValueError):
    """A parameter or input violates a documented precondition."""


class NumericalError(VfpError, RuntimeError):
    """A numerical procedure failed (non-convergence, blow-up, positivity loss)."""


class ConvergenceError(NumericalError):
    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(f"{message} (iterations={iterations}, last residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class BlowUpError(NumericalError):
    """Raised by time integrators; carries the trajectory recorded so far."""

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
