"""Exception types shared across the package.

Input-contract violations raise ValueError (CLI exit code 2). Numerical
failures raise NumericalError or a subclass (CLI exit code 3). Verification
suites do not raise on a violated bound; they report ok=False (CLI exit 4).
"""

from __future__ import annotations

__all__ = ["NumericalError", "ConvergenceError"]


class NumericalError(RuntimeError):
    """A computation failed numerically (not an input-validation problem)."""


class ConvergenceError(NumericalError):
    """Fixed-point iteration did not reach the residual target.

    Carries the last residual and iteration count so callers can report
    how close the solve got.
    """

    def __init__(self, message: str, *, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations
