"""
Error types shared across the stencil-learning packages.

Constructor validation raises plain ``ValueError`` (see the ``__post_init__``
hooks in this package). The classes below cover failures that callers may
want to tell apart.
"""

from typing import Optional


class StencilLearningError(Exception):
    """Base class for domain failures."""


class ShapeError(StencilLearningError, ValueError):
    """An array does not have the size the operation requires."""


class QuadratureError(StencilLearningError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, worst_mode: int, error_estimate: float, abstol: float):
        self.worst_mode = worst_mode
        self.error_estimate = error_estimate
        self.abstol = abstol
        super().__init__(
            f"quadrature did not converge for mode {worst_mode}: "
            f"error estimate {error_estimate:.3e} > abstol {abstol:.3e}"
        )


class RootFindingError(StencilLearningError):
    """Characteristic roots could not be computed."""


class DegenerateBoundaryError(StencilLearningError):
    """The boundary-locus denominator vanished at the requested angle."""

    def __init__(self, theta: float):
        self.theta = theta
        super().__init__(f"boundary locus denominator vanishes at theta={theta!r}")


class InsufficientHistoryError(StencilLearningError):
    """A multistep update was requested before s history levels exist."""


class LineSearchFailure(StencilLearningError):
    """Backtracking shrank the step below the lower bound without a decrease."""

    def __init__(self, rho: float, rho_min: float, message: Optional[str] = None):
        self.rho = rho
        self.rho_min = rho_min
        super().__init__(message or f"line search failed: rho={rho:.3e} < rho_min={rho_min:.3e}")
