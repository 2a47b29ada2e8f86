"""
Stencil Operators - Weights, circulant application and spectra

The semi-discrete operator applied to a periodic grid vector u is

    (D u)_k = sum_j w_j u_{k + j - r},   w = -(c/h_x) w1 + (nu/h_x^2) w2

with r = (n-1)/2 and indices taken modulo N+1. D is circulant, so its
eigenvalues follow from one complex sum per Fourier mode. No dense matrix is
ever assembled here.

Key Responsibilities:
    - Exact Lagrange collocation weights for first and second derivatives
    - Centered baseline weights padded to width n
    - Applying D to single vectors or batches
    - Eigenvalues lambda_eta of D
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from models.errors import ShapeError
from models.grid import Grid, StencilWeights
from models.problem import PdeProblem

logger = logging.getLogger(__name__)


def poly_mul(a: List[Fraction], b: List[Fraction]) -> List[Fraction]:
    """Product of two exact polynomials given by ascending coefficients."""
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


@lru_cache(maxsize=None)
def collocation_weights_exact(n: int, derivative_order: int) -> Tuple[Fraction, ...]:
    """
    Weights of the derivative of the Lagrange interpolant on nodes -r..r,
    evaluated at 0, as exact rationals.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Stencil width must be odd and >= 3, got: {n}")
    if derivative_order not in (1, 2):
        raise ValueError(f"Derivative order must be 1 or 2, got: {derivative_order}")

    r = (n - 1) // 2
    nodes = list(range(-r, r + 1))
    weights = []
    for j, xj in enumerate(nodes):
        basis = [Fraction(1)]
        for m, xm in enumerate(nodes):
            if m == j:
                continue
            scale = Fraction(1, xj - xm)
            basis = poly_mul(basis, [-xm * scale, scale])
        # d-th derivative at 0 is d! * coefficient of x^d
        factorial = 1 if derivative_order == 1 else 2
        weights.append(factorial * basis[derivative_order])
    return tuple(weights)


def lagrange_collocation_weights(n: int, derivative_order: int) -> np.ndarray:
    """
    Example:
        >>> lagrange_collocation_weights(3, 1)
        array([-0.5,  0. ,  0.5])
    """
    return np.array([float(w) for w in collocation_weights_exact(n, derivative_order)])


def lagrange_weights(n: int) -> StencilWeights:
    """Lagrange collocation pair (w1, w2) of width n."""
    return StencilWeights(
        w1=lagrange_collocation_weights(n, 1),
        w2=lagrange_collocation_weights(n, 2),
    )


def centered_weights(n: int) -> StencilWeights:
    """
    Second-order centered differences 1/2[-1, 0, 1] and [1, -2, 1],
    zero-padded symmetrically to width n.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Stencil width must be odd and >= 3, got: {n}")
    pad = (n - 3) // 2
    w1 = np.pad([-0.5, 0.0, 0.5], pad)
    w2 = np.pad([1.0, -2.0, 1.0], pad)
    return StencilWeights(w1=w1, w2=w2)


def effective_stencil(weights: StencilWeights, problem: PdeProblem, grid: Grid) -> np.ndarray:
    """Combined stencil -(c/h_x) w1 + (nu/h_x^2) w2."""
    if weights.n != grid.n:
        raise ShapeError(f"Weights have width {weights.n}, grid expects {grid.n}")
    h_x = grid.h_x
    return -(problem.c / h_x) * weights.w1 + (problem.nu / h_x**2) * weights.w2


@dataclass(frozen=True)
class DiffOperator:
    """
    Circulant operator D defined by a weight pair on a grid.

    Example:
        >>> op = DiffOperator(Grid(N=8, n=3), centered_weights(3), PdeProblem(c=1.0))
        >>> op.stencil.shape
        (3,)
    """

    grid: Grid
    weights: StencilWeights
    problem: PdeProblem

    def __post_init__(self):
        if self.weights.n != self.grid.n:
            raise ShapeError(f"Weights have width {self.weights.n}, grid expects {self.grid.n}")
        if abs(self.grid.period - self.problem.period) > 1e-15 * self.problem.period:
            raise ValueError(
                f"Grid period {self.grid.period} differs from problem period {self.problem.period}"
            )

    @property
    def stencil(self) -> np.ndarray:
        return effective_stencil(self.weights, self.problem, self.grid)


def apply_operator(op: DiffOperator, u: np.ndarray) -> np.ndarray:
    """
    Compute D u along the last axis.

    u may carry leading batch axes; the last axis must have N+1 entries.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 0 or u.shape[-1] != op.grid.num_points:
        raise ShapeError(f"Expected last axis of length {op.grid.num_points}, got shape {u.shape}")
    out = np.zeros_like(u)
    for weight, offset in zip(op.stencil, op.grid.offsets):
        # roll by -offset brings u_{k+offset} to position k
        out += weight * np.roll(u, -offset, axis=-1)
    return out


def eigenvalue_modes(N: int) -> np.ndarray:
    """
    The N+1 consecutive Fourier modes -floor(N/2)..N-floor(N/2).

    For odd N this includes the Nyquist mode (N+1)/2 so that every grid
    frequency is represented exactly once.
    """
    low = N // 2
    return np.arange(-low, N - low + 1)


def operator_eigenvalues(op: DiffOperator) -> np.ndarray:
    """
    lambda_eta = sum_j w_j exp(2 pi i (j - r) eta / (N+1)) for each mode of
    ``eigenvalue_modes``.
    """
    modes = eigenvalue_modes(op.grid.N)
    phase = 2j * np.pi * np.outer(modes, op.grid.offsets) / op.grid.num_points
    return np.exp(phase) @ op.stencil.astype(complex)


def scaled_eigenvalues(op: DiffOperator, h_t: float) -> np.ndarray:
    return operator_eigenvalues(op) * h_t
