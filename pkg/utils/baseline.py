"""
Baseline Method - Untrained centered differences

This provides a baseline for comparison against trained stencils: the same
Adams-Bashforth network run with second-order centered weights, padded to
the stencil width under study.

Purpose: Show whether training moved the eigenvalues into the stability
region and how much the forward error changed.
"""

from typing import Optional, Tuple

import numpy as np

from models.grid import Grid, StencilWeights
from models.problem import FourierData, PdeProblem
from models.scheme import AbScheme
from solvers.evaluation import forward_error_series
from solvers.multistep import stable_mask
from solvers.stencil import DiffOperator, centered_weights, scaled_eigenvalues


class BaselineMethod:
    """
    Centered-difference method of a given stencil width.

    Example:
        >>> baseline = BaselineMethod(Grid(N=101, n=9), PdeProblem(nu=1e-4), adams_bashforth(2))
        >>> baseline.is_stable(0.005)
    """

    def __init__(self, grid: Grid, problem: PdeProblem, scheme: AbScheme):
        self.name = f"Centered AB{scheme.s} (n={grid.n})"
        self.grid = grid
        self.problem = problem
        self.scheme = scheme
        self.weights: StencilWeights = centered_weights(grid.n)
        self.operator = DiffOperator(grid, self.weights, problem)

    def scaled_eigenvalues(self, h_t: float) -> np.ndarray:
        return scaled_eigenvalues(self.operator, h_t)

    def is_stable(self, h_t: float, tol: float = 1e-12) -> bool:
        return bool(np.all(stable_mask(self.scheme, self.scaled_eigenvalues(h_t), tol)))

    def error_series(
        self,
        h_t: float,
        horizon: float = 20.0,
        data: Optional[FourierData] = None,
        chunk_levels: int = 1024,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Forward error of the untrained method on the reference problem."""
        return forward_error_series(
            self.weights, self.problem, self.grid, self.scheme, h_t,
            horizon=horizon, data=data, chunk_levels=chunk_levels,
        )
