"""
Evaluation - Forward error of a weight pair on a reference problem

The network is kickstarted with exact levels 0..s-1 and then run freely;
the infinity-norm error against the exact series is recorded at every
later level up to the horizon.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from models.grid import Grid, StencilWeights
from models.problem import FourierData, PdeProblem
from models.scheme import AbScheme
from solvers.exact_solution import bump_fourier_data, sample_grid_solution
from solvers.network import StencilNetwork

logger = logging.getLogger(__name__)


def evaluation_levels(h_t: float, s: int, horizon: float) -> range:
    """Levels l = s..floor(horizon / h_t) at which the error is reported."""
    last = math.floor(horizon / h_t)
    if last < s:
        raise ValueError(f"Horizon {horizon} holds fewer than s={s} steps of size {h_t}")
    return range(s, last + 1)


def forward_error_series(
    weights: StencilWeights,
    problem: PdeProblem,
    grid: Grid,
    scheme: AbScheme,
    h_t: float,
    horizon: float = 20.0,
    data: Optional[FourierData] = None,
    chunk_levels: int = 1024,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Times l*h_t and errors ||u(l h_t) - u~(l h_t)||_inf for l = s..floor(horizon/h_t).

    Once the approximation overflows every remaining error is reported as inf
    and no further steps are taken.
    """
    data = bump_fourier_data() if data is None else data
    levels = evaluation_levels(h_t, scheme.s, horizon)
    network = StencilNetwork(grid, weights, problem, scheme, h_t)
    errors = np.empty(len(levels))

    block_start = 0
    block = sample_grid_solution(problem, data, grid.N, h_t, min(chunk_levels, levels.stop), 0)
    state = network.kickstart(block[:, : scheme.s])
    blown_up = False
    with np.errstate(over="ignore", invalid="ignore"):
        for i, level in enumerate(levels):
            if blown_up:
                errors[i] = np.inf
                continue
            if level >= block_start + block.shape[1]:
                block_start = level
                block = sample_grid_solution(
                    problem, data, grid.N, h_t, min(chunk_levels, levels.stop - level), level
                )
            approx = network.step(state)
            error = float(np.max(np.abs(approx - block[:, level - block_start])))
            if not np.isfinite(error):
                blown_up = True
                error = np.inf
                logger.debug("Solution overflowed at level %d (t=%.4g)", level, level * h_t)
            errors[i] = error

    times = h_t * np.arange(levels.start, levels.stop)
    return times, errors
