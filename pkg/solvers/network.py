"""
Stencil Network - The five-layer recurrent network behind an AB-s step

One forward step maps the newest state through

    input   zeta^I = y_m
    assign  zeta^A = U zeta^I           (gather n neighbours per node)
    reshape Z      = zeta^A as (N+1) x n
    conv    zeta^C = Z w                (w the effective stencil)
    add     zeta^+ = zeta^I + h_t sum_j alpha_j zeta^C_{m-j}

U is a 0/1 selection matrix and is only ever stored as an index table.
All layer functions accept leading batch axes (training cases).
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Optional

import numpy as np

from models.errors import InsufficientHistoryError, ShapeError
from models.grid import Grid, StencilWeights
from models.problem import PdeProblem
from models.scheme import AbScheme
from solvers.stencil import effective_stencil

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GatherMap:
    """
    indices[k, j] = (k + j - r) mod (N+1): the grid node feeding column j of
    row k. Each row holds n distinct nodes in ascending physical order and
    each column is a permutation of 0..N.
    """

    indices: np.ndarray

    @classmethod
    def for_grid(cls, grid: Grid) -> "GatherMap":
        rows = np.arange(grid.num_points)[:, None]
        indices = np.mod(rows + grid.offsets[None, :], grid.num_points)
        indices.setflags(write=False)
        return cls(indices=indices)

    @property
    def num_points(self) -> int:
        return self.indices.shape[0]

    @property
    def width(self) -> int:
        return self.indices.shape[1]


def _check_points(gather: GatherMap, u: np.ndarray) -> None:
    if u.ndim == 0 or u.shape[-1] != gather.num_points:
        raise ShapeError(f"Expected last axis of length {gather.num_points}, got shape {u.shape}")


def assignment(gather: GatherMap, u: np.ndarray) -> np.ndarray:
    """zeta^A = U u, flattened to length n(N+1) along the last axis."""
    u = np.asarray(u, dtype=float)
    _check_points(gather, u)
    picked = u[..., gather.indices]
    return picked.reshape(u.shape[:-1] + (gather.indices.size,))


def reshape(assigned: np.ndarray, n: int) -> np.ndarray:
    """Regroup a flat assignment-layer output into rows of n neighbours."""
    assigned = np.asarray(assigned)
    if assigned.shape[-1] % n:
        raise ShapeError(f"Length {assigned.shape[-1]} is not a multiple of n={n}")
    return assigned.reshape(assigned.shape[:-1] + (assigned.shape[-1] // n, n))


def gather_rows(gather: GatherMap, u: np.ndarray) -> np.ndarray:
    """Assignment followed by reshape: Z with shape (..., N+1, n)."""
    return reshape(assignment(gather, u), gather.width)


def convolution(Z: np.ndarray, stencil: np.ndarray) -> np.ndarray:
    """zeta^C = Z w for an effective stencil w."""
    if Z.shape[-1] != stencil.shape[-1]:
        raise ShapeError(f"Z has {Z.shape[-1]} columns, stencil has {stencil.shape[-1]}")
    return Z @ stencil


def assignment_adjoint(gather: GatherMap, delta: np.ndarray) -> np.ndarray:
    """
    U^T applied to a flat (or already reshaped) assignment-layer error.

    Scatter-adds column by column; columns are permutations, so a single
    fancy-indexed add per column is exact.
    """
    delta = np.asarray(delta, dtype=float)
    if delta.shape[-1] != gather.width:
        delta = reshape(delta, gather.width)
    if delta.shape[-2:] != gather.indices.shape:
        raise ShapeError(f"Expected trailing shape {gather.indices.shape}, got {delta.shape}")
    out = np.zeros(delta.shape[:-1], dtype=float)
    for j in range(gather.width):
        out[..., gather.indices[:, j]] += delta[..., :, j]
    return out


@dataclass
class TrajectoryState:
    """
    Ring buffers of the last s states zeta^+ and their convolutions zeta^C.

    ``step`` counts additive passes since the kickstart; ``conv_step`` is the
    step whose newest state has been convolved.
    """

    s: int
    zeta_plus: Deque[np.ndarray] = field(default_factory=deque)
    zeta_conv: Deque[np.ndarray] = field(default_factory=deque)
    step: int = 0
    conv_step: int = -1

    def __post_init__(self):
        self.zeta_plus = deque(self.zeta_plus, maxlen=self.s)
        self.zeta_conv = deque(self.zeta_conv, maxlen=self.s)

    @property
    def newest(self) -> np.ndarray:
        if not self.zeta_plus:
            raise InsufficientHistoryError("Trajectory has no states yet")
        return self.zeta_plus[-1]

    @property
    def ready(self) -> bool:
        return len(self.zeta_conv) == self.s and self.conv_step == self.step

    def push_convolution(self, conv: np.ndarray) -> None:
        self.zeta_conv.append(conv)
        self.conv_step = self.step


def additive(state: TrajectoryState, scheme: AbScheme, h_t: float) -> np.ndarray:
    """
    zeta^+ = zeta^I + h_t sum_j alpha_j zeta^C_{m-j}; pushes the new state.

    The new state's convolution is left to the caller.
    """
    if state.s != scheme.s:
        raise ShapeError(f"State holds {state.s} levels, scheme needs {scheme.s}")
    if not state.ready:
        raise InsufficientHistoryError(
            f"Additive layer needs {scheme.s} convolved levels, have {len(state.zeta_conv)}"
        )
    newest_first = list(reversed(state.zeta_conv))
    increment = sum(alpha * conv for alpha, conv in zip(scheme.alpha, newest_first))
    new_state = state.newest + h_t * increment
    state.zeta_plus.append(new_state)
    state.step += 1
    return new_state


@dataclass
class Rollout:
    """States y_m, gathered rows Z_m and convolutions for every visited level m."""

    states: List[np.ndarray]
    rows: List[np.ndarray]
    convs: List[np.ndarray]

    @property
    def levels(self) -> int:
        return len(self.states)


class StencilNetwork:
    """
    The recurrent network for one weight pair, grid, scheme and timestep.

    Example:
        >>> net = StencilNetwork(Grid(N=16, n=3), centered_weights(3), PdeProblem(), adams_bashforth(2), 0.01)
        >>> state = net.kickstart(seed_levels)      # seed_levels: (N+1, s)
        >>> y_next = net.step(state)
    """

    def __init__(
        self,
        grid: Grid,
        weights: StencilWeights,
        problem: PdeProblem,
        scheme: AbScheme,
        h_t: float,
    ):
        if not h_t > 0:
            raise ValueError(f"Timestep must be positive, got: {h_t}")
        self.grid = grid
        self.weights = weights
        self.problem = problem
        self.scheme = scheme
        self.h_t = float(h_t)
        self.gather = GatherMap.for_grid(grid)
        self.stencil = effective_stencil(weights, problem, grid)

    def convolve(self, u: np.ndarray) -> np.ndarray:
        return convolution(gather_rows(self.gather, u), self.stencil)

    def kickstart(self, samples: np.ndarray) -> TrajectoryState:
        """
        Seed the buffers from s exact levels.

        ``samples`` has shape (..., N+1, s) with levels along the last axis,
        oldest first.
        """
        samples = np.asarray(samples, dtype=float)
        if samples.ndim < 2 or samples.shape[-1] != self.scheme.s:
            raise InsufficientHistoryError(
                f"Kickstart needs {self.scheme.s} levels on the last axis, got shape {samples.shape}"
            )
        state = TrajectoryState(s=self.scheme.s)
        for level in range(self.scheme.s):
            u = np.ascontiguousarray(samples[..., level])
            _check_points(self.gather, u)
            state.zeta_plus.append(u)
            state.push_convolution(self.convolve(u))
        return state

    def step(self, state: TrajectoryState) -> np.ndarray:
        """One full pass through the five layers; returns the new state."""
        new_state = additive(state, self.scheme, self.h_t)
        state.push_convolution(self.convolve(new_state))
        return new_state

    def rollout(self, samples: np.ndarray, steps: int) -> Rollout:
        """
        Kickstart and advance ``steps`` times, keeping every layer output
        needed for backpropagation.
        """
        samples = np.asarray(samples, dtype=float)
        if samples.ndim < 2 or samples.shape[-1] != self.scheme.s:
            raise InsufficientHistoryError(
                f"Rollout needs {self.scheme.s} seed levels, got shape {samples.shape}"
            )
        states, rows, convs = [], [], []
        state = TrajectoryState(s=self.scheme.s)
        for level in range(self.scheme.s + steps):
            if level < self.scheme.s:
                y = np.ascontiguousarray(samples[..., level])
                _check_points(self.gather, y)
                state.zeta_plus.append(y)
            else:
                y = additive(state, self.scheme, self.h_t)
            Z = gather_rows(self.gather, y)
            conv = convolution(Z, self.stencil)
            state.push_convolution(conv)
            states.append(y)
            rows.append(Z)
            convs.append(conv)
        return Rollout(states=states, rows=rows, convs=convs)
