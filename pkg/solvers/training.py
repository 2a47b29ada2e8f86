"""
Training - Recurrent loss, backpropagation and BFGS

The loss over T cases and Q recurrent steps is

    J(omega) = sum_tau sum_{q=0}^{Q-1} 1/2 || y_{s+q} - u_{s+q} ||^2

where y_0..y_{s-1} are exact and later levels come from the network. The
gradient is assembled by backpropagating each residual through the layers
(additive, convolution, reshape, assignment) back to the seeded levels.

Key Responsibilities:
    - loss / backprop over a TrainingSet, batched over cases
    - TrainingProblem: objective and gradient closures over omega = [w1; w2]
    - bfgs_minimize: quasi-Newton with backtracking on simple decrease
"""

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Union

import numpy as np
from scipy import linalg

from models.errors import LineSearchFailure, ShapeError
from models.experiment import encode_tree
from models.grid import Grid, StencilWeights
from models.optimization import DeltaField, LossGradient, OptimizerState
from models.problem import PdeProblem, TrainingSet
from models.scheme import AbScheme
from solvers.network import GatherMap, StencilNetwork, assignment_adjoint

logger = logging.getLogger(__name__)

DEFAULT_RHO_MIN = 1e-5
DEFAULT_GRAD_TOL = 1e-12
LINE_SEARCH_SHRINK = 0.75
CURVATURE_TOL = 1e-12
DEFAULT_MAX_RESTARTS = 20

IterationSink = Callable[[Dict], None]
DirectionOverride = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _check_training(training: TrainingSet, scheme: AbScheme, grid: Grid, Q: int) -> None:
    if training.steps != scheme.s:
        raise ShapeError(f"Training set seeds {training.steps} levels, scheme needs {scheme.s}")
    if training.num_points != grid.num_points:
        raise ShapeError(f"Training set has {training.num_points} nodes, grid has {grid.num_points}")
    if not 1 <= Q <= training.horizon:
        raise ShapeError(f"Q={Q} outside 1..{training.horizon} available target levels")


def _forward(omega, training, scheme, grid, problem, h_t, Q):
    weights = StencilWeights.from_omega(omega)
    if weights.n != grid.n:
        raise ShapeError(f"omega describes width {weights.n}, grid expects {grid.n}")
    network = StencilNetwork(grid, weights, problem, scheme, h_t)
    with np.errstate(over="ignore", invalid="ignore"):
        rollout = network.rollout(training.kickstart, Q)
        residuals = [rollout.states[scheme.s + q] - training.cases[:, :, scheme.s + q] for q in range(Q)]
    return network, rollout, residuals


def _contract(conv: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """sum over cases and nodes of conv[..., k] * rows[..., k, :]."""
    axes = list(range(conv.ndim))
    return np.tensordot(conv, rows, axes=(axes, axes))


def loss(
    omega: np.ndarray,
    training: TrainingSet,
    scheme: AbScheme,
    grid: Grid,
    problem: PdeProblem,
    h_t: float,
    Q: int,
) -> float:
    """J(omega); non-finite when the rollout overflows."""
    _check_training(training, scheme, grid, Q)
    _, _, residuals = _forward(omega, training, scheme, grid, problem, h_t, Q)
    with np.errstate(over="ignore", invalid="ignore"):
        return float(sum(0.5 * np.sum(r * r) for r in residuals))


def backprop(
    omega: np.ndarray,
    training: TrainingSet,
    scheme: AbScheme,
    grid: Grid,
    problem: PdeProblem,
    h_t: float,
    Q: int,
    keep_deltas: bool = False,
) -> LossGradient:
    """
    J and dJ/d omega.

    For each q the residual seeds delta^+ at level s+q; errors then run
    backwards through levels s-1+q..s-1 (recurrent) and s-2..0 (seeded),
    and every delta^C is contracted with the gathered rows of its level.
    """
    _check_training(training, scheme, grid, Q)
    network, rollout, residuals = _forward(omega, training, scheme, grid, problem, h_t, Q)
    s, alpha = scheme.s, scheme.alpha
    gather: GatherMap = network.gather
    stencil = network.stencil

    value = float(sum(0.5 * np.sum(r * r) for r in residuals))
    g_stencil = np.zeros(grid.n)
    deltas: List[DeltaField] = []
    conv_norms: Dict[int, float] = {}

    for q in range(Q):
        field_q = DeltaField(q=q)
        plus: Dict[int, np.ndarray] = {}
        conv: Dict[int, np.ndarray] = {}
        inputs: Dict[int, np.ndarray] = {}

        # Recurrent levels, offset l = q..0 from level s-1.
        for l in range(q, -1, -1):
            plus[l] = residuals[q] if l == q else inputs[l + 1]
            top = min(s - 1, q - l)
            conv[l] = h_t * sum(alpha[j] * plus[l + j] for j in range(top + 1))
            delta_rows = conv[l][..., :, None] * stencil
            inputs[l] = plus[l] + assignment_adjoint(gather, delta_rows)
            if keep_deltas:
                field_q.rows[s - 1 + l] = delta_rows
            g_stencil += _contract(conv[l], rollout.rows[s - 1 + l])

        # Seeded levels m = 0..s-2 feed the first s-1-m updates.
        for m in range(s - 2, -1, -1):
            top = min(m, q)
            kick = h_t * sum(alpha[l + s - 1 - m] * plus[l] for l in range(top + 1))
            g_stencil += _contract(kick, rollout.rows[m])
            field_q.conv[m] = kick

        for l in range(q + 1):
            field_q.plus[s - 1 + l] = plus[l]
            field_q.conv[s - 1 + l] = conv[l]
            field_q.input[s - 1 + l] = inputs[l]
        if q == Q - 1:
            conv_norms = field_q.conv_norms()
        if keep_deltas:
            deltas.append(field_q)

    h_x = grid.h_x
    gradient = np.concatenate([-(problem.c / h_x) * g_stencil, (problem.nu / h_x**2) * g_stencil])
    return LossGradient(
        value=value,
        gradient=gradient,
        conv_norms=conv_norms,
        deltas=deltas if keep_deltas else None,
    )


@dataclass
class TrainingProblem:
    """
    Closure over everything J depends on except omega.

    Example:
        >>> problem = TrainingProblem(training, adams_bashforth(2), grid, pde, h_t)
        >>> state = bfgs_minimize(centered_weights(grid.n), problem, kappa_max=100)
    """

    training: TrainingSet
    scheme: AbScheme
    grid: Grid
    problem: PdeProblem
    h_t: float
    Q: Optional[int] = None
    evaluations: int = field(default=0, init=False)

    def __post_init__(self):
        if self.Q is None:
            self.Q = self.training.horizon
        _check_training(self.training, self.scheme, self.grid, self.Q)

    def objective(self, omega: np.ndarray) -> float:
        self.evaluations += 1
        return loss(omega, self.training, self.scheme, self.grid, self.problem, self.h_t, self.Q)

    def gradient(self, omega: np.ndarray) -> LossGradient:
        return backprop(omega, self.training, self.scheme, self.grid, self.problem, self.h_t, self.Q)


def _solve_direction(H: np.ndarray, gradient: np.ndarray) -> np.ndarray:
    """sigma with H sigma = -gradient; H is kept symmetric positive definite."""
    factor = linalg.cho_factor(H, check_finite=True)
    return linalg.cho_solve(factor, -gradient)


def _bfgs_update(H: np.ndarray, step: np.ndarray, change: np.ndarray) -> Optional[np.ndarray]:
    """Direct BFGS update of the Hessian approximation, or None when curvature is too weak."""
    sy = float(step @ change)
    if sy <= CURVATURE_TOL * np.linalg.norm(step) * np.linalg.norm(change):
        return None
    Hs = H @ step
    updated = H + np.outer(change, change) / sy - np.outer(Hs, Hs) / float(step @ Hs)
    return 0.5 * (updated + updated.T)


def _line_search(f, omega, sigma, J, rho_min):
    """Largest rho = (3/4)^k with J(omega + rho sigma) < J; raises LineSearchFailure."""
    rho = 1.0
    while True:
        trial = omega + rho * sigma
        J_trial = float(f(trial))
        if J_trial < J:
            return rho, trial, J_trial
        rho *= LINE_SEARCH_SHRINK
        if rho < rho_min:
            raise LineSearchFailure(rho, rho_min)


def _log_iteration(record: Dict) -> None:
    logger.debug(json.dumps(encode_tree(record), allow_nan=False))


def bfgs_minimize(
    initial: Union[StencilWeights, np.ndarray],
    objective: Union[TrainingProblem, Callable[[np.ndarray], float]],
    kappa_max: int,
    rho_min: float = DEFAULT_RHO_MIN,
    gradient: Optional[Callable[[np.ndarray], Union[LossGradient, np.ndarray]]] = None,
    grad_tol: float = DEFAULT_GRAD_TOL,
    iteration_sink: Optional[IterationSink] = None,
    direction_override: Optional[DirectionOverride] = None,
    max_restarts: int = DEFAULT_MAX_RESTARTS,
) -> OptimizerState:
    """
    Minimize J from ``initial`` by BFGS.

    H^0 = ||grad J(omega^0)|| I. Each iteration solves H sigma = -grad J and
    backtracks rho <- 3/4 rho from rho = 1 until J strictly decreases. The
    run stops at kappa_max iterations ("max_iterations"), when the gradient
    norm drops below grad_tol ("converged"), or when rho falls below rho_min
    ("failed", best iterate kept).

    A failed line search first resets H to gamma I, with gamma = y.y / s.y
    from the latest accepted step with positive curvature (||grad J|| before
    any), and retries from the same iterate. A second failure at that
    iterate, or more than ``max_restarts`` resets in the run, ends it.

    ``direction_override(omega, gradient, H)`` replaces the Newton direction;
    it exists for exercising the line-search failure path.
    """
    if kappa_max < 0:
        raise ValueError(f"kappa_max must be non-negative, got: {kappa_max}")
    if not rho_min > 0:
        raise ValueError(f"rho_min must be positive, got: {rho_min}")
    if max_restarts < 0:
        raise ValueError(f"max_restarts must be non-negative, got: {max_restarts}")

    if isinstance(objective, TrainingProblem):
        f, grad_fn = objective.objective, objective.gradient
    else:
        if gradient is None:
            raise ValueError("A gradient callable is required for a plain objective")
        f, grad_fn = objective, gradient

    def evaluate_gradient(omega):
        result = grad_fn(omega)
        if isinstance(result, LossGradient):
            return np.asarray(result.gradient, dtype=float), result.conv_norms
        return np.asarray(result, dtype=float), {}

    omega = np.array(initial.omega if isinstance(initial, StencilWeights) else initial, dtype=float).ravel()
    sink = iteration_sink or _log_iteration
    J = float(f(omega))
    g, _ = evaluate_gradient(omega)
    g_norm = float(np.linalg.norm(g))
    H = max(g_norm, np.finfo(float).tiny) * np.eye(omega.size)
    state = OptimizerState(omega=omega, H=H, J_history=[J], grad_norm=g_norm, status="max_iterations")
    started = time.perf_counter()
    curvature_scale: Optional[float] = None
    restarted_here = False

    if not np.isfinite(J):
        state.status, state.message = "failed", "objective is not finite at the initial weights"
        return state

    while True:
        if g_norm < grad_tol:
            state.status, state.message = "converged", f"gradient norm {g_norm:.3e} < {grad_tol:.1e}"
            break
        if state.kappa >= kappa_max:
            state.status = "max_iterations" if kappa_max > 0 else "skipped"
            state.message = f"reached kappa_max={kappa_max}"
            break

        if direction_override is not None:
            sigma = np.asarray(direction_override(omega, g, H), dtype=float)
        else:
            try:
                sigma = _solve_direction(H, g)
            except (linalg.LinAlgError, ValueError):
                logger.warning("⚠️ Hessian approximation lost definiteness; resetting to scaled identity")
                H = g_norm * np.eye(omega.size)
                sigma = _solve_direction(H, g)

        try:
            rho, trial, J_trial = _line_search(f, omega, sigma, J, rho_min)
        except LineSearchFailure as exc:
            if restarted_here or state.restarts >= max_restarts:
                state.status, state.message = "failed", str(exc)
                logger.info("❌ %s at iteration %d (J=%.6e)", exc, state.kappa, J)
                break
            gamma = curvature_scale if curvature_scale is not None else g_norm
            H = max(gamma, np.finfo(float).tiny) * np.eye(omega.size)
            state.restarts += 1
            restarted_here = True
            logger.info("🔄 %s at iteration %d; restarting H from %.3e I", exc, state.kappa, gamma)
            continue

        g_trial, conv_norms = evaluate_gradient(trial)
        step, change = trial - omega, g_trial - g
        updated = _bfgs_update(H, step, change)
        if updated is not None:
            H = updated
            curvature_scale = float(change @ change) / float(step @ change)
        omega, J, g = trial, J_trial, g_trial
        g_norm = float(np.linalg.norm(g))
        restarted_here = False
        state.kappa += 1
        state.rho = rho
        state.J_history.append(J)
        sink(
            {
                "kappa": state.kappa,
                "J": J,
                "grad_norm": g_norm,
                "rho": rho,
                "H_updated": updated is not None,
                "restarts": state.restarts,
                "omega": omega.tolist(),
                "conv_norms": {str(level): norm for level, norm in sorted(conv_norms.items())},
                "elapsed": time.perf_counter() - started,
            }
        )

    state.omega, state.H, state.grad_norm = omega, H, g_norm
    return state
