"""
LangGraph Orchestration - Single-experiment workflow

This module runs one ExperimentConfig through a deterministic, traceable
pipeline.

Workflow Steps:
    1. Resolve the timestep from the critical timestep of the centered stencil
    2. Sample the training set
    3. Initialize omega^0 with centered weights and run BFGS
    4. Evaluate trained and untrained weights on the bump problem
    5. Assess stability of the scaled spectrum and error coherence

Uses LangGraph for state management.
"""

import logging
import math
import time as time_module
from functools import lru_cache
from typing import Any, Dict, List, Optional, TypedDict

import numpy as np
from langgraph.graph import END, StateGraph

from models.errors import StencilLearningError
from models.experiment import ExperimentConfig, ExperimentResult
from models.grid import Grid, StencilWeights
from models.optimization import OptimizerState
from models.problem import PdeProblem, TrainingSet
from models.scheme import AbScheme
from solvers.exact_solution import bump_fourier_data
from solvers.evaluation import forward_error_series
from solvers.multistep import adams_bashforth, critical_timestep, stable_mask
from solvers.stencil import DiffOperator, centered_weights, scaled_eigenvalues
from solvers.training import DEFAULT_MAX_RESTARTS, IterationSink, TrainingProblem, bfgs_minimize
from utils.baseline import BaselineMethod
from utils.config_loader import load_config
from utils.data_generator import generate_training_set

logger = logging.getLogger(__name__)

FALLBACK_STEPS = 3


class ExperimentState(TypedDict):
    """
    State object passed between workflow nodes.
    """
    # Inputs
    experiment: ExperimentConfig
    settings: Dict[str, Any]

    # Setup
    problem: PdeProblem
    grid: Grid
    scheme: AbScheme
    h_t: float

    # Training
    training: TrainingSet
    optimizer: OptimizerState
    weights: StencilWeights

    # Evaluation
    times: np.ndarray
    errors: np.ndarray
    baseline_errors: np.ndarray
    eigenvalues: np.ndarray
    stable: bool
    baseline_stable: bool
    coherence: Dict[str, Any]

    # Metadata
    elapsed_seconds: float
    status: str


@lru_cache(maxsize=256)
def _critical_for(
    N: int, n: int, period: float, c: float, nu: float, s: int,
    rel_tol: float, root_tol: float, min_scaled_step: float,
) -> Optional[float]:
    problem = PdeProblem(c=c, nu=nu, period=period)
    op = DiffOperator(Grid(N=N, n=n, period=period), centered_weights(n), problem)
    return critical_timestep(
        adams_bashforth(s), op, rel_tol=rel_tol, root_tol=root_tol, min_scaled_step=min_scaled_step
    )


def resolve_timestep(config: ExperimentConfig, settings: Optional[Dict[str, Any]] = None) -> float:
    """
    multiplier x critical timestep of the centered stencil for (N, n, nu, s).

    When the s-step scheme has no usable stability interval (nu = 0, s = 2)
    the AB3 critical timestep is used instead.
    """
    if config.h_t_override is not None:
        return float(config.h_t_override)
    stability = (settings or load_config())["stability"]
    args = (
        config.N, config.n, config.P, config.c, config.nu,
    )
    tolerances = (
        float(stability["bisection_rel_tol"]),
        float(stability["root_tol"]),
        float(stability["min_scaled_step"]),
    )
    critical = _critical_for(*args, config.s, *tolerances)
    if critical is None:
        logger.info("AB%d has no stable timestep here; using the AB%d critical timestep", config.s, FALLBACK_STEPS)
        critical = _critical_for(*args, FALLBACK_STEPS, *tolerances)
        if critical is None:
            raise StencilLearningError(f"No stable timestep found for {config}")
    if math.isinf(critical):
        raise ValueError("Operator spectrum is zero; give h_t_override explicitly")
    return config.resolve_h_t(critical)


class ExperimentOrchestrator:
    """
    LangGraph-based orchestrator for one training-and-evaluation run.

    Example:
        >>> orchestrator = ExperimentOrchestrator()
        >>> result = orchestrator.run(ExperimentConfig(nu=1e-4, N=51, n=5, Q=1, T=1, kappa_max=10))
    """

    def __init__(self, settings: Optional[Dict[str, Any]] = None, iteration_sink: Optional[IterationSink] = None):
        self.settings = settings or load_config()
        self.iteration_sink = iteration_sink
        self.workflow = self._build_workflow()

    def _build_workflow(self):
        graph = StateGraph(ExperimentState)

        graph.add_node("resolve_timestep", self._resolve_timestep)
        graph.add_node("build_training_set", self._build_training_set)
        graph.add_node("train", self._train)
        graph.add_node("evaluate", self._evaluate)
        graph.add_node("assess", self._assess)

        graph.set_entry_point("resolve_timestep")
        graph.add_edge("resolve_timestep", "build_training_set")
        graph.add_edge("build_training_set", "train")
        graph.add_edge("train", "evaluate")
        graph.add_edge("evaluate", "assess")
        graph.add_edge("assess", END)

        return graph.compile()

    def _resolve_timestep(self, state: ExperimentState) -> ExperimentState:
        config = state["experiment"]
        state["problem"] = PdeProblem(c=config.c, nu=config.nu, period=config.P)
        state["grid"] = Grid(N=config.N, n=config.n, period=config.P)
        state["scheme"] = adams_bashforth(config.s)
        state["h_t"] = resolve_timestep(config, state["settings"])
        logger.info("⏱️  h_t = %.10g", state["h_t"])
        return state

    def _build_training_set(self, state: ExperimentState) -> ExperimentState:
        config = state["experiment"]
        state["training"] = generate_training_set(
            state["problem"], config.N, state["h_t"], config.s, config.Q, config.T,
            config.p, config.seed, max_mode=config.max_training_mode,
        )
        logger.info("📊 %s", state["training"])
        return state

    def _train(self, state: ExperimentState) -> ExperimentState:
        config = state["experiment"]
        optimizer_settings = state["settings"]["optimizer"]
        problem = TrainingProblem(state["training"], state["scheme"], state["grid"], state["problem"], state["h_t"])
        initial = centered_weights(config.n)
        logger.info("🔄 BFGS, kappa_max=%d", config.kappa_max)
        result = bfgs_minimize(
            initial,
            problem,
            kappa_max=config.kappa_max,
            rho_min=float(optimizer_settings["rho_min"]),
            grad_tol=float(optimizer_settings["grad_tol"]),
            max_restarts=int(optimizer_settings.get("max_restarts", DEFAULT_MAX_RESTARTS)),
            iteration_sink=self.iteration_sink,
        )
        state["optimizer"] = result
        state["weights"] = result.weights
        logger.info(
            "%s BFGS %s after %d iterations (%d restarts): J %.6e -> %.6e",
            "❌" if result.status == "failed" else "✅",
            result.status, result.kappa, result.restarts, result.J_history[0], result.J,
        )
        return state

    def _evaluate(self, state: ExperimentState) -> ExperimentState:
        evaluation = state["settings"]["evaluation"]
        data = bump_fourier_data(int(evaluation["bump_modes"]), float(evaluation["quadrature_abstol"]))
        horizon = float(evaluation["horizon"])
        chunk = int(evaluation["chunk_levels"])
        baseline = BaselineMethod(state["grid"], state["problem"], state["scheme"])

        times, errors = forward_error_series(
            state["weights"], state["problem"], state["grid"], state["scheme"], state["h_t"],
            horizon=horizon, data=data, chunk_levels=chunk,
        )
        if state["weights"] == baseline.weights:
            baseline_errors = errors.copy()
        else:
            _, baseline_errors = baseline.error_series(state["h_t"], horizon=horizon, data=data, chunk_levels=chunk)
        state["times"], state["errors"], state["baseline_errors"] = times, errors, baseline_errors
        state["baseline_stable"] = baseline.is_stable(state["h_t"], float(state["settings"]["stability"]["root_tol"]))
        return state

    def _assess(self, state: ExperimentState) -> ExperimentState:
        settings = state["settings"]
        root_tol = float(settings["stability"]["root_tol"])
        op = DiffOperator(state["grid"], state["weights"], state["problem"])
        state["eigenvalues"] = scaled_eigenvalues(op, state["h_t"])
        state["stable"] = bool(np.all(stable_mask(state["scheme"], state["eigenvalues"], root_tol)))
        state["coherence"] = assess_coherence(
            state["times"], state["errors"], state["stable"], state["optimizer"],
            growth_threshold=float(settings["evaluation"]["growth_threshold"]),
            blowup_threshold=float(settings["evaluation"]["blowup_threshold"]),
        )
        state["status"] = "completed"
        logger.info("🎯 verdict: %s", "stable" if state["stable"] else "unstable")
        return state

    def run(self, config: ExperimentConfig) -> ExperimentResult:
        """
        Run the full workflow for one config.

        Optimizer failure is recorded in the result status; evaluation then
        uses the best weights found.
        """
        start_time = time_module.time()
        initial_state = ExperimentState(experiment=config, settings=self.settings, status="running")

        logger.info("=" * 70)
        logger.info("🚀 %s", config)
        logger.info("=" * 70)

        final_state = self.workflow.invoke(initial_state)
        elapsed = time_module.time() - start_time
        optimizer: OptimizerState = final_state["optimizer"]

        logger.info("✅ EXPERIMENT COMPLETE (%.2fs)", elapsed)
        return ExperimentResult(
            config=config,
            weights=final_state["weights"],
            status=optimizer.status,
            message=optimizer.message,
            h_t=final_state["h_t"],
            iterations=optimizer.kappa,
            J_initial=optimizer.J_history[0],
            J_final=optimizer.J,
            grad_norm=optimizer.grad_norm,
            times=final_state["times"],
            errors=final_state["errors"],
            baseline_errors=final_state["baseline_errors"],
            scaled_eigenvalues=final_state["eigenvalues"],
            stable=final_state["stable"],
            baseline_stable=final_state["baseline_stable"],
            coherence=final_state["coherence"],
            elapsed_seconds=elapsed,
        )


def _error_at(times: np.ndarray, errors: np.ndarray, t: float) -> float:
    eligible = np.nonzero(times <= t * (1 + 1e-12))[0]
    return float(errors[eligible[-1]]) if eligible.size else float("nan")


def assess_coherence(
    times: np.ndarray,
    errors: np.ndarray,
    stable: bool,
    optimizer: OptimizerState,
    growth_threshold: float = 1e3,
    blowup_threshold: float = 1e6,
) -> Dict[str, Any]:
    """
    Heuristic agreement between the stability verdict and the error curve.

    ``bounded_growth`` is checked for stable runs whose optimizer did not
    fail; ``blowup_detected`` for unstable runs with training skipped.
    Checks that do not apply are None.
    """
    error_start = _error_at(times, errors, 1.0)
    error_end = float(errors[-1]) if errors.size else float("nan")
    bounded_growth: Optional[bool] = None
    blowup_detected: Optional[bool] = None
    if stable and optimizer.succeeded:
        bounded_growth = bool(error_end <= growth_threshold * error_start)
    if not stable and optimizer.kappa == 0:
        blowup_detected = bool(error_end > blowup_threshold)
    return {
        "growth_threshold": growth_threshold,
        "blowup_threshold": blowup_threshold,
        "error_t1": error_start,
        "error_end": error_end,
        "bounded_growth": bounded_growth,
        "blowup_detected": blowup_detected,
    }


def run_experiment(
    config: ExperimentConfig,
    settings: Optional[Dict[str, Any]] = None,
    iteration_sink: Optional[IterationSink] = None,
) -> ExperimentResult:
    return ExperimentOrchestrator(settings, iteration_sink).run(config)


# Example usage and testing
if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    demo = ExperimentConfig(nu=1e-4, N=51, n=5, s=2, Q=1, T=1, kappa_max=10)
    outcome = run_experiment(demo)
    print(outcome)
