import os
import sys

import numpy as np
import pytest

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from models.errors import ShapeError
from models.grid import Grid, StencilWeights
from models.problem import PdeProblem, TrainingSet
from solvers.multistep import adams_bashforth, critical_timestep
from solvers.network import GatherMap, gather_rows
from solvers.stencil import DiffOperator, centered_weights
from solvers.training import TrainingProblem, backprop, bfgs_minimize, loss
from utils.data_generator import generate_training_set


def _setup(s, Q, T=2, N=12, n=5, seed=0, nu=1e-2, h_t=0.004):
    problem = PdeProblem(c=1.0, nu=nu)
    grid = Grid(N=N, n=n)
    training = generate_training_set(problem, N, h_t, s, Q, T, p=2, seed=seed)
    return problem, grid, adams_bashforth(s), training, h_t


def test_loss_zero_for_exact_scheme():
    # c = nu = 0: the operator vanishes and so does the exact evolution
    problem = PdeProblem(c=0.0, nu=0.0)
    grid = Grid(N=12, n=3)
    training = generate_training_set(problem, 12, 0.01, 2, 3, 2, p=2, seed=4)
    omega = np.random.default_rng(0).normal(size=6)
    assert loss(omega, training, adams_bashforth(2), grid, problem, 0.01, 3) == 0.0
    result = backprop(omega, training, adams_bashforth(2), grid, problem, 0.01, 3)
    assert result.value == 0.0
    assert np.all(result.gradient == 0.0)
    print("✓ zero residual gives zero loss and gradient")


def test_loss_zero_for_constant_data():
    problem = PdeProblem(c=1.0, nu=0.0)
    grid = Grid(N=12, n=3)
    training = generate_training_set(problem, 12, 0.01, 2, 1, 1, p=2, seed=4, max_mode=0)
    assert loss(centered_weights(3).omega, training, adams_bashforth(2), grid, problem, 0.01, 1) == pytest.approx(0.0, abs=1e-28)


def test_loss_single_step_hand_computed(rng):
    problem = PdeProblem(c=1.0, nu=0.05)
    grid = Grid(N=6, n=3)
    h_t = 0.01
    cases = rng.normal(size=(1, 7, 2))
    training = TrainingSet(cases=cases, steps=1, horizon=1, h_t=h_t, decay_rate=2, seed=0)
    weights = StencilWeights(w1=rng.normal(size=3), w2=rng.normal(size=3))
    u0, u1 = cases[0, :, 0], cases[0, :, 1]
    Z = gather_rows(GatherMap.for_grid(grid), u0)
    w_eff = -(problem.c / grid.h_x) * weights.w1 + (problem.nu / grid.h_x**2) * weights.w2
    residual = u0 + h_t * Z @ w_eff - u1
    expected = 0.5 * residual @ residual
    scheme = adams_bashforth(1)
    assert loss(weights.omega, training, scheme, grid, problem, h_t, 1) == pytest.approx(expected, rel=1e-13)

    g = h_t * Z.T @ residual
    expected_grad = np.concatenate([-(problem.c / grid.h_x) * g, (problem.nu / grid.h_x**2) * g])
    result = backprop(weights.omega, training, scheme, grid, problem, h_t, 1)
    assert np.allclose(result.gradient, expected_grad, rtol=1e-12, atol=1e-14)


def test_loss_doubles_with_duplicated_case():
    problem, grid, scheme, training, h_t = _setup(2, 3, T=1)
    doubled = TrainingSet(
        cases=np.concatenate([training.cases, training.cases]), steps=2, horizon=3,
        h_t=h_t, decay_rate=2, seed=0,
    )
    omega = centered_weights(5).omega
    single = loss(omega, training, scheme, grid, problem, h_t, 3)
    assert loss(omega, doubled, scheme, grid, problem, h_t, 3) == pytest.approx(2 * single, rel=1e-14)


def test_loss_shape_errors():
    problem, grid, scheme, training, h_t = _setup(2, 3)
    with pytest.raises(ShapeError):
        loss(centered_weights(5).omega, training, adams_bashforth(3), grid, problem, h_t, 3)
    with pytest.raises(ShapeError):
        loss(centered_weights(5).omega, training, scheme, grid, problem, h_t, 4)
    with pytest.raises(ShapeError):
        loss(centered_weights(3).omega, training, scheme, grid, problem, h_t, 3)


@pytest.mark.parametrize("s,Q,seed", [
    (2, 1, 0), (2, 1, 1), (2, 3, 2), (2, 3, 3), (2, 3, 4),
    (3, 1, 5), (3, 1, 6), (3, 3, 7), (3, 3, 8), (3, 3, 9),
])
def test_gradient_matches_central_differences(s, Q, seed):
    problem, grid, scheme, training, h_t = _setup(s, Q, seed=seed)
    rng = np.random.default_rng(seed)
    omega = centered_weights(grid.n).omega + 0.1 * rng.normal(size=2 * grid.n)
    gradient = backprop(omega, training, scheme, grid, problem, h_t, Q).gradient

    eps = 1e-6
    numeric = np.empty_like(omega)
    for i in range(omega.size):
        e = np.zeros_like(omega)
        e[i] = eps
        numeric[i] = (
            loss(omega + e, training, scheme, grid, problem, h_t, Q)
            - loss(omega - e, training, scheme, grid, problem, h_t, Q)
        ) / (2 * eps)
    assert np.max(np.abs(numeric - gradient)) / np.max(np.abs(gradient)) < 1e-5


def test_gradient_separates_over_cases():
    problem, grid, scheme, training, h_t = _setup(3, 3, T=3)
    omega = centered_weights(grid.n).omega + 0.05
    total = backprop(omega, training, scheme, grid, problem, h_t, 3)
    parts = [backprop(omega, training.subset([tau]), scheme, grid, problem, h_t, 3) for tau in range(3)]
    summed = sum(part.gradient for part in parts)
    scale = np.max(np.abs(total.gradient))
    assert np.max(np.abs(total.gradient - summed)) <= 1e-13 * max(scale, 1.0)
    assert total.value == pytest.approx(sum(part.value for part in parts), rel=1e-13)


def test_backprop_keeps_delta_fields():
    problem, grid, scheme, training, h_t = _setup(3, 3)
    omega = centered_weights(grid.n).omega + 0.05
    result = backprop(omega, training, scheme, grid, problem, h_t, 3, keep_deltas=True)
    assert len(result.deltas) == 3
    last = result.deltas[-1]
    # delta^+ seeded with the residual at the newest recurrent level
    assert sorted(last.plus) == [2, 3, 4]
    assert sorted(last.conv) == [0, 1, 2, 3, 4]
    assert last.rows[4].shape == (2, grid.num_points, grid.n)
    assert sorted(result.conv_norms) == [0, 1, 2, 3, 4]
    first = result.deltas[0]
    assert sorted(first.plus) == [2]


def _quadratic(dim=6, seed=3):
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    A = basis @ np.diag(np.linspace(1.0, 3.0, dim)) @ basis.T
    return A, (lambda w: 0.5 * w @ A @ w), (lambda w: A @ w), rng.normal(size=dim)


def test_bfgs_quadratic_converges():
    A, f, grad, start = _quadratic()
    state = bfgs_minimize(start, f, kappa_max=50, gradient=grad)
    assert state.grad_norm < 1e-8
    assert np.linalg.norm(state.omega) < 1e-7
    assert all(b < a for a, b in zip(state.J_history, state.J_history[1:]))
    assert np.linalg.eigvalsh(state.H).min() > 0


def test_bfgs_zero_gradient_start():
    A, f, grad, _ = _quadratic()
    state = bfgs_minimize(np.zeros(6), f, kappa_max=10, gradient=grad)
    assert state.status == "converged"
    assert state.kappa == 0
    assert np.array_equal(state.omega, np.zeros(6))


def test_bfgs_line_search_failure_keeps_best():
    A, f, grad, start = _quadratic()
    ascent = lambda omega, g, H: g
    state = bfgs_minimize(start, f, kappa_max=10, gradient=grad, direction_override=ascent)
    assert state.status == "failed"
    assert state.kappa == 0
    assert state.restarts == 1                   # one reset, then the retry fails too
    assert np.array_equal(state.omega, start)
    assert "rho" in state.message


def test_bfgs_line_search_failure_without_restarts():
    A, f, grad, start = _quadratic()
    state = bfgs_minimize(start, f, kappa_max=10, gradient=grad,
                          direction_override=lambda omega, g, H: g, max_restarts=0)
    assert state.status == "failed"
    assert state.restarts == 0
    with pytest.raises(ValueError):
        bfgs_minimize(start, f, kappa_max=10, gradient=grad, max_restarts=-1)


def test_bfgs_restart_recovers_from_bad_direction():
    A, f, grad, start = _quadratic()
    calls = []

    def ascent_once(omega, g, H):
        calls.append(H.copy())
        if len(calls) == 1:
            return g
        return np.linalg.solve(H, -g)

    state = bfgs_minimize(start, f, kappa_max=50, gradient=grad, direction_override=ascent_once)
    assert state.restarts == 1
    assert state.status != "failed"
    assert state.kappa > 0
    assert state.J < state.J_history[0]
    # before any accepted step the reset falls back to ||grad J|| I
    assert np.allclose(calls[1], np.linalg.norm(grad(start)) * np.eye(start.size))


def test_bfgs_zero_iterations_is_skipped():
    A, f, grad, start = _quadratic()
    state = bfgs_minimize(start, f, kappa_max=0, gradient=grad)
    assert state.status == "skipped"
    assert np.array_equal(state.omega, start)


def test_bfgs_requires_gradient_for_plain_objective():
    with pytest.raises(ValueError):
        bfgs_minimize(np.zeros(2), lambda w: 0.0, kappa_max=1)


def _training_problem():
    problem = PdeProblem(c=1.0, nu=1e-2)
    grid = Grid(N=16, n=5)
    scheme = adams_bashforth(2)
    h_t = 1.1 * critical_timestep(scheme, DiffOperator(grid, centered_weights(5), problem))
    training = generate_training_set(problem, 16, h_t, 2, 3, 3, p=2, seed=11)
    return TrainingProblem(training, scheme, grid, problem, h_t)


def test_bfgs_training_monotone_and_deterministic():
    records = []
    first = bfgs_minimize(centered_weights(5), _training_problem(), kappa_max=30, iteration_sink=records.append)
    second = bfgs_minimize(centered_weights(5), _training_problem(), kappa_max=30)
    assert all(b < a for a, b in zip(first.J_history, first.J_history[1:]))
    assert first.J <= first.J_history[0]
    assert np.array_equal(first.omega, second.omega)
    assert np.linalg.eigvalsh(first.H).min() > 0
    assert len(records) == first.kappa
    if records:
        assert set(records[0]) >= {"kappa", "J", "grad_norm", "rho", "omega", "conv_norms"}


def test_bfgs_training_strictly_decreasing_over_long_run():
    records = []
    state = bfgs_minimize(centered_weights(5), _training_problem(), kappa_max=1000, grad_tol=0.0,
                          iteration_sink=records.append)
    history = state.J_history
    assert len(history) == state.kappa + 1 == len(records) + 1
    assert all(b < a for a, b in zip(history, history[1:]))
    assert [r["J"] for r in records] == history[1:]
    # only the iteration cap or an exhausted line search ends a run without a gradient stop
    assert state.status in ("max_iterations", "failed")
    if state.status == "failed":
        assert state.restarts >= 1
    print(f"✓ J strictly decreasing over {state.kappa} accepted steps ({state.status})")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
