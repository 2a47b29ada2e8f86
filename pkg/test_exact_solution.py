import math
import os
import sys

import numpy as np
import pytest

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from models.errors import QuadratureError
from models.problem import FourierData, PdeProblem
from solvers.exact_solution import (
    bump_fourier_data,
    bump_initial,
    exact_solution,
    fourier_coefficients,
    mode_coefficients_at,
    sample_grid_solution,
    series_values,
)
from utils.data_generator import VALID_DECAY_RATES, generate_training_set


def test_bump_values():
    assert abs(bump_initial(0.5) - math.exp(-1.0)) < 1e-15
    assert bump_initial(0.0) == 0.0
    assert bump_initial(3.0) == 0.0
    assert bump_initial(1e-9) == 0.0            # underflows to zero near the integers
    x = np.linspace(-2, 2, 41)
    assert np.allclose(bump_initial(x), bump_initial(x + 1.0))
    assert np.allclose(bump_initial(x), bump_initial(1.0 - x))
    print("✓ bump function values")


def test_fourier_coefficients_single_cosine():
    data = fourier_coefficients(lambda x: math.cos(2 * math.pi * x), eta_max=3)
    assert abs(data.coefficient(1) - 0.5) < 1e-14
    assert abs(data.coefficient(-1) - 0.5) < 1e-14
    for eta in (0, 2, 3, -2, -3):
        assert abs(data.coefficient(eta)) < 1e-14
    assert data.is_conjugate_symmetric()


def test_fourier_coefficients_sine_sign():
    data = fourier_coefficients(lambda x: math.sin(2 * math.pi * x), eta_max=1)
    # sin = (e^{i2pi x} - e^{-i2pi x}) / 2i
    assert abs(data.coefficient(1) - (-0.5j)) < 1e-14
    assert abs(data.coefficient(-1) - 0.5j) < 1e-14


def test_fourier_coefficients_reports_failure():
    wild = lambda x: math.sin(1.0 / (x + 1e-12))
    with pytest.raises(QuadratureError) as info:
        fourier_coefficients(wild, eta_max=2)
    assert info.value.worst_mode in (0, 1, 2)


def test_fourier_coefficients_arguments():
    with pytest.raises(ValueError):
        fourier_coefficients(math.cos, eta_max=-1)
    with pytest.raises(ValueError):
        fourier_coefficients(math.cos, eta_max=1, abstol=0.0)


def test_bump_coefficients_decay():
    data = bump_fourier_data()
    assert data.eta_max == 300
    assert data.is_conjugate_symmetric()
    high = np.abs(data.coeffs[np.abs(data.modes) >= 250])
    assert np.all(high < 1e-12)
    x = np.linspace(0.0, 1.0, 57, endpoint=False)
    series = exact_solution(PdeProblem(c=1.0, nu=0.0), data, x, 0.0)
    assert np.max(np.abs(series - bump_initial(x))) < 1e-12


def test_exact_solution_single_mode_decay():
    data = FourierData.from_nonnegative([0.0, 0.5])          # cos(2 pi x)
    problem = PdeProblem(c=0.0, nu=0.01)
    t = 3.0
    expected = math.exp(-4 * math.pi**2 * 0.01 * t)
    assert abs(exact_solution(problem, data, 0.0, t) - expected) < 1e-14
    assert abs(exact_solution(problem, data, 0.5, t) + expected) < 1e-14


def test_exact_solution_translates():
    data = FourierData.from_nonnegative([0.1, 0.3 + 0.2j, -0.05j])
    problem = PdeProblem(c=1.0, nu=0.0)
    x = np.linspace(0, 1, 13)
    assert np.allclose(exact_solution(problem, data, x, 0.25), exact_solution(problem, data, x - 0.25, 0.0), atol=1e-14)
    with pytest.raises(ValueError):
        exact_solution(problem, data, x, -1.0)


@pytest.mark.parametrize("t", [0.0, 0.37, 5.0])
def test_series_is_real_for_symmetric_data(t):
    problem = PdeProblem(c=1.0, nu=1e-4)
    x = np.linspace(0.0, 1.0, 97)
    bump = series_values(problem, bump_fourier_data(), x, t)
    assert np.max(np.abs(bump.imag)) < 1e-12
    training = generate_training_set(problem, N=40, h_t=0.01, s=2, Q=1, T=3, p=0, seed=11)
    for data in training.fourier:
        assert np.max(np.abs(series_values(problem, data, x, t).imag)) < 1e-12


def test_mode_coefficients_shape():
    data = FourierData.from_nonnegative([1.0, 0.5])
    b_t = mode_coefficients_at(PdeProblem(nu=0.1), data, np.array([0.0, 0.5, 1.0]))
    assert b_t.shape == (3, 3)
    assert np.allclose(b_t[:, 0], data.coeffs)


def test_grid_sampling_matches_pointwise():
    data = bump_fourier_data()
    problem = PdeProblem(c=1.0, nu=1e-4)
    N, h_t = 50, 0.013
    grid_values = sample_grid_solution(problem, data, N, h_t, levels=4, start_level=2)
    x = np.arange(N + 1) / (N + 1)
    for column, level in enumerate(range(2, 6)):
        direct = exact_solution(problem, data, x, level * h_t)
        assert np.allclose(grid_values[:, column], direct, atol=1e-12)


def test_grid_sampling_translation_on_grid():
    data = bump_fourier_data()
    N = 50
    h_x = 1.0 / (N + 1)
    values = sample_grid_solution(PdeProblem(c=1.0, nu=0.0), data, N, h_x, levels=3)
    assert np.allclose(values[:, 1], np.roll(values[:, 0], 1), atol=1e-13)
    assert np.allclose(values[:, 2], np.roll(values[:, 0], 2), atol=1e-13)


@pytest.mark.parametrize("p", VALID_DECAY_RATES)
def test_training_set_shape_and_determinism(p):
    problem = PdeProblem(c=1.0, nu=1e-4)
    first = generate_training_set(problem, N=20, h_t=0.01, s=2, Q=3, T=4, p=p, seed=7)
    again = generate_training_set(problem, N=20, h_t=0.01, s=2, Q=3, T=4, p=p, seed=7)
    assert first.cases.shape == (4, 21, 5)
    assert np.array_equal(first.cases, again.cases)
    assert first.decay_rate == p
    other = generate_training_set(problem, N=20, h_t=0.01, s=2, Q=3, T=4, p=p, seed=8)
    assert not np.array_equal(first.cases, other.cases)


def test_training_cases_are_independent_of_count():
    problem = PdeProblem(c=1.0, nu=0.0)
    few = generate_training_set(problem, N=20, h_t=0.01, s=2, Q=1, T=2, p=2, seed=3)
    many = generate_training_set(problem, N=20, h_t=0.01, s=2, Q=1, T=5, p=2, seed=3)
    assert np.array_equal(few.cases, many.cases[:2])


def test_training_coefficients_follow_decay():
    problem = PdeProblem(c=1.0, nu=0.0)
    training = generate_training_set(problem, N=30, h_t=0.01, s=2, Q=1, T=3, p=4, seed=1)
    for data in training.fourier:
        assert data.eta_max == 14
        assert data.is_conjugate_symmetric()
        for eta in range(1, 15):
            assert abs(data.coefficient(eta)) <= eta**-4 + 1e-15
        assert abs(data.coefficient(0).imag) == 0.0


def test_training_subset_keeps_fourier_data():
    problem = PdeProblem(c=1.0, nu=0.0)
    training = generate_training_set(problem, N=20, h_t=0.01, s=2, Q=1, T=4, p=2, seed=5)
    part = training.subset([3, 1])
    assert np.array_equal(part.cases, training.cases[[3, 1]])
    assert part.fourier is not None and len(part.fourier) == 2
    assert part.fourier[0] is training.fourier[3]
    assert part.fourier[1] is training.fourier[1]


def test_training_set_constant_data():
    problem = PdeProblem(c=1.0, nu=1e-2)
    training = generate_training_set(problem, N=20, h_t=0.01, s=3, Q=2, T=2, p=2, seed=0, max_mode=0)
    for tau in range(2):
        assert np.allclose(training.cases[tau], training.cases[tau, 0, 0], atol=1e-15)


def test_training_set_rejects_bad_arguments():
    problem = PdeProblem()
    with pytest.raises(ValueError):
        generate_training_set(problem, N=20, h_t=0.01, s=2, Q=1, T=1, p=3, seed=0)
    with pytest.raises(ValueError):
        generate_training_set(problem, N=20, h_t=0.0, s=2, Q=1, T=1, p=2, seed=0)
    with pytest.raises(ValueError):
        generate_training_set(problem, N=20, h_t=0.01, s=2, Q=1, T=1, p=2, seed=0, max_mode=10)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
