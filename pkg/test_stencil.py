import os
import sys
from fractions import Fraction

import numpy as np
import pytest
from scipy import linalg

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from models.errors import ShapeError
from models.grid import Grid, StencilWeights
from models.problem import PdeProblem
from solvers.stencil import (
    DiffOperator,
    apply_operator,
    centered_weights,
    collocation_weights_exact,
    eigenvalue_modes,
    lagrange_collocation_weights,
    lagrange_weights,
    operator_eigenvalues,
    poly_mul,
)


def test_poly_mul_exact():
    assert poly_mul([Fraction(1), Fraction(1)], [Fraction(-1), Fraction(1)]) == [-1, 0, 1]
    assert poly_mul([Fraction(1, 2)], [Fraction(2), Fraction(4)]) == [1, 2]


def test_lagrange_three_point_weights():
    assert collocation_weights_exact(3, 1) == (Fraction(-1, 2), Fraction(0), Fraction(1, 2))
    assert collocation_weights_exact(3, 2) == (Fraction(1), Fraction(-2), Fraction(1))
    print("✓ 3-point weights match centered differences")


def test_lagrange_five_point_weights():
    assert collocation_weights_exact(5, 1) == tuple(Fraction(v, 12) for v in (1, -8, 0, 8, -1))
    assert collocation_weights_exact(5, 2) == tuple(Fraction(v, 12) for v in (-1, 16, -30, 16, -1))


@pytest.mark.parametrize("n", [3, 5, 7, 9, 11])
def test_lagrange_weight_moments(n):
    r = (n - 1) // 2
    offsets = np.arange(-r, r + 1)
    w1 = lagrange_collocation_weights(n, 1)
    w2 = lagrange_collocation_weights(n, 2)
    assert abs(w1.sum()) < 1e-12
    assert abs(w2.sum()) < 1e-12
    assert abs(w1 @ offsets - 1.0) < 1e-12
    assert abs(w2 @ offsets**2 - 2.0) < 1e-12
    # symmetry: w1 odd, w2 even
    assert np.allclose(w1, -w1[::-1], atol=1e-14)
    assert np.allclose(w2, w2[::-1], atol=1e-14)


@pytest.mark.parametrize("n,order", [(2, 1), (4, 2), (1, 1), (3, 3), (5, 0)])
def test_lagrange_invalid_arguments(n, order):
    with pytest.raises(ValueError):
        lagrange_collocation_weights(n, order)


def test_centered_weights_padding():
    weights = centered_weights(7)
    assert weights.w1.tolist() == [0, 0, -0.5, 0, 0.5, 0, 0]
    assert weights.w2.tolist() == [0, 0, 1, -2, 1, 0, 0]
    assert centered_weights(3) == lagrange_weights(3)


def test_apply_operator_matches_dense_circulant(dense_operator, rng):
    grid = Grid(N=20, n=5)
    problem = PdeProblem(c=1.0, nu=1e-2)
    weights = StencilWeights(w1=rng.normal(size=5), w2=rng.normal(size=5))
    op = DiffOperator(grid, weights, problem)
    u = rng.normal(size=grid.num_points)
    D = dense_operator(op.stencil, grid.num_points)
    assert np.allclose(apply_operator(op, u), D @ u, rtol=1e-13, atol=1e-10)
    batch = rng.normal(size=(3, grid.num_points))
    assert np.allclose(apply_operator(op, batch), batch @ D.T, rtol=1e-13, atol=1e-10)
    print("✓ circulant application agrees with dense assembly")


def test_apply_operator_constant_vector_centered():
    grid = Grid(N=16, n=3)
    op = DiffOperator(grid, centered_weights(3), PdeProblem(c=1.0, nu=0.3))
    assert np.allclose(apply_operator(op, np.full(grid.num_points, 2.5)), 0.0, atol=1e-12)


def test_apply_operator_shape_error():
    op = DiffOperator(Grid(N=16, n=3), centered_weights(3), PdeProblem())
    with pytest.raises(ShapeError):
        apply_operator(op, np.zeros(16))


def test_operator_width_mismatch():
    with pytest.raises(ShapeError):
        DiffOperator(Grid(N=16, n=5), centered_weights(3), PdeProblem())


def test_eigenvalue_modes_cover_all_frequencies():
    for N in (8, 9, 51, 101):
        modes = eigenvalue_modes(N)
        assert modes.size == N + 1
        assert sorted(np.mod(modes, N + 1).tolist()) == list(range(N + 1))


def test_eigenvalues_match_dense_spectrum(dense_operator, rng):
    grid = Grid(N=14, n=5)
    weights = StencilWeights(w1=rng.normal(size=5), w2=rng.normal(size=5))
    op = DiffOperator(grid, weights, PdeProblem(c=1.0, nu=1e-2))
    ours = operator_eigenvalues(op)
    dense = linalg.eigvals(dense_operator(op.stencil, grid.num_points))
    for lam in ours:
        assert np.min(np.abs(dense - lam)) < 1e-8
    for lam in dense:
        assert np.min(np.abs(ours - lam)) < 1e-8


def test_eigenvalues_centered_advection_are_imaginary():
    grid = Grid(N=50, n=3)
    op = DiffOperator(grid, centered_weights(3), PdeProblem(c=1.0, nu=0.0))
    lam = operator_eigenvalues(op)
    assert np.max(np.abs(lam.real)) < 1e-12
    modes = eigenvalue_modes(grid.N)
    expected = -1j * np.sin(2 * np.pi * modes / grid.num_points) / grid.h_x
    assert np.allclose(lam, expected, atol=1e-10)


@pytest.mark.parametrize("N", [51, 101, 201])
def test_eigenvalues_centered_advection_diffusion_closed_form(N):
    grid = Grid(N=N, n=3)
    c, nu = 1.0, 1e-2
    op = DiffOperator(grid, centered_weights(3), PdeProblem(c=c, nu=nu))
    theta = 2 * np.pi * eigenvalue_modes(N) / grid.num_points
    expected = -1j * (c / grid.h_x) * np.sin(theta) + (2 * nu / grid.h_x**2) * (np.cos(theta) - 1)
    lam = operator_eigenvalues(op)
    assert np.max(np.abs(lam - expected)) <= 1e-12 * np.max(np.abs(expected))
    assert np.max(lam.real) <= 1e-12 * np.max(np.abs(expected))


def test_eigenvalues_centered_diffusion_are_nonpositive():
    grid = Grid(N=40, n=7)
    op = DiffOperator(grid, centered_weights(7), PdeProblem(c=0.0, nu=1e-2))
    lam = operator_eigenvalues(op)
    assert np.max(np.abs(lam.imag)) < 1e-10
    assert np.max(lam.real) <= 1e-12
    assert abs(operator_eigenvalues(op)[eigenvalue_modes(grid.N) == 0][0]) < 1e-12


def test_stencil_weights_roundtrip_and_validation():
    weights = lagrange_weights(5)
    assert StencilWeights.from_dict(weights.to_dict()) == weights
    assert StencilWeights.from_omega(weights.omega) == weights
    with pytest.raises(ValueError):
        StencilWeights(w1=[1.0, 2.0], w2=[1.0, 2.0])
    with pytest.raises(ValueError):
        StencilWeights(w1=[1.0, 2.0, 3.0], w2=[1.0, 2.0, 3.0, 4.0, 5.0])


def test_grid_validation():
    grid = Grid(N=101, n=9)
    assert grid.radius == 4
    assert grid.num_points == 102
    assert abs(grid.h_x - 1 / 102) < 1e-16
    with pytest.raises(ValueError):
        Grid(N=4, n=5)
    with pytest.raises(ValueError):
        Grid(N=10, n=4)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
