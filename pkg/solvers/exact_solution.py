"""
Exact Solutions - Fourier-series solutions of the periodic advection-diffusion equation

Each mode evolves independently:

    u(x, t) = sum_eta b_eta exp(i k_eta (x - c t) - k_eta^2 nu t),  k_eta = 2 pi eta / P

Key Responsibilities:
    - The smooth compactly supported bump initial condition
    - Fourier coefficients of a periodic function by adaptive quadrature
    - Pointwise evaluation of the series at any (x, t)
    - Sampling the series on the grid, aliasing modes beyond the grid
"""

import logging
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import fft, integrate

from models.errors import QuadratureError
from models.problem import FourierData, PdeProblem

logger = logging.getLogger(__name__)

BUMP_MODES = 300
DEFAULT_ABSTOL = 1e-15
QUADRATURE_LIMIT = 200
# QUADPACK error estimates saturate near this multiple of eps * integral |f|.
ROUNDOFF_FACTOR = 1024.0


def bump_initial(x):
    """
    Periodic bump exp(1 / ((2 y - 1)^2 - 1)) with y = x - floor(x); zero at integers.

    Example:
        >>> round(bump_initial(0.5), 7)
        0.3678794
    """
    x_arr = np.asarray(x, dtype=float)
    y = x_arr - np.floor(x_arr)
    z = (2.0 * y - 1.0) ** 2 - 1.0
    inside = z < 0.0
    values = np.where(inside, np.exp(1.0 / np.where(inside, z, -1.0)), 0.0)
    return float(values) if values.ndim == 0 else values


def _integrate(f, period, weight, omega, abstol):
    """One QUADPACK call; returns (value, error estimate)."""
    kwargs = dict(epsabs=abstol, epsrel=0.0, limit=QUADRATURE_LIMIT, full_output=1)
    if weight is not None:
        kwargs.update(weight=weight, wvar=omega)
    result = integrate.quad(f, 0.0, period, **kwargs)
    return result[0], result[1]


def fourier_coefficients(
    f: Callable[[float], float],
    eta_max: int,
    abstol: float = DEFAULT_ABSTOL,
    period: float = 1.0,
) -> FourierData:
    """
    b_eta = (1/P) integral_0^P f(x) exp(-2 pi i eta x / P) dx for |eta| <= eta_max.

    f is assumed real, so b_{-eta} = conj(b_eta) by construction. Oscillatory
    modes use the cosine/sine weighted QUADPACK rules. An error estimate
    above abstol (plus a round-off floor relative to integral |f|) raises
    QuadratureError naming the worst mode.
    """
    if eta_max < 0:
        raise ValueError(f"eta_max must be non-negative, got: {eta_max}")
    if not abstol > 0:
        raise ValueError(f"abstol must be positive, got: {abstol}")

    scale, _ = _integrate(lambda x: abs(f(x)), period, None, 0.0, abstol)
    floor = ROUNDOFF_FACTOR * np.finfo(float).eps * max(scale, np.finfo(float).tiny)
    allowed = max(abstol, floor)

    half = np.zeros(eta_max + 1, dtype=complex)
    worst_mode, worst_error = 0, 0.0
    for eta in range(eta_max + 1):
        if eta == 0:
            value, error = _integrate(f, period, None, 0.0, abstol)
            half[0] = value / period
        else:
            omega = 2.0 * np.pi * eta / period
            re, re_err = _integrate(f, period, "cos", omega, abstol)
            im, im_err = _integrate(f, period, "sin", omega, abstol)
            half[eta] = complex(re, -im) / period
            error = max(re_err, im_err)
        if error > worst_error:
            worst_mode, worst_error = eta, error

    if worst_error > allowed:
        raise QuadratureError(worst_mode, worst_error, abstol)
    logger.debug("Fourier coefficients up to |eta|=%d, worst error %.3e (mode %d)", eta_max, worst_error, worst_mode)
    return FourierData.from_nonnegative(half)


@lru_cache(maxsize=4)
def bump_fourier_data(eta_max: int = BUMP_MODES, abstol: float = DEFAULT_ABSTOL) -> FourierData:
    """Fourier data of the bump initial condition on the unit period."""
    logger.info("📐 Computing bump Fourier coefficients up to |eta|=%d", eta_max)
    return fourier_coefficients(bump_initial, eta_max, abstol=abstol, period=1.0)


def mode_coefficients_at(problem: PdeProblem, data: FourierData, t) -> np.ndarray:
    """b_eta(t); for array t the result has shape (modes, len(t))."""
    t_arr = np.asarray(t, dtype=float)
    decay = problem.mode_decay(np.multiply.outer(data.modes, np.ones_like(t_arr)), t_arr)
    return (data.coeffs.reshape(data.coeffs.shape + (1,) * t_arr.ndim)) * decay


def series_values(problem: PdeProblem, data: FourierData, x, t: float) -> np.ndarray:
    """The complex partial sum at positions x; conjugate-symmetric data keeps it real."""
    if t < 0:
        raise ValueError(f"Time must be non-negative, got: {t}")
    x_arr = np.asarray(x, dtype=float)
    b_t = mode_coefficients_at(problem, data, t)
    k = problem.wavenumber(data.modes)
    return np.exp(1j * np.multiply.outer(x_arr, k)) @ b_t


def exact_solution(problem: PdeProblem, data: FourierData, x, t: float):
    """
    Evaluate the series at positions x (scalar or array) and time t >= 0.

    Example:
        >>> data = FourierData.from_nonnegative([0.0, 0.5])   # cos(2 pi x)
        >>> round(exact_solution(PdeProblem(c=0.0), data, 0.0, 0.0), 12)
        1.0
    """
    values = np.real(series_values(problem, data, x, t))
    return float(values) if values.ndim == 0 else values


def sample_grid_solution(
    problem: PdeProblem,
    data: FourierData,
    N: int,
    h_t: float,
    levels: int,
    start_level: int = 0,
) -> np.ndarray:
    """
    u(x_k, l h_t) for k = 0..N and l = start_level..start_level+levels-1.

    Modes beyond the grid are folded onto eta mod (N+1) (they alias exactly
    at the nodes) and the grid values come from one inverse FFT per level.
    Returns shape (N+1, levels).
    """
    if levels < 1:
        raise ValueError(f"Number of levels must be positive, got: {levels}")
    if h_t < 0:
        raise ValueError(f"Timestep must be non-negative, got: {h_t}")
    size = N + 1
    times = h_t * np.arange(start_level, start_level + levels)
    b_t = mode_coefficients_at(problem, data, times)
    folded = np.zeros((size, levels), dtype=complex)
    np.add.at(folded, np.mod(data.modes, size), b_t)
    grid_values = size * fft.ifft(folded, axis=0)
    return np.ascontiguousarray(grid_values.real)
