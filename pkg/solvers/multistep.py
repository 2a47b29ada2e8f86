"""
Adams-Bashforth Schemes - Coefficients, time stepping and absolute stability

Key Responsibilities:
    - Exact AB-s coefficients from integrated Lagrange polynomials
    - One AB-s step of the semi-discrete system u' = D u
    - Characteristic roots via companion-matrix eigenvalues
    - Boundary locus of the stability region and region sampling
    - Root-condition stability test and critical-timestep bisection
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from models.errors import (
    DegenerateBoundaryError,
    InsufficientHistoryError,
    RootFindingError,
    ShapeError,
)
from models.scheme import MAX_STEPS, AbScheme
from solvers.stencil import DiffOperator, apply_operator, operator_eigenvalues, poly_mul

logger = logging.getLogger(__name__)

DEFAULT_ROOT_TOL = 1e-12
DEFAULT_BISECTION_TOL = 1e-6
# Below this |lambda|max * h the bisection is resolving root-finder noise on
# the imaginary axis rather than a genuine stability interval.
DEFAULT_MIN_SCALED_STEP = 1e-2


@lru_cache(maxsize=None)
def ab_coefficients_exact(s: int) -> Tuple[Fraction, ...]:
    """
    alpha_l = integral_0^1 prod_{m != l} (tau + m) / (m - l) d tau,
    for l, m in 0..s-1, as exact rationals.
    """
    if int(s) != s or not 1 <= s <= MAX_STEPS:
        raise ValueError(f"Number of steps must be in 1..{MAX_STEPS}, got: {s}")
    alphas = []
    for l in range(s):
        poly = [Fraction(1)]
        for m in range(s):
            if m == l:
                continue
            poly = poly_mul(poly, [Fraction(m, m - l), Fraction(1, m - l)])
        alphas.append(sum(coef / (power + 1) for power, coef in enumerate(poly)))
    return tuple(alphas)


def ab_coefficients(s: int) -> np.ndarray:
    """
    Example:
        >>> ab_coefficients(2)
        array([ 1.5, -0.5])
    """
    return np.array([float(a) for a in ab_coefficients_exact(s)])


def adams_bashforth(s: int) -> AbScheme:
    return AbScheme(s=s, alpha=ab_coefficients(s))


def ab_step(scheme: AbScheme, op: DiffOperator, history: Sequence[np.ndarray], h_t: float) -> np.ndarray:
    """
    Advance u' = D u by one step.

    ``history`` lists the last s levels newest first: history[j] = u_{m-j}.
    """
    if len(history) < scheme.s:
        raise InsufficientHistoryError(f"AB{scheme.s} needs {scheme.s} history levels, got {len(history)}")
    levels = [np.asarray(u, dtype=float) for u in history[: scheme.s]]
    if any(u.shape != levels[0].shape for u in levels):
        raise ShapeError("History levels have inconsistent shapes")
    update = sum(alpha * apply_operator(op, u) for alpha, u in zip(scheme.alpha, levels))
    return levels[0] + h_t * update


def characteristic_polynomial(scheme: AbScheme, xi: complex) -> np.ndarray:
    """Coefficients (highest power first) of z^s - (1 + a0 xi) z^{s-1} - sum_{j>=1} a_j xi z^{s-1-j}."""
    coeffs = np.empty(scheme.s + 1, dtype=complex)
    coeffs[0] = 1.0
    coeffs[1] = -(1.0 + scheme.alpha[0] * xi)
    coeffs[2:] = -scheme.alpha[1:] * xi
    return coeffs


def companion_matrix(scheme: AbScheme, xi) -> np.ndarray:
    """
    Companion matrix M(xi) of the characteristic polynomial.

    xi may be an array; the result then has shape xi.shape + (s, s).
    """
    xi = np.asarray(xi, dtype=complex)
    s = scheme.s
    M = np.zeros(xi.shape + (s, s), dtype=complex)
    M[..., 0, :] = scheme.alpha * xi[..., None]
    M[..., 0, 0] += 1.0
    for row in range(1, s):
        M[..., row, row - 1] = 1.0
    return M


def characteristic_roots(scheme: AbScheme, xi) -> np.ndarray:
    """Roots of the characteristic polynomial, shape xi.shape + (s,)."""
    xi = np.asarray(xi, dtype=complex)
    if not np.all(np.isfinite(xi)):
        raise RootFindingError("Characteristic roots requested for a non-finite xi")
    try:
        roots = np.linalg.eigvals(companion_matrix(scheme, xi))
    except np.linalg.LinAlgError as exc:
        raise RootFindingError(f"Companion eigenvalue solve failed: {exc}") from exc
    if not np.all(np.isfinite(roots)):
        raise RootFindingError("Companion eigenvalue solve returned non-finite roots")
    return roots


def stable_mask(scheme: AbScheme, xi, tol: float = DEFAULT_ROOT_TOL) -> np.ndarray:
    """
    Root condition evaluated elementwise over xi.

    Every root must satisfy |z| <= 1 + tol, and a root within tol of another
    root must satisfy |z| < 1 - tol.
    """
    roots = characteristic_roots(scheme, xi)
    moduli = np.abs(roots)
    violates = moduli > 1.0 + tol
    if scheme.s > 1:
        gaps = np.abs(roots[..., :, None] - roots[..., None, :])
        gaps[..., np.arange(scheme.s), np.arange(scheme.s)] = np.inf
        repeated = np.any(gaps <= tol, axis=-1)
        violates |= repeated & (moduli >= 1.0 - tol)
    return ~np.any(violates, axis=-1)


def is_stable(scheme: AbScheme, xi: complex, tol: float = DEFAULT_ROOT_TOL) -> bool:
    """
    Example:
        >>> is_stable(adams_bashforth(2), -0.5)
        True
    """
    return bool(stable_mask(scheme, xi, tol))


def stability_boundary(scheme: AbScheme, theta):
    """
    Boundary locus xi(theta) = (e^{i s theta} - e^{i (s-1) theta}) /
    sum_l alpha_l e^{i (s-1-l) theta}.

    Accepts a scalar or an array of angles.
    """
    theta_arr = np.asarray(theta, dtype=float)
    z = np.exp(1j * theta_arr)
    s = scheme.s
    numerator = z**s - z ** (s - 1)
    denominator = sum(alpha * z ** (s - 1 - l) for l, alpha in enumerate(scheme.alpha))
    vanishing = np.abs(denominator) < 1e-14
    if np.any(vanishing):
        bad = float(np.atleast_1d(theta_arr)[np.atleast_1d(vanishing)][0])
        raise DegenerateBoundaryError(bad)
    xi = numerator / denominator
    return complex(xi) if np.ndim(xi) == 0 else xi


def stability_region_samples(scheme: AbScheme, samples: int = 256) -> Tuple[np.ndarray, np.ndarray]:
    """Equally spaced angles theta_k = 2 pi k / samples and the boundary points there."""
    if samples < 1:
        raise ValueError(f"Number of samples must be positive, got: {samples}")
    theta = 2.0 * np.pi * np.arange(samples) / samples
    return theta, stability_boundary(scheme, theta)


@dataclass
class StabilityProbe:
    """
    Sampled boundary of the absolute stability region of one scheme.

    Example:
        >>> probe = StabilityProbe.sample(adams_bashforth(3), samples=64)
        >>> probe.contains(-0.1)
        True
    """

    scheme: AbScheme
    theta: np.ndarray
    boundary: np.ndarray
    tol: float = DEFAULT_ROOT_TOL

    @classmethod
    def sample(cls, scheme: AbScheme, samples: int = 256, tol: float = DEFAULT_ROOT_TOL) -> "StabilityProbe":
        theta, boundary = stability_region_samples(scheme, samples)
        return cls(scheme=scheme, theta=theta, boundary=boundary, tol=tol)

    def contains(self, xi) -> np.ndarray:
        mask = stable_mask(self.scheme, xi, self.tol)
        return bool(mask) if np.ndim(mask) == 0 else mask

    @property
    def real_axis_extent(self) -> float:
        """Leftmost real boundary point (e.g. -1 for AB2)."""
        return float(np.min(self.boundary.real))


def critical_timestep(
    scheme: AbScheme,
    op: DiffOperator,
    rel_tol: float = DEFAULT_BISECTION_TOL,
    root_tol: float = DEFAULT_ROOT_TOL,
    min_scaled_step: float = DEFAULT_MIN_SCALED_STEP,
    max_doublings: int = 60,
) -> Optional[float]:
    """
    Largest h with every lambda_eta * h inside the stability region.

    Bisection on [0, h_hi] where h_hi starts at 10 / max|lambda| and doubles
    while still stable. Returns the stable end of the final bracket, ``None``
    when no timestep with max|lambda| * h >= min_scaled_step is stable, and
    ``math.inf`` for an identically zero spectrum.
    """
    eigenvalues = operator_eigenvalues(op)
    radius = float(np.max(np.abs(eigenvalues)))
    if radius == 0.0:
        logger.info("Zero spectrum: every timestep is stable")
        return math.inf

    def stable(h: float) -> bool:
        return bool(np.all(stable_mask(scheme, eigenvalues * h, root_tol)))

    lo, hi = 0.0, 10.0 / radius
    doublings = 0
    while stable(hi):
        lo, hi = hi, 2.0 * hi
        doublings += 1
        if doublings > max_doublings:
            logger.warning("Stability interval unbounded after %d doublings", doublings)
            return math.inf

    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid

    if lo * radius < min_scaled_step:
        logger.debug(
            "AB%d: no stable timestep for this spectrum (bracket [%.3e, %.3e])", scheme.s, lo, hi
        )
        return None
    logger.debug("AB%d critical timestep %.12g (max|lambda| h = %.6f)", scheme.s, lo, lo * radius)
    return lo
