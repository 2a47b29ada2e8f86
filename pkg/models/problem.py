"""
Problem Model - The periodic advection-diffusion equation and its data

Defines the PDE parameters and the two containers used to describe
solutions: a finite Fourier series for the exact solution and a batch of
sampled grid trajectories used as training data.

Key Attributes:
    - PdeProblem: advection speed c, diffusivity nu, period P
    - FourierData: integer modes and complex coefficients of u(x, 0)
    - TrainingSet: T sampled trajectories of s + Q time levels each
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class PdeProblem:
    """
    u_t + c u_x = nu u_xx on a periodic domain of length ``period``.

    Example:
        >>> problem = PdeProblem(c=1.0, nu=1e-4)
        >>> problem.period
        1.0
    """

    c: float = 1.0
    nu: float = 0.0
    period: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.c):
            raise ValueError(f"Advection speed must be finite, got: {self.c}")
        if not np.isfinite(self.nu) or self.nu < 0:
            raise ValueError(f"Diffusivity must be non-negative, got: {self.nu}")
        if not np.isfinite(self.period) or self.period <= 0:
            raise ValueError(f"Period must be positive, got: {self.period}")

    def wavenumber(self, eta):
        """Angular wavenumber 2*pi*eta/P for an integer mode (or array of modes)."""
        return 2.0 * np.pi * np.asarray(eta, dtype=float) / self.period

    def mode_decay(self, eta, t: float):
        """Factor multiplying b_eta after time t: exp(-i k c t - k^2 nu t)."""
        k = self.wavenumber(eta)
        return np.exp(-1j * k * self.c * t - k * k * self.nu * t)

    def to_dict(self) -> Dict[str, Any]:
        return {"c": self.c, "nu": self.nu, "period": self.period}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PdeProblem":
        return cls(c=float(data["c"]), nu=float(data["nu"]), period=float(data.get("period", 1.0)))

    def __str__(self) -> str:
        return f"PdeProblem(c={self.c:g}, nu={self.nu:g}, P={self.period:g})"


@dataclass(frozen=True)
class FourierData:
    """
    Finite Fourier series sum_eta b_eta exp(2 pi i eta x / P).

    ``modes`` holds distinct integers in ascending order and ``coeffs`` the
    matching complex coefficients. Real-valued data satisfies
    b_{-eta} = conj(b_eta).
    """

    modes: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=np.int64).ravel()
        coeffs = np.asarray(self.coeffs, dtype=complex).ravel()
        if modes.shape != coeffs.shape:
            raise ValueError(f"Got {modes.size} modes but {coeffs.size} coefficients")
        order = np.argsort(modes, kind="stable")
        modes, coeffs = modes[order], coeffs[order]
        if modes.size and np.any(np.diff(modes) == 0):
            raise ValueError("Fourier modes must be distinct")
        modes.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_nonnegative(cls, coeffs: Sequence[complex]) -> "FourierData":
        """Build a real-valued series from b_0..b_K, filling b_{-eta} = conj(b_eta)."""
        half = np.asarray(coeffs, dtype=complex).ravel()
        if half.size == 0:
            raise ValueError("At least the mean coefficient b_0 is required")
        positive = np.arange(1, half.size)
        modes = np.concatenate([-positive[::-1], [0], positive])
        values = np.concatenate([np.conj(half[1:][::-1]), [half[0].real], half[1:]])
        return cls(modes=modes, coeffs=values)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, complex]) -> "FourierData":
        items = sorted(mapping.items())
        return cls(modes=[k for k, _ in items], coeffs=[v for _, v in items])

    @property
    def eta_max(self) -> int:
        return int(np.max(np.abs(self.modes))) if self.modes.size else 0

    def coefficient(self, eta: int) -> complex:
        hit = np.nonzero(self.modes == eta)[0]
        return complex(self.coeffs[hit[0]]) if hit.size else 0j

    def is_conjugate_symmetric(self, atol: float = 0.0) -> bool:
        for eta, value in zip(self.modes, self.coeffs):
            if abs(self.coefficient(-int(eta)) - np.conj(value)) > atol:
                return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "modes": [int(m) for m in self.modes],
            "coeffs": [[float(v.real), float(v.imag)] for v in self.coeffs],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FourierData":
        return cls(modes=data["modes"], coeffs=[complex(re, im) for re, im in data["coeffs"]])


@dataclass
class TrainingSet:
    """
    T exact trajectories sampled on the grid.

    ``cases`` has shape (T, N+1, s+Q): case tau, grid point k, time level m.
    Levels 0..s-1 seed the multistep scheme, levels s..s+Q-1 are targets.
    """

    cases: np.ndarray
    steps: int                  # s
    horizon: int                # Q
    h_t: float
    decay_rate: int             # p
    seed: int
    fourier: Optional[Sequence[FourierData]] = field(default=None, repr=False)

    def __post_init__(self):
        self.cases = np.asarray(self.cases, dtype=float)
        if self.cases.ndim != 3:
            raise ValueError(f"Training cases must be 3-D (T, N+1, levels), got shape {self.cases.shape}")
        if self.cases.shape[2] != self.steps + self.horizon:
            raise ValueError(
                f"Expected s+Q={self.steps + self.horizon} levels, got {self.cases.shape[2]}"
            )
        if self.h_t <= 0:
            raise ValueError(f"Timestep must be positive, got: {self.h_t}")

    @property
    def num_cases(self) -> int:
        return self.cases.shape[0]

    @property
    def num_points(self) -> int:
        return self.cases.shape[1]

    @property
    def kickstart(self) -> np.ndarray:
        """Exact seed levels, shape (T, N+1, s)."""
        return self.cases[:, :, : self.steps]

    @property
    def targets(self) -> np.ndarray:
        """Exact target levels, shape (T, N+1, Q)."""
        return self.cases[:, :, self.steps:]

    def subset(self, indices: Sequence[int]) -> "TrainingSet":
        """The cases at ``indices``, with their Fourier data when it is known."""
        indices = list(indices)
        return TrainingSet(
            cases=self.cases[indices],
            steps=self.steps,
            horizon=self.horizon,
            h_t=self.h_t,
            decay_rate=self.decay_rate,
            seed=self.seed,
            fourier=[self.fourier[i] for i in indices] if self.fourier is not None else None,
        )

    def __str__(self) -> str:
        return (
            f"TrainingSet(T={self.num_cases}, N+1={self.num_points}, s={self.steps}, "
            f"Q={self.horizon}, p={self.decay_rate}, h_t={self.h_t:.6g})"
        )
