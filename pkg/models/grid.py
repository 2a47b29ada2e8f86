"""
Grid Model - Periodic spatial grid and stencil weight vectors

Key Attributes:
    - Grid: N+1 equispaced points x_k = k*h_x on [0, P), stencil width n
    - StencilWeights: the trainable pair (w1, w2) approximating d/dx and d2/dx2
"""

from dataclasses import dataclass
from typing import Any, Dict, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class Grid:
    """
    Periodic grid with N+1 points and an odd, centered stencil of width n.

    Example:
        >>> grid = Grid(N=101, n=9)
        >>> grid.radius, grid.num_points
        (4, 102)
    """

    N: int
    n: int = 3
    period: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got: {self.N}")
        if int(self.n) != self.n or self.n < 3 or self.n % 2 == 0:
            raise ValueError(f"Stencil width must be odd and >= 3, got: {self.n}")
        if self.n > self.N:
            raise ValueError(f"Stencil width {self.n} exceeds N={self.N}")
        if not np.isfinite(self.period) or self.period <= 0:
            raise ValueError(f"Period must be positive, got: {self.period}")

    @property
    def num_points(self) -> int:
        return self.N + 1

    @property
    def radius(self) -> int:
        return (self.n - 1) // 2

    @property
    def h_x(self) -> float:
        return self.period / (self.N + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.h_x * np.arange(self.N + 1)

    @property
    def offsets(self) -> np.ndarray:
        """Stencil offsets -r..r in ascending order."""
        return np.arange(-self.radius, self.radius + 1)

    def to_dict(self) -> Dict[str, Any]:
        return {"N": self.N, "n": self.n, "period": self.period}

    def __str__(self) -> str:
        return f"Grid(N={self.N}, n={self.n}, h_x={self.h_x:.6g})"


@dataclass(frozen=True)
class StencilWeights:
    """
    Stencil pair omega = (w1, w2), each of length n.

    Index j of either vector multiplies u at offset j - r. The flat vector
    ``omega`` (w1 followed by w2) is what the optimizer works on.
    """

    w1: np.ndarray
    w2: np.ndarray

    def __post_init__(self):
        w1 = np.array(self.w1, dtype=float).ravel()
        w2 = np.array(self.w2, dtype=float).ravel()
        if w1.shape != w2.shape:
            raise ValueError(f"w1 and w2 must have equal length, got {w1.size} and {w2.size}")
        if w1.size < 3 or w1.size % 2 == 0:
            raise ValueError(f"Stencil length must be odd and >= 3, got: {w1.size}")
        w1.setflags(write=False)
        w2.setflags(write=False)
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)

    @property
    def n(self) -> int:
        return self.w1.size

    @property
    def omega(self) -> np.ndarray:
        return np.concatenate([self.w1, self.w2])

    @classmethod
    def from_omega(cls, omega: Sequence[float]) -> "StencilWeights":
        flat = np.asarray(omega, dtype=float).ravel()
        if flat.size % 2:
            raise ValueError(f"omega must have even length 2n, got: {flat.size}")
        half = flat.size // 2
        return cls(w1=flat[:half], w2=flat[half:])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StencilWeights):
            return NotImplemented
        return np.array_equal(self.w1, other.w1) and np.array_equal(self.w2, other.w2)

    def __hash__(self) -> int:
        return hash((self.w1.tobytes(), self.w2.tobytes()))

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "w1": self.w1.tolist(), "w2": self.w2.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "StencilWeights":
        weights = cls(w1=data["w1"], w2=data["w2"])
        if "n" in data and int(data["n"]) != weights.n:
            raise ValueError(f"Declared n={data['n']} does not match weight length {weights.n}")
        return weights

    def __str__(self) -> str:
        fmt = lambda v: "[" + ", ".join(f"{x:.6g}" for x in v) + "]"
        return f"StencilWeights(n={self.n}, w1={fmt(self.w1)}, w2={fmt(self.w2)})"
