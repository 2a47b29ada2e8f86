"""
Scheme Model - Adams-Bashforth multistep schemes

An s-step Adams-Bashforth scheme advances y' = f(y) by

    y_{m+1} = y_m + h * sum_{j=0}^{s-1} alpha_j f(y_{m-j})

The coefficients are produced by ``solvers.multistep.adams_bashforth``; this
module only holds and validates them.
"""

from dataclasses import dataclass
from typing import Any, Dict, Mapping

import numpy as np

MAX_STEPS = 8


@dataclass(frozen=True)
class AbScheme:
    """
    Example:
        >>> AbScheme(s=2, alpha=[1.5, -0.5]).alpha.sum()
        1.0
    """

    s: int
    alpha: np.ndarray

    def __post_init__(self):
        if int(self.s) != self.s or not 1 <= self.s <= MAX_STEPS:
            raise ValueError(f"Number of steps must be in 1..{MAX_STEPS}, got: {self.s}")
        alpha = np.array(self.alpha, dtype=float).ravel()
        if alpha.size != self.s:
            raise ValueError(f"Expected {self.s} coefficients, got {alpha.size}")
        if abs(alpha.sum() - 1.0) > 1e-12:
            raise ValueError(f"Coefficients must sum to 1 (consistency), got {alpha.sum()!r}")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AbScheme):
            return NotImplemented
        return self.s == other.s and np.array_equal(self.alpha, other.alpha)

    def __hash__(self) -> int:
        return hash((self.s, self.alpha.tobytes()))

    def to_dict(self) -> Dict[str, Any]:
        return {"s": self.s, "alpha": self.alpha.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AbScheme":
        return cls(s=int(data["s"]), alpha=data["alpha"])

    def __str__(self) -> str:
        return f"AB{self.s}(" + ", ".join(f"{a:.6g}" for a in self.alpha) + ")"
