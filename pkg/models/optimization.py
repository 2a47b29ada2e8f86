"""
Optimization Model - Loss gradients, backpropagated errors, optimizer state
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from models.grid import StencilWeights

OPTIMIZER_STATUSES = ("converged", "max_iterations", "failed", "skipped")


@dataclass
class DeltaField:
    """
    Backpropagated errors for one recurrent step q.

    Keys are absolute time levels m. ``plus`` and ``input`` cover the
    recurrent levels s-1..s-1+q, ``conv`` additionally covers the seeded
    levels 0..s-2. Arrays have shape (T, N+1) except ``rows``, whose
    flattening is the assignment-layer error.
    """

    q: int
    plus: Dict[int, np.ndarray] = field(default_factory=dict)
    conv: Dict[int, np.ndarray] = field(default_factory=dict)
    input: Dict[int, np.ndarray] = field(default_factory=dict)
    rows: Dict[int, np.ndarray] = field(default_factory=dict)     # reshape-layer errors, (T, N+1, n)

    def conv_norms(self) -> Dict[int, float]:
        """Per-level ||delta^C||_2 summed over the training cases."""
        return {m: float(np.sum(np.linalg.norm(v, axis=-1))) for m, v in sorted(self.conv.items())}


@dataclass
class LossGradient:
    """Value of J and its gradient with respect to omega = [w1; w2]."""

    value: float
    gradient: np.ndarray
    conv_norms: Dict[int, float] = field(default_factory=dict)   # ||delta^C|| per level, last q
    deltas: Optional[List[DeltaField]] = field(default=None, repr=False)

    def __post_init__(self):
        self.gradient = np.asarray(self.gradient, dtype=float).ravel()

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.gradient))


@dataclass
class OptimizerState:
    """
    BFGS iterate.

    H is the approximate Hessian (not its inverse). ``J_history`` starts with
    J(omega^0) and gains one entry per accepted step.
    """

    omega: np.ndarray
    H: np.ndarray
    kappa: int = 0
    rho: float = 1.0
    J_history: List[float] = field(default_factory=list)
    grad_norm: float = float("nan")
    restarts: int = 0  # Hessian resets after failed line searches
    status: str = "max_iterations"
    message: str = ""

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float).ravel()
        self.H = np.asarray(self.H, dtype=float)
        if self.H.shape != (self.omega.size, self.omega.size):
            raise ValueError(f"H must be {self.omega.size}x{self.omega.size}, got {self.H.shape}")
        if self.status not in OPTIMIZER_STATUSES:
            raise ValueError(f"Unknown optimizer status: {self.status}")

    @property
    def weights(self) -> StencilWeights:
        return StencilWeights.from_omega(self.omega)

    @property
    def J(self) -> float:
        return self.J_history[-1] if self.J_history else float("nan")

    @property
    def succeeded(self) -> bool:
        return self.status != "failed"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "omega": self.omega.tolist(),
            "kappa": self.kappa,
            "rho": self.rho,
            "J_history": list(self.J_history),
            "grad_norm": self.grad_norm,
            "restarts": self.restarts,
            "status": self.status,
            "message": self.message,
        }
