"""
Experiment Model - Sweep configurations and their recorded outcomes

ExperimentConfig is a pydantic model so that CLI flags, JSON files and sweep
grids all go through the same validation. ExperimentResult is a plain
dataclass with the same to_dict/from_dict contract as the other models, used by the
result store.

Key Attributes:
    - PARAMETER_DOMAINS: accepted values for every swept parameter
    - ExperimentConfig: one point of the parameter grid
    - ExperimentResult: weights, optimizer status, error series, eigenvalues
"""

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.grid import StencilWeights

SCHEMA_VERSION = 1

# Accepted values per swept field. kappa_max=0 is the untrained baseline.
PARAMETER_DOMAINS: Dict[str, Tuple[Any, ...]] = {
    "c": (1.0,),
    "nu": (0.0, 1e-4, 1e-2),
    "P": (1.0,),
    "p": (0, 2, 4, 8),
    "N": (51, 101, 201),
    "n": (3, 5, 7, 9, 11),
    "s": (2, 3),
    "h_t_multiplier": (1.0, 1.01, 1.1),
    "Q": (1, 3, 4, 5, 9),
    "T": (1, 10, 100),
    "kappa_max": (0, 10, 100, 1000),
}

PARAMETER_DESCRIPTIONS: Dict[str, str] = {
    "c": "advection speed",
    "nu": "diffusion coefficient",
    "P": "period",
    "p": "decay rate of training-data Fourier coefficients",
    "N": "grid has N+1 nodes",
    "n": "stencil width (nearest neighbours)",
    "s": "steps in the Adams-Bashforth method",
    "h_t_multiplier": "h_t as a multiple of the critical timestep",
    "Q": "recurrent steps in the loss",
    "T": "number of training cases",
    "kappa_max": "maximum quasi-Newton iterations",
}

SWEPT_FIELDS = tuple(PARAMETER_DOMAINS)


class ExperimentConfig(BaseModel):
    """
    One point of the parameter grid.

    Values outside PARAMETER_DOMAINS are rejected unless
    ``allow_out_of_grid`` is set; the offending fields are then listed by
    ``out_of_grid_fields``.

    Example:
        >>> config = ExperimentConfig(nu=1e-4, N=101, n=9, s=2)
        >>> config.resolve_h_t(0.005)
        0.005
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: int = SCHEMA_VERSION
    c: float = 1.0
    nu: float = 0.0
    P: float = 1.0
    p: int = 2
    N: int = 101
    n: int = 3
    s: int = 2
    h_t_multiplier: float = 1.0
    Q: int = 1
    T: int = 1
    kappa_max: int = 100
    seed: int = Field(default=0, ge=0)
    h_t_override: Optional[float] = None
    max_training_mode: Optional[int] = None
    allow_out_of_grid: bool = False

    @model_validator(mode="after")
    def _validate(self) -> "ExperimentConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"Unsupported schema_version {self.schema_version}, expected {SCHEMA_VERSION}")
        if self.nu < 0:
            raise ValueError(f"nu must be non-negative, got: {self.nu}")
        if self.P <= 0:
            raise ValueError(f"P must be positive, got: {self.P}")
        if self.p < 0:
            raise ValueError(f"p must be non-negative, got: {self.p}")
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError(f"n must be odd and >= 3, got: {self.n}")
        if self.n > self.N:
            raise ValueError(f"n={self.n} exceeds N={self.N}")
        if not 1 <= self.s <= 8:
            raise ValueError(f"s must be in 1..8, got: {self.s}")
        if self.h_t_multiplier <= 0:
            raise ValueError(f"h_t_multiplier must be positive, got: {self.h_t_multiplier}")
        if self.Q < 1 or self.T < 1:
            raise ValueError(f"Q and T must be >= 1, got Q={self.Q}, T={self.T}")
        if self.kappa_max < 0:
            raise ValueError(f"kappa_max must be >= 0, got: {self.kappa_max}")
        if self.h_t_override is not None and not self.h_t_override > 0:
            raise ValueError(f"h_t_override must be positive, got: {self.h_t_override}")
        if self.max_training_mode is not None and self.max_training_mode < 0:
            raise ValueError(f"max_training_mode must be >= 0, got: {self.max_training_mode}")

        outside = self.out_of_grid_fields
        extras = [name for name in ("h_t_override", "max_training_mode") if getattr(self, name) is not None]
        if (outside or extras) and not self.allow_out_of_grid:
            raise ValueError(
                "Out-of-grid values for " + ", ".join(outside + extras)
                + "; set allow_out_of_grid to accept them"
            )
        return self

    @property
    def out_of_grid_fields(self) -> List[str]:
        return [name for name, domain in PARAMETER_DOMAINS.items() if getattr(self, name) not in domain]

    @property
    def is_baseline(self) -> bool:
        return self.kappa_max == 0

    def resolve_h_t(self, critical: float) -> float:
        """Apply the multiplier (or the explicit override) to a critical timestep."""
        if self.h_t_override is not None:
            return float(self.h_t_override)
        return float(critical) * self.h_t_multiplier

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump()

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        return cls.model_validate(dict(data))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def config_hash(self) -> str:
        """Content hash used as the result-store key."""
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()[:16]

    def __str__(self) -> str:
        return (
            f"Experiment(nu={self.nu:g}, p={self.p}, N={self.N}, n={self.n}, s={self.s}, "
            f"h_t={self.h_t_multiplier:g}x, Q={self.Q}, T={self.T}, "
            f"kappa_max={self.kappa_max}, seed={self.seed})"
        )


NON_FINITE_TOKENS = {"inf": float("inf"), "-inf": float("-inf"), "nan": float("nan")}


def encode_float(value: Optional[float]) -> Any:
    """Finite floats pass through; inf, -inf and nan become the strings "inf", "-inf", "nan"."""
    if value is None or isinstance(value, bool):
        return value
    value = float(value)
    if np.isfinite(value):
        return value
    return "nan" if np.isnan(value) else ("inf" if value > 0 else "-inf")


def decode_float(value: Any) -> Optional[float]:
    if value is None:
        return None
    if isinstance(value, str):
        if value not in NON_FINITE_TOKENS:
            raise ValueError(f"Not a float token: {value!r}")
        return NON_FINITE_TOKENS[value]
    return float(value)


def encode_floats(values: np.ndarray) -> List[Any]:
    return [encode_float(v) for v in np.asarray(values, dtype=float).ravel()]


def decode_floats(values: List[Any]) -> np.ndarray:
    return np.array([decode_float(v) for v in values], dtype=float)


def encode_tree(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {k: encode_tree(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode_tree(v) for v in value]
    if isinstance(value, (float, np.floating)):
        return encode_float(value)
    return value


def decode_tree(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {k: decode_tree(v) for k, v in value.items()}
    if isinstance(value, list):
        return [decode_tree(v) for v in value]
    if isinstance(value, str) and value in NON_FINITE_TOKENS:
        return NON_FINITE_TOKENS[value]
    return value


def _complex_pairs(values: np.ndarray) -> List[List[Any]]:
    return [[encode_float(v.real), encode_float(v.imag)] for v in np.asarray(values, dtype=complex)]



@dataclass
class ExperimentResult:
    """
    Outcome of one experiment.

    ``errors`` holds the infinity-norm forward error at ``times`` (levels
    l = s..floor(20/h_t)). ``baseline_errors`` is the same series for the
    untrained centered stencil.
    """

    config: ExperimentConfig
    weights: StencilWeights
    status: str
    h_t: float
    iterations: int = 0
    J_initial: Optional[float] = None
    J_final: Optional[float] = None
    grad_norm: Optional[float] = None
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    errors: np.ndarray = field(default_factory=lambda: np.zeros(0))
    baseline_errors: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scaled_eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    stable: bool = False
    baseline_stable: bool = False
    coherence: Dict[str, Any] = field(default_factory=dict)
    message: str = ""
    elapsed_seconds: float = 0.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.errors = np.asarray(self.errors, dtype=float)
        self.baseline_errors = np.asarray(self.baseline_errors, dtype=float)
        self.scaled_eigenvalues = np.asarray(self.scaled_eigenvalues, dtype=complex)
        if self.times.shape != self.errors.shape:
            raise ValueError(f"times and errors differ in length: {self.times.size} vs {self.errors.size}")

    @property
    def config_hash(self) -> str:
        return self.config.config_hash

    def max_error(self, t_end: float) -> float:
        """Largest forward error over (0, t_end]; inf once the solution has blown up."""
        mask = self.times <= t_end * (1 + 1e-12)
        if not np.any(mask):
            return float("nan")
        return float(np.max(self.errors[mask]))

    def error_at(self, t: float) -> float:
        """Forward error at the last recorded time not after t."""
        eligible = np.nonzero(self.times <= t * (1 + 1e-12))[0]
        if eligible.size == 0:
            return float("nan")
        return float(self.errors[eligible[-1]])

    def summary_row(self) -> Dict[str, Any]:
        """Flat record for the CSV index."""
        row: Dict[str, Any] = {"config_hash": self.config_hash}
        row.update({name: getattr(self.config, name) for name in SWEPT_FIELDS})
        row["seed"] = self.config.seed
        row.update(
            {
                "h_t": self.h_t,
                "J_final": self.J_final,
                "status": self.status,
                "stable": self.stable,
                "max_error_0_1": self.max_error(1.0),
                "max_error_0_20": self.max_error(20.0),
            }
        )
        return row

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "config_hash": self.config_hash,
            "config": self.config.to_dict(),
            "weights": self.weights.to_dict(),
            "status": self.status,
            "message": self.message,
            "h_t": encode_float(self.h_t),
            "iterations": self.iterations,
            "J_initial": encode_float(self.J_initial),
            "J_final": encode_float(self.J_final),
            "grad_norm": encode_float(self.grad_norm),
            "times": encode_floats(self.times),
            "errors": encode_floats(self.errors),
            "baseline_errors": encode_floats(self.baseline_errors),
            "scaled_eigenvalues": _complex_pairs(self.scaled_eigenvalues),
            "stable": self.stable,
            "baseline_stable": self.baseline_stable,
            "coherence": encode_tree(self.coherence),
            "elapsed_seconds": self.elapsed_seconds,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentResult":
        return cls(
            config=ExperimentConfig.from_dict(data["config"]),
            weights=StencilWeights.from_dict(data["weights"]),
            status=data["status"],
            message=data.get("message", ""),
            h_t=decode_float(data["h_t"]),
            iterations=int(data.get("iterations", 0)),
            J_initial=decode_float(data.get("J_initial")),
            J_final=decode_float(data.get("J_final")),
            grad_norm=decode_float(data.get("grad_norm")),
            times=decode_floats(data.get("times", [])),
            errors=decode_floats(data.get("errors", [])),
            baseline_errors=decode_floats(data.get("baseline_errors", [])),
            scaled_eigenvalues=[
                complex(decode_float(re), decode_float(im)) for re, im in data.get("scaled_eigenvalues", [])
            ],
            stable=bool(data.get("stable", False)),
            baseline_stable=bool(data.get("baseline_stable", False)),
            coherence=decode_tree(dict(data.get("coherence", {}))),
            elapsed_seconds=float(data.get("elapsed_seconds", 0.0)),
        )

    def __str__(self) -> str:
        verdict = "stable" if self.stable else "unstable"
        return (
            f"{self.config} -> {self.status}, {verdict}, "
            f"max error (0,20] = {self.max_error(20.0):.3e}"
        )
