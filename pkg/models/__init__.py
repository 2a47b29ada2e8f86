"""
Core data models for learned finite-difference stencils.

This package contains the data structures shared by the solvers and the
experiment harness:
- PdeProblem, FourierData, TrainingSet: the PDE and its sampled solutions
- Grid, StencilWeights: periodic grid and trainable stencil pair
- AbScheme: Adams-Bashforth coefficients
- ExperimentConfig, ExperimentResult: sweep points and their outcomes
- LossGradient, DeltaField, OptimizerState: training internals
"""

from .problem import PdeProblem, FourierData, TrainingSet
from .grid import Grid, StencilWeights
from .scheme import AbScheme
from .experiment import ExperimentConfig, ExperimentResult, PARAMETER_DOMAINS
from .optimization import LossGradient, DeltaField, OptimizerState

__all__ = [
    'PdeProblem', 'FourierData', 'TrainingSet', 'Grid', 'StencilWeights', 'AbScheme',
    'ExperimentConfig', 'ExperimentResult', 'PARAMETER_DOMAINS',
    'LossGradient', 'DeltaField', 'OptimizerState',
]
