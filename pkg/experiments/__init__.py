"""Experiment harness: single-run workflow, parameter sweeps and the result store."""
from .orchestrator import ExperimentOrchestrator, resolve_timestep, run_experiment
from .store import ResultStore
from .sweep import sweep

__all__ = ['ExperimentOrchestrator', 'resolve_timestep', 'run_experiment', 'ResultStore', 'sweep']
