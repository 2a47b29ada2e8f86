"""
Configuration Loader - Experiment settings and configs

Loads harness settings from YAML/JSON (tolerances, evaluation protocol,
sweep grids) and single experiment configs from versioned JSON files.

Key Features:
    - Load default and custom settings files
    - Merge user overrides with defaults
    - Read and write ExperimentConfig JSON with schema_version
    - Environment overrides for the result store and log level
"""

import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml
from dotenv import load_dotenv

from models.experiment import ExperimentConfig

DEFAULT_SETTINGS_PATH = Path(__file__).parent.parent / 'config' / 'default_experiment.yaml'
RESULTS_DIR_ENV = 'STENCIL_RESULTS_DIR'
LOG_LEVEL_ENV = 'STENCIL_LOG_LEVEL'


def load_yaml(file_path: str) -> Dict[str, Any]:
    """
    Load YAML configuration file.

    Args:
        file_path: Path to YAML file

    Returns:
        Dictionary with configuration data
    """
    with open(file_path, 'r') as f:
        return yaml.safe_load(f) or {}


def load_json(file_path: str) -> Dict[str, Any]:
    """
    Load JSON configuration file.

    Args:
        file_path: Path to JSON file

    Returns:
        Dictionary with configuration data
    """
    with open(file_path, 'r') as f:
        return json.load(f)


def _load_any(file_path) -> Dict[str, Any]:
    if str(file_path).endswith('.json'):
        return load_json(str(file_path))
    return load_yaml(str(file_path))


def merge_settings(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``overrides`` into a copy of ``base``."""
    merged = copy.deepcopy(dict(base))
    for key, value in overrides.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = merge_settings(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load harness settings.

    The defaults in config/default_experiment.yaml are always read; a custom
    file, if given, overrides them key by key.

    Args:
        config_path: Optional path to a YAML or JSON settings file

    Returns:
        Nested settings dictionary (stability, optimizer, evaluation, sweep)
    """
    settings = load_yaml(str(DEFAULT_SETTINGS_PATH))
    if config_path is not None:
        settings = merge_settings(settings, _load_any(config_path))
    return settings


def load_experiment_config(config_path: str, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Read one ExperimentConfig from JSON (or YAML), applying field overrides.

    Raises:
        ValueError (pydantic ValidationError) on schema or domain violations
    """
    data = _load_any(config_path)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


def save_experiment_config(config: ExperimentConfig, output_path: str) -> None:
    """Write a config as indented JSON; it re-parses to an equal ExperimentConfig."""
    Path(output_path).parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, 'w') as f:
        json.dump(config.to_dict(), f, indent=2, sort_keys=True)
        f.write('\n')


def get_results_root(default: str = 'results') -> Path:
    """Result-store root from STENCIL_RESULTS_DIR (a .env file is honoured)."""
    load_dotenv()
    return Path(os.getenv(RESULTS_DIR_ENV, default))


def get_log_level(default: str = 'INFO') -> str:
    load_dotenv()
    return os.getenv(LOG_LEVEL_ENV, default).upper()


# Example usage
if __name__ == "__main__":
    settings = load_config()
    print(f"Loaded settings sections: {sorted(settings)}")
    print(f"Curated sweep blocks: {len(settings['sweep']['curated'])}")
