"""
Serialization - CSV/JSON files for solutions, training sets and weights

Grid solutions are column-major CSV: a header row "x_index,level_0,...",
then one row per grid node. A training set is one such CSV per case plus a
JSON mirror carrying its metadata. All floats are written with 17
significant digits.
"""

import io
import json
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd

from models.grid import StencilWeights
from models.problem import TrainingSet

FLOAT_FORMAT = "%.17g"
PathLike = Union[str, Path]


def solution_frame(values: np.ndarray) -> pd.DataFrame:
    """(N+1, levels) array -> DataFrame with x_index and one column per level."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError(f"Expected a 2-D (N+1, levels) array, got shape {values.shape}")
    frame = pd.DataFrame(values, columns=[f"level_{l}" for l in range(values.shape[1])])
    frame.insert(0, "x_index", np.arange(values.shape[0]))
    return frame


def write_solution_csv(values: np.ndarray, path: PathLike) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    solution_frame(values).to_csv(path, index=False, float_format=FLOAT_FORMAT)


def parse_solution_csv(csv_content: str) -> np.ndarray:
    """
    Parse CSV content written by write_solution_csv.
    CSV Columns: x_index, level_0, level_1, ...
    """
    frame = pd.read_csv(io.StringIO(csv_content), float_precision="round_trip")
    if "x_index" not in frame.columns:
        raise ValueError("Solution CSV is missing the x_index column")
    frame = frame.sort_values("x_index")
    if not np.array_equal(frame["x_index"].to_numpy(), np.arange(len(frame))):
        raise ValueError("x_index must enumerate 0..N without gaps")
    return frame.drop(columns="x_index").to_numpy(dtype=float)


def read_solution_csv(path: PathLike) -> np.ndarray:
    return parse_solution_csv(Path(path).read_text())


def write_training_set(training: TrainingSet, stem: PathLike) -> Path:
    """
    Write <stem>.json plus <stem>_case<tau>.csv for every case.

    Returns the path of the JSON mirror.
    """
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    files = []
    for tau in range(training.num_cases):
        case_path = stem.parent / f"{stem.name}_case{tau}.csv"
        write_solution_csv(training.cases[tau], case_path)
        files.append(case_path.name)
    meta: Dict[str, Any] = {
        "seed": training.seed,
        "p": training.decay_rate,
        "N": training.num_points - 1,
        "h_t": training.h_t,
        "s": training.steps,
        "Q": training.horizon,
        "T": training.num_cases,
        "files": files,
    }
    json_path = stem.parent / f"{stem.name}.json"
    json_path.write_text(json.dumps(meta, indent=2))
    return json_path


def read_training_set(json_path: PathLike) -> TrainingSet:
    json_path = Path(json_path)
    meta = json.loads(json_path.read_text())
    cases = np.stack([read_solution_csv(json_path.parent / name) for name in meta["files"]])
    if cases.shape[1] != meta["N"] + 1:
        raise ValueError(f"Case files hold {cases.shape[1]} nodes, metadata says N={meta['N']}")
    return TrainingSet(
        cases=cases,
        steps=int(meta["s"]),
        horizon=int(meta["Q"]),
        h_t=float(meta["h_t"]),
        decay_rate=int(meta["p"]),
        seed=int(meta["seed"]),
    )


def write_weights(weights: StencilWeights, path: PathLike) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(weights.to_dict(), indent=2))


def read_weights(path: PathLike) -> StencilWeights:
    return StencilWeights.from_dict(json.loads(Path(path).read_text()))


def error_series_frame(times: np.ndarray, errors: np.ndarray, kind: str) -> pd.DataFrame:
    return pd.DataFrame({"t": np.asarray(times, dtype=float), "error": np.asarray(errors, dtype=float), "kind": kind})


def write_frame(frame: pd.DataFrame, path: PathLike) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
