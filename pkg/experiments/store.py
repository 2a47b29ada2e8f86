"""
Result Store - One JSON file per experiment plus a CSV index

Layout under the store root:

    results/<config_hash>.json   full record (error series, eigenvalues, weights)
    index.csv                    one summary row per record

Files are written to a temporary sibling and moved into place, so a reader
never sees a partial record. Only the process driving a sweep writes.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Union

import pandas as pd

from models.experiment import SWEPT_FIELDS, ExperimentConfig, ExperimentResult

logger = logging.getLogger(__name__)

INDEX_COLUMNS = (
    ["config_hash"] + list(SWEPT_FIELDS)
    + ["seed", "h_t", "J_final", "status", "stable", "max_error_0_1", "max_error_0_20"]
)
CSV_FLOAT_FORMAT = "%.17g"


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ResultStore:
    """
    Append-only store keyed by ExperimentConfig.config_hash.

    Example:
        >>> store = ResultStore("results")
        >>> store.has(config)
        False
    """

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.records_dir = self.root / "results"
        self.index_path = self.root / "index.csv"
        self.records_dir.mkdir(parents=True, exist_ok=True)

    def _key(self, item: Union[ExperimentConfig, str]) -> str:
        return item.config_hash if isinstance(item, ExperimentConfig) else str(item)

    def path_for(self, item: Union[ExperimentConfig, str]) -> Path:
        return self.records_dir / f"{self._key(item)}.json"

    def has(self, item: Union[ExperimentConfig, str]) -> bool:
        return self.path_for(item).exists()

    def hashes(self) -> List[str]:
        return sorted(p.stem for p in self.records_dir.glob("*.json"))

    def __len__(self) -> int:
        return len(self.hashes())

    def save(self, result: ExperimentResult) -> Path:
        path = self.path_for(result.config)
        atomic_write_text(path, json.dumps(result.to_dict(), indent=1, allow_nan=False))
        self._append_index(result.summary_row())
        logger.debug("Stored %s", path.name)
        return path

    def record_failure(self, config: ExperimentConfig, message: str) -> Path:
        """Persist a failed experiment so that resumed sweeps skip it."""
        record = {
            "config_hash": config.config_hash,
            "config": config.to_dict(),
            "status": "error",
            "message": message,
        }
        path = self.path_for(config)
        atomic_write_text(path, json.dumps(record, indent=1, allow_nan=False))
        row: Dict[str, Any] = {"config_hash": config.config_hash, "status": "error", "seed": config.seed}
        row.update({name: getattr(config, name) for name in SWEPT_FIELDS})
        self._append_index(row)
        return path

    def load_record(self, item: Union[ExperimentConfig, str]) -> Dict[str, Any]:
        path = self.path_for(item)
        if not path.exists():
            raise KeyError(f"No record for {self._key(item)} in {self.records_dir}")
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)

    def load(self, item: Union[ExperimentConfig, str]) -> ExperimentResult:
        record = self.load_record(item)
        if record.get("status") == "error":
            raise ValueError(f"Experiment {self._key(item)} failed: {record.get('message', '')}")
        return ExperimentResult.from_dict(record)

    def iter_records(self) -> Iterator[Mapping[str, Any]]:
        for key in self.hashes():
            yield self.load_record(key)

    def _append_index(self, row: Mapping[str, Any]) -> None:
        frame = pd.DataFrame([row]).reindex(columns=INDEX_COLUMNS)
        header = not self.index_path.exists()
        frame.to_csv(self.index_path, mode="a", header=header, index=False, float_format=CSV_FLOAT_FORMAT)

    def rebuild_index(self) -> pd.DataFrame:
        """Regenerate index.csv from the JSON records."""
        rows = []
        for record in self.iter_records():
            if record.get("status") == "error":
                row = {"config_hash": record["config_hash"], "status": "error", "seed": record["config"].get("seed")}
                row.update({name: record["config"].get(name) for name in SWEPT_FIELDS})
            else:
                row = ExperimentResult.from_dict(record).summary_row()
            rows.append(row)
        frame = pd.DataFrame(rows).reindex(columns=INDEX_COLUMNS)
        atomic_write_text(self.index_path, frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT))
        return frame

    def read_index(self) -> pd.DataFrame:
        if not self.index_path.exists():
            return pd.DataFrame(columns=INDEX_COLUMNS)
        return pd.read_csv(self.index_path)
