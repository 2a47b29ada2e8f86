"""
Parameter Sweep - Run many experiments against a result store

Configs are independent jobs. With jobs > 1 they run in a bounded process
pool; workers only compute and return plain dictionaries, and the parent
process is the single writer to the store. A config whose record already
exists is skipped, so an interrupted sweep resumes where it stopped. A
failing config is recorded as an error and never aborts the sweep.
"""

import itertools
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from models.experiment import ExperimentConfig, ExperimentResult
from experiments.orchestrator import run_experiment
from experiments.store import ResultStore
from utils.config_loader import load_config

logger = logging.getLogger(__name__)


@dataclass
class SweepReport:
    total: int = 0
    skipped: int = 0
    completed: int = 0
    failed: int = 0
    failures: Dict[str, str] = field(default_factory=dict)

    @property
    def computed(self) -> int:
        return self.completed + self.failed

    def __str__(self) -> str:
        return (
            f"SweepReport(total={self.total}, skipped={self.skipped}, "
            f"completed={self.completed}, failed={self.failed})"
        )


def expand_grid(
    domains: Mapping[str, Sequence[Any]],
    seeds: Sequence[int] = (0,),
    base: Optional[Mapping[str, Any]] = None,
) -> List[ExperimentConfig]:
    """
    Cartesian product of ``domains`` (field -> values) and ``seeds``.

    Example:
        >>> len(expand_grid({"nu": [0.0, 1e-2], "N": [51, 101]}))
        4
    """
    names = list(domains)
    configs = []
    for values in itertools.product(*(domains[name] for name in names)):
        for seed in seeds:
            fields = dict(base or {})
            fields.update(zip(names, values))
            fields["seed"] = int(seed)
            configs.append(ExperimentConfig.from_dict(fields))
    return configs


def curated_grid(settings: Optional[Dict[str, Any]] = None) -> List[ExperimentConfig]:
    """Desk-scale grid: the concatenated blocks of sweep.curated."""
    sweep_settings = (settings or load_config())["sweep"]
    seeds = sweep_settings.get("seeds", [0])
    configs: List[ExperimentConfig] = []
    for block in sweep_settings["curated"]:
        configs.extend(expand_grid(block, seeds))
    return list(dict.fromkeys(configs))


def full_grid(settings: Optional[Dict[str, Any]] = None) -> List[ExperimentConfig]:
    """Every combination of sweep.full for every seed."""
    sweep_settings = (settings or load_config())["sweep"]
    return expand_grid(sweep_settings["full"], sweep_settings.get("seeds", [0]))


def _run_config(config_data: Dict[str, Any], settings: Dict[str, Any]) -> Tuple[str, Dict[str, Any]]:
    """Worker entry point; never raises."""
    config = ExperimentConfig.from_dict(config_data)
    try:
        result = run_experiment(config, settings)
        return "ok", result.to_dict()
    except Exception as exc:
        detail = "".join(traceback.format_exception_only(type(exc), exc)).strip()
        return "error", {"message": detail}


def sweep(
    configs: Iterable[ExperimentConfig],
    store: ResultStore,
    jobs: int = 1,
    settings: Optional[Dict[str, Any]] = None,
) -> SweepReport:
    """
    Run every config not yet in ``store``.

    Args:
        configs: Non-empty collection of configs (duplicates are run once)
        store: Result store; the caller's process is its only writer
        jobs: Upper bound on concurrent worker processes
        settings: Harness settings passed to every experiment

    Returns:
        SweepReport with counts of skipped, completed and failed configs
    """
    unique = list(dict.fromkeys(configs))
    if not unique:
        raise ValueError("Sweep needs at least one config")
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got: {jobs}")
    settings = settings or load_config()

    report = SweepReport(total=len(unique))
    pending = [config for config in unique if not store.has(config)]
    report.skipped = report.total - len(pending)
    logger.info("=" * 70)
    logger.info("🚀 SWEEP: %d configs, %d already stored, %d to run (jobs=%d)",
                report.total, report.skipped, len(pending), jobs)
    logger.info("=" * 70)

    def record(config: ExperimentConfig, outcome: str, payload: Dict[str, Any]) -> None:
        if outcome == "ok":
            store.save(ExperimentResult.from_dict(payload))
            report.completed += 1
            logger.info("✅ [%d/%d] %s", report.computed, len(pending), config)
        else:
            store.record_failure(config, payload["message"])
            report.failed += 1
            report.failures[config.config_hash] = payload["message"]
            logger.warning("❌ [%d/%d] %s: %s", report.computed, len(pending), config, payload["message"])

    if jobs == 1 or len(pending) <= 1:
        for config in pending:
            record(config, *_run_config(config.to_dict(), settings))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_run_config, config.to_dict(), settings): config for config in pending}
            for future in as_completed(futures):
                config = futures[future]
                try:
                    outcome, payload = future.result()
                except Exception as exc:
                    outcome, payload = "error", {"message": f"worker failed: {exc!r}"}
                record(config, outcome, payload)

    logger.info("📊 %s", report)
    return report
