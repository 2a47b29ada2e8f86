"""
Command-Line Interface - Stencil learning experiments

Subcommands:
    weights            Lagrange or centered stencil weights as JSON
    stability          Boundary of the AB-s stability region (and scaled eigenvalues) as CSV
    train              Train weights for one experiment config
    evaluate           Forward error of a weight file on the bump problem
    sweep              Run the curated (or full) parameter grid into a result store
    export-plot-data   Write CSV series for one stored experiment

Exit status is 0 on success, 2 for usage and domain errors and 1 for
runtime failures. Failures print one line "error: {json}" on stderr.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from models.errors import StencilLearningError
from models.experiment import PARAMETER_DESCRIPTIONS, PARAMETER_DOMAINS, ExperimentConfig, encode_tree
from models.grid import Grid
from models.problem import PdeProblem
from models.scheme import AbScheme
from experiments.orchestrator import resolve_timestep
from experiments.store import ResultStore
from experiments.sweep import curated_grid, full_grid, sweep
from solvers.evaluation import forward_error_series
from solvers.exact_solution import bump_fourier_data
from solvers.multistep import adams_bashforth, stability_region_samples, stable_mask
from solvers.stencil import DiffOperator, centered_weights, lagrange_weights, scaled_eigenvalues
from solvers.training import DEFAULT_MAX_RESTARTS, TrainingProblem, bfgs_minimize
from utils.config_loader import get_log_level, get_results_root, load_config, load_experiment_config
from utils.data_generator import generate_training_set
from utils.serialization import (
    FLOAT_FORMAT,
    error_series_frame,
    read_weights,
    write_frame,
    write_weights,
)

logger = logging.getLogger(__name__)

# (flag, config field, type)
CONFIG_FLAGS = [
    ("--c", "c", float),
    ("--nu", "nu", float),
    ("--P", "P", float),
    ("--p", "p", int),
    ("--N", "N", int),
    ("--n", "n", int),
    ("--s", "s", int),
    ("--h-t-multiplier", "h_t_multiplier", float),
    ("--Q", "Q", int),
    ("--T", "T", int),
    ("--kappa-max", "kappa_max", int),
    ("--seed", "seed", int),
    ("--h-t", "h_t_override", float),
    ("--max-training-mode", "max_training_mode", int),
]


class UsageError(Exception):
    """Bad flags or values outside the accepted domains."""


class CliParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _emit_error(kind: str, message: str) -> None:
    print("error: " + json.dumps({"kind": kind, "message": message}), file=sys.stderr)


def _domains_epilog() -> str:
    lines = ["experiment parameters (accepted values):"]
    for name, domain in PARAMETER_DOMAINS.items():
        values = ", ".join(f"{v:g}" if isinstance(v, float) else str(v) for v in domain)
        lines.append(f"  {name:<16} {PARAMETER_DESCRIPTIONS[name]}: {{{values}}}")
    lines.append("  seed             any non-negative integer")
    lines.append("values outside these sets need --allow-out-of-grid")
    return "\n".join(lines)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("experiment config (overrides --config)")
    group.add_argument("--config", help="ExperimentConfig JSON file")
    for flag, field_name, kind in CONFIG_FLAGS:
        help_text = PARAMETER_DESCRIPTIONS.get(field_name, field_name.replace("_", " "))
        group.add_argument(flag, dest=field_name, type=kind, default=None, help=help_text)
    group.add_argument("--allow-out-of-grid", dest="allow_out_of_grid", action="store_true", default=None,
                       help="accept values outside the parameter sets listed below")


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {field_name: getattr(args, field_name) for _, field_name, _ in CONFIG_FLAGS}
    overrides["allow_out_of_grid"] = args.allow_out_of_grid
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        if args.config:
            return load_experiment_config(args.config, overrides)
        return ExperimentConfig.from_dict(overrides)
    except (ValidationError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _print_json(payload: Dict[str, Any]) -> None:
    print(json.dumps(encode_tree(payload), indent=2, allow_nan=False))


def _print_csv(frame: pd.DataFrame) -> None:
    frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT)


def cmd_weights(args: argparse.Namespace) -> int:
    try:
        weights = lagrange_weights(args.n) if args.kind == "lagrange" else centered_weights(args.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.out:
        write_weights(weights, args.out)
    _print_json(weights.to_dict())
    return 0


def stability_frame(scheme: AbScheme, samples: int, eigenvalues: Optional[np.ndarray] = None) -> pd.DataFrame:
    """Boundary samples, then scaled eigenvalues: columns re, im, kind, stable."""
    _, boundary = stability_region_samples(scheme, samples)
    # stable is left empty on boundary rows
    frame = pd.DataFrame({"re": boundary.real, "im": boundary.imag, "kind": "boundary", "stable": None})
    if eigenvalues is None:
        return frame
    eig = pd.DataFrame({
        "re": eigenvalues.real, "im": eigenvalues.imag,
        "kind": "eigenvalue", "stable": stable_mask(scheme, eigenvalues).astype(bool),
    })
    return pd.concat([frame, eig], ignore_index=True)


def cmd_stability(args: argparse.Namespace) -> int:
    if args.s < 1 or args.s > 8 or args.samples < 1:
        raise UsageError("--s must be in 1..8 and --samples positive")
    scheme = adams_bashforth(args.s)
    eigenvalues = None
    if args.N is not None:
        config = _config_from_args(args)
        weights = read_weights(args.weights) if args.weights else centered_weights(config.n)
        grid = Grid(N=config.N, n=config.n, period=config.P)
        op = DiffOperator(grid, weights, PdeProblem(c=config.c, nu=config.nu, period=config.P))
        h_t = resolve_timestep(config)
        eigenvalues = scaled_eigenvalues(op, h_t)
    _print_csv(stability_frame(scheme, args.samples, eigenvalues))
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    settings = load_config(args.settings)
    problem = PdeProblem(c=config.c, nu=config.nu, period=config.P)
    grid = Grid(N=config.N, n=config.n, period=config.P)
    scheme = adams_bashforth(config.s)
    h_t = resolve_timestep(config, settings)
    training = generate_training_set(
        problem, config.N, h_t, config.s, config.Q, config.T, config.p, config.seed,
        max_mode=config.max_training_mode,
    )

    log_handle = open(args.log, "w") if args.log else None
    sink = (lambda record: log_handle.write(json.dumps(encode_tree(record), allow_nan=False) + "\n")) if log_handle else None
    try:
        state = bfgs_minimize(
            centered_weights(config.n),
            TrainingProblem(training, scheme, grid, problem, h_t),
            kappa_max=config.kappa_max,
            rho_min=float(settings["optimizer"]["rho_min"]),
            grad_tol=float(settings["optimizer"]["grad_tol"]),
            max_restarts=int(settings["optimizer"].get("max_restarts", DEFAULT_MAX_RESTARTS)),
            iteration_sink=sink,
        )
    finally:
        if log_handle:
            log_handle.close()

    if args.out:
        write_weights(state.weights, args.out)
    _print_json({
        "config_hash": config.config_hash,
        "status": state.status,
        "message": state.message,
        "iterations": state.kappa,
        "restarts": state.restarts,
        "h_t": h_t,
        "J_initial": state.J_history[0],
        "J_final": state.J,
        "grad_norm": state.grad_norm,
        "weights": state.weights.to_dict(),
    })
    return 1 if state.status == "failed" and args.strict else 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    settings = load_config(args.settings)
    weights = read_weights(args.weights) if args.weights else centered_weights(config.n)
    if weights.n != config.n:
        raise UsageError(f"weight file has n={weights.n}, config has n={config.n}")
    problem = PdeProblem(c=config.c, nu=config.nu, period=config.P)
    grid = Grid(N=config.N, n=config.n, period=config.P)
    scheme = adams_bashforth(config.s)
    h_t = resolve_timestep(config, settings)
    evaluation = settings["evaluation"]
    horizon = args.horizon if args.horizon is not None else float(evaluation["horizon"])

    times, errors = forward_error_series(
        weights, problem, grid, scheme, h_t, horizon=horizon,
        data=bump_fourier_data(int(evaluation["bump_modes"]), float(evaluation["quadrature_abstol"])),
        chunk_levels=int(evaluation["chunk_levels"]),
    )
    eigenvalues = scaled_eigenvalues(DiffOperator(grid, weights, problem), h_t)
    if args.out:
        write_frame(error_series_frame(times, errors, "evaluated"), args.out)
    _print_json({
        "h_t": h_t,
        "stable": bool(np.all(stable_mask(scheme, eigenvalues, float(settings["stability"]["root_tol"])))),
        "levels": int(errors.size),
        "max_error_0_1": float(np.max(errors[times <= 1.0])) if np.any(times <= 1.0) else None,
        "max_error": float(np.max(errors)),
        "final_error": float(errors[-1]),
    })
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    settings = load_config(args.settings)
    if args.seeds:
        settings["sweep"]["seeds"] = args.seeds
    configs = full_grid(settings) if args.full_grid else curated_grid(settings)
    store = ResultStore(args.store or get_results_root())
    report = sweep(configs, store, jobs=args.jobs, settings=settings)
    store.rebuild_index()
    _print_json({
        "store": str(store.root),
        "total": report.total,
        "skipped": report.skipped,
        "completed": report.completed,
        "failed": report.failed,
    })
    return 0


def cmd_export_plot_data(args: argparse.Namespace) -> int:
    store = ResultStore(args.store or get_results_root())
    try:
        result = store.load(args.hash)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    out_dir = Path(args.out_dir)
    errors = pd.concat(
        [
            error_series_frame(result.times, result.errors, "trained"),
            error_series_frame(result.times, result.baseline_errors, "baseline"),
        ],
        ignore_index=True,
    )
    write_frame(errors, out_dir / f"{args.hash}_errors.csv")

    spectrum = stability_frame(adams_bashforth(result.config.s), args.samples, result.scaled_eigenvalues)
    write_frame(spectrum, out_dir / f"{args.hash}_spectrum.csv")
    _print_json({"hash": args.hash, "out_dir": str(out_dir), "stable": result.stable, "status": result.status})
    return 0


def build_parser() -> CliParser:
    parser = CliParser(
        prog="stencil-learn",
        description="Learn finite-difference stencils for periodic advection-diffusion.",
        epilog=_domains_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default from STENCIL_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_weights = sub.add_parser("weights", help="stencil weights as JSON", allow_abbrev=False)
    p_weights.add_argument("--n", type=int, required=True, help="odd stencil width >= 3")
    p_weights.add_argument("--kind", choices=["lagrange", "centered"], default="lagrange")
    p_weights.add_argument("--out", help="also write the JSON to this file")
    p_weights.set_defaults(handler=cmd_weights)

    p_stab = sub.add_parser("stability", help="stability-region boundary CSV", epilog=_domains_epilog(),
                            formatter_class=argparse.RawDescriptionHelpFormatter, allow_abbrev=False)
    _add_config_flags(p_stab)
    p_stab.add_argument("--samples", type=int, default=256, help="boundary points")
    p_stab.add_argument("--weights", help="weight JSON for the eigenvalue rows (default centered)")
    p_stab.set_defaults(handler=cmd_stability, s=2)

    p_train = sub.add_parser("train", help="train weights for one config", epilog=_domains_epilog(),
                             formatter_class=argparse.RawDescriptionHelpFormatter, allow_abbrev=False)
    _add_config_flags(p_train)
    p_train.add_argument("--settings", help="YAML/JSON overriding config/default_experiment.yaml")
    p_train.add_argument("--out", help="write trained weights JSON here")
    p_train.add_argument("--log", help="write one JSON line per BFGS iteration here")
    p_train.add_argument("--strict", action="store_true", help="exit 1 when the line search fails")
    p_train.set_defaults(handler=cmd_train)

    p_eval = sub.add_parser("evaluate", help="forward error on the bump problem", epilog=_domains_epilog(),
                            formatter_class=argparse.RawDescriptionHelpFormatter, allow_abbrev=False)
    _add_config_flags(p_eval)
    p_eval.add_argument("--settings", help="YAML/JSON overriding config/default_experiment.yaml")
    p_eval.add_argument("--weights", help="weight JSON (default centered)")
    p_eval.add_argument("--horizon", type=float, default=None, help="final time (default 20)")
    p_eval.add_argument("--out", help="write the error series CSV here")
    p_eval.set_defaults(handler=cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="run the parameter grid", epilog=_domains_epilog(),
                             formatter_class=argparse.RawDescriptionHelpFormatter, allow_abbrev=False)
    p_sweep.add_argument("--settings", help="YAML/JSON overriding config/default_experiment.yaml")
    p_sweep.add_argument("--store", help="result-store root (default STENCIL_RESULTS_DIR or ./results)")
    p_sweep.add_argument("--jobs", type=int, default=1, help="worker processes")
    p_sweep.add_argument("--seeds", type=int, nargs="+", help="seeds per grid point")
    p_sweep.add_argument("--full-grid", action="store_true", help="run every combination (36450 per seed)")
    p_sweep.set_defaults(handler=cmd_sweep)

    p_export = sub.add_parser("export-plot-data", help="CSV series for one stored experiment", allow_abbrev=False)
    p_export.add_argument("--hash", required=True, help="config hash from index.csv")
    p_export.add_argument("--store", help="result-store root")
    p_export.add_argument("--out-dir", required=True)
    p_export.add_argument("--samples", type=int, default=256, help="boundary points")
    p_export.set_defaults(handler=cmd_export_plot_data)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv`` and run the subcommand; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except UsageError as exc:
        _emit_error("usage", str(exc))
        return 2

    logging.basicConfig(
        level=(args.log_level or get_log_level()).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except UsageError as exc:
        _emit_error("usage", str(exc))
        return 2
    except (StencilLearningError, ArithmeticError, OSError, ValueError) as exc:
        logger.debug("Command failed", exc_info=True)
        _emit_error(type(exc).__name__, str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
