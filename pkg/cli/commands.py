"""
Command-line entry point: argparse sub-commands, config-file merging and exit codes.

Exit codes: 0 success, 2 configuration error, 3 dimension overflow,
4 failed invariant check.
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import scipy
from pydantic import ValidationError

import configs
from cli.models import ExperimentKind, RunConfig
from exceptions import ConfigError, DimensionOverflowError, ErgodicLabError, InvariantViolationError
from models.reports import ExperimentResult
from services import run_concentration, run_measure, run_qet, run_schmidt
from services.report_service import render_summary, write_reports

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_OVERFLOW = 3
EXIT_CHECK_FAILED = 4

RUNNERS: Dict[ExperimentKind, Callable[..., ExperimentResult]] = {
    ExperimentKind.CONCENTRATION: run_concentration,
    ExperimentKind.QET: run_qet,
    ExperimentKind.MEASURE: run_measure,
    ExperimentKind.SCHMIDT: run_schmidt,
}

# flag dest -> path inside RunConfig
FLAG_PATHS: Dict[str, tuple] = {
    "seed": ("seed",),
    "out": ("out",),
    "threads": ("threads",),
    # concentration
    "n1": ("concentration", "n1"),
    "n2": ("concentration", "n2"),
    "trials": ("concentration", "trials"),
    "epsilons": ("concentration", "epsilons"),
    # qet
    "sites": ("qet", "model", "sites"),
    "n_gas": ("qet", "model", "n_gas"),
    "ball_hop": ("qet", "model", "ball_hop"),
    "gas_hop": ("qet", "model", "gas_hop"),
    "exchange_hop": ("qet", "model", "exchange_hop"),
    "contact": ("qet", "model", "contact"),
    "tilt": ("qet", "model", "tilt"),
    "eta": ("qet", "model", "eta"),
    "shell_lo": ("qet", "shell_lo"),
    "shell_hi": ("qet", "shell_hi"),
    "shell_dimension": ("qet", "shell_dimension"),
    "cells": ("qet", "cells"),
    "t_max": ("qet", "t_max"),
    "n_times": ("qet", "n_times"),
    "epsilon": ("qet", "epsilon"),
    "threshold": ("qet", "threshold"),
    "project": ("qet", "project"),
    # measure
    "theta": ("measure", "theta"),
    "n_spins": ("measure", "n_spins"),
    "c_plus": ("measure", "c_plus"),
    "c_minus": ("measure", "c_minus"),
    # schmidt
    "samples": ("schmidt", "samples"),
}

# n1 / n2 are shared by two sub-commands
SCHMIDT_FLAG_PATHS = {"n1": ("schmidt", "n1"), "n2": ("schmidt", "n2")}


# ========================================================================
# Parser
# ========================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help=f"64-bit run seed (default {configs.DEFAULT_SEED})")
    common.add_argument("--out", help=f"report directory (default {configs.OUTPUT_DIR})")
    common.add_argument("--config", type=Path, help="JSON run config; flags override its values")
    common.add_argument("--threads", type=int, help="worker threads; reports do not depend on it")

    parser = argparse.ArgumentParser(prog="ergodic-lab", description="Numerical laboratory for typicality, "
                                     "quantum ergodicity and macroscopic superpositions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {configs.VERSION}")
    sub = parser.add_subparsers(dest="experiment", required=True)

    concentration = sub.add_parser("concentration", parents=[common], help="concentration of rho_1 around I/n1")
    concentration.add_argument("--n1", type=int)
    concentration.add_argument("--n2", type=int)
    concentration.add_argument("--trials", type=int)
    concentration.add_argument("--epsilons", help="comma-separated, strictly increasing")

    qet = sub.add_parser("qet", parents=[common], help="ball-gas macro-cell time statistics")
    qet.add_argument("--sites", type=int)
    qet.add_argument("--n-gas", type=int)
    qet.add_argument("--ball-hop", type=float)
    qet.add_argument("--gas-hop", type=float)
    qet.add_argument("--exchange-hop", type=float)
    qet.add_argument("--contact", type=float)
    qet.add_argument("--tilt", type=float)
    qet.add_argument("--eta", type=float)
    qet.add_argument("--shell-lo", type=float)
    qet.add_argument("--shell-hi", type=float)
    qet.add_argument("--shell-dimension", type=int)
    qet.add_argument("--cells", type=int)
    qet.add_argument("--t-max", type=float)
    qet.add_argument("--n-times", type=int)
    qet.add_argument("--epsilon", type=float)
    qet.add_argument("--threshold", type=float)
    qet.add_argument("--project", action="store_const", const=True, help="project the initial state onto the shell")

    measure = sub.add_parser("measure", parents=[common], help="spin-pointer measurement of a qubit")
    measure.add_argument("--theta", type=float)
    measure.add_argument("--n-spins", type=int)
    measure.add_argument("--c-plus")
    measure.add_argument("--c-minus")

    schmidt = sub.add_parser("schmidt", parents=[common], help="Schmidt decomposition of random states")
    schmidt.add_argument("--n1", type=int)
    schmidt.add_argument("--n2", type=int)
    schmidt.add_argument("--samples", type=int)
    return parser


# ========================================================================
# Config merging
# ========================================================================

def _set_path(target: Dict[str, Any], path: tuple, value: Any) -> None:
    for key in path[:-1]:
        node = target.get(key)
        if not isinstance(node, dict):
            node = {}
            target[key] = node
        target = node
    target[path[-1]] = value


def _read_config_file(path: Path) -> Dict[str, Any]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def load_config(args: argparse.Namespace) -> RunConfig:
    """File values first, then every flag that was given."""
    merged = _read_config_file(args.config) if args.config else {}
    merged["experiment"] = args.experiment
    paths = dict(FLAG_PATHS)
    if args.experiment == ExperimentKind.SCHMIDT.value:
        paths.update(SCHMIDT_FLAG_PATHS)
    for dest, path in paths.items():
        value = getattr(args, dest, None)
        if value is not None:
            _set_path(merged, path, value)
    return RunConfig.model_validate(merged)


def format_validation_error(error: ValidationError) -> List[str]:
    return [f"{'.'.join(str(part) for part in item['loc']) or 'config'}: {item['msg']}" for item in error.errors()]


# ========================================================================
# Run
# ========================================================================

def run(config: RunConfig) -> int:
    """Run one experiment, write its reports and return the exit status."""
    started = time.perf_counter()
    section = getattr(config, config.experiment.value)
    result = RUNNERS[config.experiment](section, config.seed, config.threads)
    meta = {
        "threads": config.threads,
        "out": config.out,
        "wall_time_seconds": time.perf_counter() - started,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
    }
    write_reports(result, config.provenance(), Path(config.out), meta)
    print(render_summary(result))
    if not result.passed:
        failed = [check.name for check in result.checks if check.hard and not check.passed]
        logger.error(f"Invariant checks failed: {', '.join(failed)}")
        return EXIT_CHECK_FAILED
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=configs.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
    except ValidationError as e:
        for line in format_validation_error(e):
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return run(config)
    except DimensionOverflowError as e:
        print(f"dimension overflow: {e}", file=sys.stderr)
        return EXIT_OVERFLOW
    except InvariantViolationError as e:
        print(f"invariant violated: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except ErgodicLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
