"""
Report Service
Writes an ExperimentResult as CSV tables, summary.json and run_meta.json
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

import configs
from models.reports import ExperimentResult
from utils.formatting import format_number, summary_line

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """JSON-safe copy: numpy scalars become Python numbers, non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _cell(value: Any) -> str:
    return format_number(_plain(value))


def write_tables(result: ExperimentResult, out_dir: Path) -> List[Path]:
    """One `<experiment>_<table>.csv` per table, numbers with 17 significant digits."""
    paths = []
    for table in result.tables:
        path = out_dir / f"{result.experiment}_{table.name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(table.header)
            for row in table.rows:
                writer.writerow([_cell(value) for value in row])
        paths.append(path)
    return paths


def build_summary(result: ExperimentResult, provenance: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "version": configs.VERSION,
        "experiment": result.experiment,
        "config": provenance,
        "headline": _plain(result.headline),
        "checks": [
            {"name": check.name, "passed": bool(check.passed), "hard": check.hard, "detail": check.detail}
            for check in result.checks
        ],
        "passed": result.passed,
    }


def write_reports(result: ExperimentResult, provenance: Dict[str, Any], out_dir: Path,
                  meta: Dict[str, Any]) -> List[Path]:
    """
    Write every report file of a run.

    Args:
        result: Experiment output.
        provenance: Config echo embedded in summary.json.
        out_dir: Report directory (created if missing).
        meta: Run metadata that may differ between identical runs (threads, wall time).

    Returns:
        Paths written, tables first.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = write_tables(result, out_dir)

    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(build_summary(result, provenance), sort_keys=True, indent=2) + "\n",
                            encoding="utf-8")
    meta_path = out_dir / "run_meta.json"
    meta_path.write_text(json.dumps(_plain(meta), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    paths += [summary_path, meta_path]
    logger.info(f"Wrote {len(paths)} report files to {out_dir}")
    return paths


def render_summary(result: ExperimentResult) -> str:
    """One-screen terminal summary: headline numbers, then checks."""
    lines = [f"── {result.experiment} ──"]
    for key, value in result.headline.items():
        lines.append(summary_line(key, _plain(value)))
    lines.append("")
    for check in result.checks:
        status = "PASS" if check.passed else ("FAIL" if check.hard else "warn")
        lines.append(f"[{status}] {check.name}: {check.detail}")
    return "\n".join(lines)
