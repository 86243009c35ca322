"""
CSV and JSON writers for run traces, comparisons, tuning grids and check reports

Floats are written in repr form so repeated seeded runs produce identical
files apart from the elapsed_ms column.
"""

import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO

from optimizers import RunReport

logger = logging.getLogger(__name__)

RUN_COLUMNS = ["iter", "f", "grad_sq_norm", "elapsed_ms", "dhat_min", "dhat_max"]
TEST_COLUMN = "test_loss"
COMPARE_COLUMNS = ["method", "iter", "f", "grad_sq_norm"]
SUMMARY_COLUMNS = [
    "method", "gamma", "iterations", "iterations_to_tol", "final_f", "final_grad_sq_norm", "accuracy",
]
TUNE_COLUMNS = [
    "gamma", "seed", "final_f", "final_grad_sq_norm", "iterations", "stop_reason", "converged", "selected",
]

DIVERGED = "diverged"
NOT_REACHED = "not reached"


def fmt_float(value: Optional[float]) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _open_target(path: Optional[str], stdout: Optional[TextIO]):
    if path is None:
        return stdout or sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8"), True


def _write_rows(columns: Sequence[str], rows: Iterable[Dict[str, Any]], path: Optional[str],
                stdout: Optional[TextIO] = None) -> None:
    handle, owned = _open_target(path, stdout)
    try:
        writer = csv.DictWriter(handle, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    finally:
        if owned:
            handle.close()
    if path is not None:
        logger.info(f"Wrote {path}")


def run_rows(report: RunReport) -> List[Dict[str, str]]:
    with_test = has_test_column(report)
    rows = []
    for record in report.records:
        row = {
            "iter": str(record.iter),
            "f": fmt_float(record.f),
            "grad_sq_norm": fmt_float(record.grad_sq_norm),
            "elapsed_ms": f"{record.elapsed_ms:.3f}",
            "dhat_min": fmt_float(record.dhat_min),
            "dhat_max": fmt_float(record.dhat_max),
        }
        if with_test:
            row[TEST_COLUMN] = fmt_float(record.test_loss)
        rows.append(row)
    return rows


def has_test_column(report: RunReport) -> bool:
    return any(record.test_loss is not None for record in report.records)


def run_columns(report: RunReport) -> List[str]:
    return RUN_COLUMNS + [TEST_COLUMN] if has_test_column(report) else list(RUN_COLUMNS)


def write_run_csv(report: RunReport, path: Optional[str], stdout: Optional[TextIO] = None) -> None:
    """iter,f,grad_sq_norm,elapsed_ms,dhat_min,dhat_max[,test_loss]"""
    _write_rows(run_columns(report), run_rows(report), path, stdout)


def render_run_csv(report: RunReport) -> str:
    buffer = io.StringIO()
    write_run_csv(report, None, buffer)
    return buffer.getvalue()


def write_compare_csv(members: Sequence, path: Optional[str], stdout: Optional[TextIO] = None) -> None:
    """Long format over every member that produced a report"""
    rows = (
        {
            "method": member.label,
            "iter": str(record.iter),
            "f": fmt_float(record.f),
            "grad_sq_norm": fmt_float(record.grad_sq_norm),
        }
        for member in members if member.report is not None
        for record in member.report.records
    )
    _write_rows(COMPARE_COLUMNS, rows, path, stdout)


def summary_path(out: str) -> str:
    """cmp.csv -> cmp.summary.csv"""
    path = Path(out)
    return str(path.with_name(f"{path.stem}.summary{path.suffix or '.csv'}"))


def iterations_to_tol_cell(report: Optional[RunReport], tol: Optional[float]) -> str:
    if report is None or report.diverged:
        return DIVERGED
    if tol is None:
        return ""
    reached = report.iterations_to(tol)
    return NOT_REACHED if reached is None else str(reached)


def write_summary_csv(rows: Sequence[Dict[str, Any]], path: Optional[str], stdout: Optional[TextIO] = None) -> None:
    _write_rows(SUMMARY_COLUMNS, rows, path, stdout)


def write_tune_csv(rows: Sequence[Dict[str, Any]], path: Optional[str], stdout: Optional[TextIO] = None) -> None:
    _write_rows(TUNE_COLUMNS, rows, path, stdout)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def run_summary(report: RunReport) -> Dict[str, Any]:
    last = report.last
    return {
        "method": report.method,
        "params": dict(report.params),
        "stop_reason": report.stop_reason,
        "iterations": report.iterations,
        "diverged_at": report.diverged_at,
        "final_f": last.f,
        "final_grad_sq_norm": last.grad_sq_norm,
        "e_observed": report.e_observed,
        "gamma_observed": report.gamma_observed,
    }


def write_json(payload: Dict[str, Any], path: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_json_safe(payload), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Wrote {path}")
