"""
Report Module

ReportRow records, the CSV writer and the JSON summary. Output bytes depend
only on the rows, so a rerun with the same config and seed reproduces them.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

logger = logging.getLogger(__name__)

COLUMNS = ["id", "kind", "seed", "d", "nu", "c_d", "M", "metric", "value", "bound", "pass", "note"]
TIMING_COLUMN = "wall_time"


@dataclass
class ReportRow:
    """
    One checked metric of one trial.

    Attributes:
        experiment_id: Trial identifier
        kind: Experiment kind
        seed: Master seed
        degree: Polynomial degree d
        nu: Noise variance ν
        c_d: Attenuated signal c^d
        m: Ensemble size or shot count M
        metric: Metric name
        value: Measured value
        bound: Bound the value is checked against
        wall_time: Trial wall time in seconds
        note: Failure message for failed trials
        passed: value ≤ bound, derived
    """
    experiment_id: str
    kind: str
    seed: int
    degree: int
    nu: float
    c_d: float
    m: int
    metric: str
    value: float
    bound: float
    wall_time: float = 0.0
    note: str = ""
    passed: bool = field(init=False, default=False)

    def __post_init__(self):
        if not 0.0 < self.c_d <= 1.0:
            raise ValueError(f"c_d must lie in (0, 1], got {self.c_d}")
        self.passed = bool(self.value <= self.bound)

    @classmethod
    def failed(cls, experiment_id: str, kind: str, seed: int, nu: float, m: int, error: str) -> "ReportRow":
        """Row of a trial that raised; degree 0 so c_d is 1."""
        return cls(experiment_id, kind, seed, 0, nu, 1.0, m, "trial_failed", math.nan, 0.0, note=error)


def format_real(value: float) -> str:
    """Lossless decimal rendering with 17 significant digits."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


def _row_record(row: ReportRow, record_timing: bool) -> Dict[str, str]:
    record = {
        "id": row.experiment_id,
        "kind": row.kind,
        "seed": str(row.seed),
        "d": str(row.degree),
        "nu": format_real(row.nu),
        "c_d": format_real(row.c_d),
        "M": str(row.m),
        "metric": row.metric,
        "value": format_real(row.value),
        "bound": format_real(row.bound),
        "pass": "true" if row.passed else "false",
        "note": row.note,
    }
    if record_timing:
        record[TIMING_COLUMN] = format_real(row.wall_time)
    return record


def write_rows_csv(rows: Sequence[ReportRow], path: Path, record_timing: bool = False) -> None:
    """
    Write rows as comma-separated values with a header.

    Wall times are only written with record_timing, since they vary between runs.
    """
    columns = COLUMNS + [TIMING_COLUMN] if record_timing else COLUMNS
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(_row_record(row, record_timing))
    logger.info(f"Wrote {len(rows)} rows to {path}")


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_summary_json(summary: Dict[str, Any], path: Path) -> None:
    """Write the summary with sorted keys; non-finite numbers become null."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(_json_safe(summary), sort_keys=True, indent=2))
        handle.write("\n")
    logger.info(f"Wrote summary to {path}")


def aggregate_metrics(rows: Iterable[ReportRow], required_rates: Dict[str, float]) -> Dict[str, Dict[str, Any]]:
    """
    Per-metric counts, pass rate and value statistics.

    Metrics without an entry in required_rates must pass in every row.
    """
    grouped: Dict[str, List[ReportRow]] = {}
    for row in rows:
        grouped.setdefault(row.metric, []).append(row)
    metrics = {}
    for name, group in grouped.items():
        values = np.array([r.value for r in group], dtype=float)
        finite = values[np.isfinite(values)]
        passed = sum(r.passed for r in group)
        required = required_rates.get(name, 1.0)
        rate = passed / len(group)
        metrics[name] = {
            "count": len(group),
            "passed": passed,
            "pass_rate": rate,
            "required_pass_rate": required,
            "ok": rate >= required,
            "median": float(np.median(finite)) if finite.size else math.nan,
            "max": float(np.max(finite)) if finite.size else math.nan,
        }
    return metrics
