"""
Experiment Engine Module

Schedules the trials of one experiment on worker threads and assembles the
report. Trials write into an index-addressed table; rows and summary come from
one sequential pass over that table, so the output does not depend on the
number of threads or the completion order.
"""

import asyncio
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from .config import ConfigSerializer, ExperimentConfig
from .registry import ExperimentRegistry, TrialOutcome
from .report import ReportRow, aggregate_metrics, write_rows_csv, write_summary_json

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    """
    Outcome of one experiment run.

    Attributes:
        rows: Report rows in trial order
        summary: JSON summary
        success_count: Trials that completed
        failed_count: Trials that raised
        errors: Trial id and message of each failure
    """
    rows: List[ReportRow] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    success_count: int = 0
    failed_count: int = 0
    errors: List[Dict[str, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("passed", False))


class ExperimentEngine:
    """
    Runs experiments from a registry.

    Usage:
        engine = ExperimentEngine(build_registry(), threads=4)
        result = await engine.run(config)
        engine.write_reports(result, config, Path("out"))
    """

    def __init__(self, registry: ExperimentRegistry, threads: int = 1, record_timing: bool = False):
        """
        Initialize the engine.

        Args:
            registry: Registry of experiment kinds
            threads: Maximum number of concurrently running trials
            record_timing: Record per-trial wall time in the rows

        Raises:
            ValueError: If threads < 1
        """
        if threads < 1:
            raise ValueError(f"threads must be at least 1, got {threads}")
        self.registry = registry
        self.threads = threads
        self.record_timing = record_timing

    async def run(self, config: ExperimentConfig) -> RunResult:
        """
        Run every trial of the config's experiment.

        Args:
            config: Validated config

        Returns:
            RunResult
        """
        experiment = self.registry.get(config.kind)
        logger.info(f"Setting up '{config.kind}' experiment with seed {config.master_seed}")
        context = await asyncio.to_thread(experiment.setup, config)
        trials = experiment.plan(config, context)
        logger.info(f"Running {len(trials)} trial(s) of '{config.kind}' on {self.threads} thread(s)")

        table: List[Optional[TrialOutcome]] = [None] * len(trials)
        semaphore = asyncio.Semaphore(self.threads)

        async def run_one(position: int) -> None:
            async with semaphore:
                table[position] = await asyncio.to_thread(
                    self.registry.execute, experiment, config, context, trials[position], self.record_timing
                )

        await asyncio.gather(*(run_one(i) for i in range(len(trials))))

        result = RunResult()
        for trial, outcome in zip(trials, table):
            result.rows.extend(outcome.rows)
            if outcome.error is None:
                result.success_count += 1
            else:
                result.failed_count += 1
                result.errors.append({"trial": trial.trial_id, "error": outcome.error})

        metrics = aggregate_metrics(result.rows, experiment.required_rates)
        extra = experiment.summarize(config, context, result.rows)
        checks = extra.pop("checks", [])
        result.summary = {
            "kind": config.kind,
            "master_seed": config.master_seed,
            "config": ConfigSerializer.to_record(config),
            "trials": len(trials),
            "succeeded": result.success_count,
            "failed": result.failed_count,
            "failures": result.errors,
            "metrics": metrics,
            "checks": checks,
            **extra,
        }
        result.summary["passed"] = (
            result.failed_count == 0
            and all(m["ok"] for m in metrics.values())
            and all(c["passed"] for c in checks)
        )
        logger.info(
            f"Experiment '{config.kind}' complete: {result.success_count} succeeded, "
            f"{result.failed_count} failed, passed = {result.summary['passed']}"
        )
        return result

    def write_reports(self, result: RunResult, config: ExperimentConfig, out_dir: Path) -> Dict[str, Path]:
        """Write `<prefix>.rows.csv` and `<prefix>.summary.json` into out_dir."""
        out_dir.mkdir(parents=True, exist_ok=True)
        rows_path = out_dir / f"{config.output_prefix}.rows.csv"
        summary_path = out_dir / f"{config.output_prefix}.summary.json"
        write_rows_csv(result.rows, rows_path, self.record_timing)
        write_summary_json(result.summary, summary_path)
        return {"rows": rows_path, "summary": summary_path}
