"""
Experiment Registry Module

Maps experiment kinds to their runners and executes single trials with
failure isolation: a trial that raises is logged, recorded as a failed row,
and the sweep continues.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Protocol

from enqsp.noise_model import StreamKey

from .config import ExperimentConfig
from .report import ReportRow

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrialSpec:
    """
    One trial of a sweep.

    Attributes:
        index: Position in the trial table; also the stream index of the trial
        nu: Noise variance ν
        m: Ensemble size or shot count
        repeat: Repetition number at this sweep point
        label: Extra discriminator, e.g. a sampler name
    """
    index: int
    nu: float
    m: int
    repeat: int
    label: str = ""

    @property
    def trial_id(self) -> str:
        base = f"nu={self.nu:g}/M={self.m}/t={self.repeat}"
        return f"{self.label}/{base}" if self.label else base

    def key(self, master_seed: int) -> StreamKey:
        return StreamKey(master_seed, (0, self.index))


class Experiment(Protocol):
    """
    Protocol for experiment kinds.

    setup runs once before any trial and returns read-only shared state;
    run_trial must only touch its own trial's streams.
    """

    kind: str
    description: str
    defaults: Dict[str, Any]
    required_rates: Dict[str, float]

    def check(self, config: ExperimentConfig) -> List[str]:
        ...

    def plan(self, config: ExperimentConfig, context: Any) -> List[TrialSpec]:
        ...

    def setup(self, config: ExperimentConfig) -> Any:
        ...

    def run_trial(self, config: ExperimentConfig, context: Any, trial: TrialSpec) -> List[ReportRow]:
        ...

    def summarize(self, config: ExperimentConfig, context: Any, rows: List[ReportRow]) -> Dict[str, Any]:
        ...


@dataclass
class TrialOutcome:
    """Rows of one trial, or the error that stopped it."""
    rows: List[ReportRow] = field(default_factory=list)
    error: Optional[str] = None


class ExperimentRegistry:
    """Registry of experiment kinds."""

    def __init__(self):
        """Initialize an empty registry."""
        self.experiments: Dict[str, Experiment] = {}
        logger.debug("ExperimentRegistry initialized")

    def register(self, experiment: Experiment) -> None:
        """
        Register an experiment under its kind.

        Raises:
            ValueError: If the kind is already registered
        """
        if experiment.kind in self.experiments:
            raise ValueError(f"Experiment kind '{experiment.kind}' is already registered")
        self.experiments[experiment.kind] = experiment
        logger.debug(f"Registered experiment {experiment.__class__.__name__} for kind '{experiment.kind}'")

    def kinds(self) -> List[str]:
        return list(self.experiments)

    def get(self, kind: str) -> Experiment:
        """
        Look up an experiment.

        Raises:
            ValueError: If the kind is unknown
        """
        if kind not in self.experiments:
            raise ValueError(f"Unknown experiment kind '{kind}'; valid kinds: {self.kinds()}")
        return self.experiments[kind]

    def complete(self, config: ExperimentConfig) -> List[str]:
        """Merge the kind's parameter defaults into the config and run its checks."""
        experiment = self.get(config.kind)
        unknown = sorted(set(config.params) - set(experiment.defaults))
        errors = [
            f"params.{name}: unknown parameter for '{config.kind}'; valid parameters: {sorted(experiment.defaults)}"
            for name in unknown
        ]
        config.params = {**experiment.defaults, **config.params}
        return errors + experiment.check(config)

    def execute(self, experiment: Experiment, config: ExperimentConfig, context: Any, trial: TrialSpec,
                record_timing: bool = False) -> TrialOutcome:
        """
        Run one trial, isolating its failure.

        Args:
            experiment: Experiment to run
            config: Validated config
            context: Result of experiment.setup
            trial: Trial to run
            record_timing: Attach the wall time to every row

        Returns:
            TrialOutcome with the trial's rows, or a single failed row
        """
        start = time.perf_counter()
        try:
            rows = experiment.run_trial(config, context, trial)
        except Exception as e:
            error = f"{e.__class__.__name__}: {e}"
            logger.error(f"Trial {trial.trial_id} of '{config.kind}' failed: {error}", exc_info=True)
            row = ReportRow.failed(trial.trial_id, config.kind, config.master_seed, trial.nu, trial.m, error)
            return TrialOutcome(rows=[row], error=error)
        elapsed = time.perf_counter() - start
        if record_timing:
            for row in rows:
                row.wall_time = elapsed
        logger.debug(f"Trial {trial.trial_id} produced {len(rows)} row(s) in {elapsed:.3f}s")
        return TrialOutcome(rows=rows)
