"""
Experiment Configuration Module

Defines ExperimentConfig, its JSON serializer, and validation that reports
every problem in a config at once.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Dict, List, Optional

import numpy as np

from enqsp.noise_model import NoiseModel

if TYPE_CHECKING:
    from .registry import ExperimentRegistry

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = (
    "expectation_check",
    "ensemble_convergence",
    "lcu_equivalence",
    "phase_roundtrip",
    "hadamard_unbiased",
    "observable",
    "hsim",
    "qlsp",
    "gsp",
)
KNOWN_FIELDS = {"kind", "master_seed", "noise", "trials", "sweep", "params", "output_prefix"}
DEFAULT_NOISE = {"kind": "gaussian", "parameter": 0.05}
DEFAULT_M_VALUES = [100, 400, 1600, 6400]


class ConfigValidationError(ValueError):
    """Raised with the full list of problems found in an experiment config."""

    def __init__(self, errors: List[str]):
        super().__init__("Invalid experiment config:\n" + "\n".join(f"  - {e}" for e in errors))
        self.errors = errors


@dataclass
class SweepConfig:
    """Sweep lists: ensemble sizes / shot counts M and noise variances ν."""
    m_values: List[int] = field(default_factory=lambda: list(DEFAULT_M_VALUES))
    nu_values: List[float] = field(default_factory=list)


@dataclass
class ExperimentConfig:
    """
    One experiment run.

    Attributes:
        kind: Experiment kind
        master_seed: 64-bit master seed of every random stream
        noise: Noise family; the sweep's ν values set its variance
        trials: Repetitions per sweep point
        sweep: Sweep lists
        params: Kind-specific parameters, defaults filled in
        output_prefix: Prefix of the report files
    """
    kind: str
    master_seed: int
    noise: NoiseModel = field(default_factory=lambda: NoiseModel.from_record(DEFAULT_NOISE))
    trials: int = 50
    sweep: SweepConfig = field(default_factory=SweepConfig)
    params: Dict[str, Any] = field(default_factory=dict)
    output_prefix: str = "enqsp"

    def __post_init__(self):
        if not self.sweep.nu_values:
            self.sweep.nu_values = [self.noise.variance]

    def with_seed(self, master_seed: int) -> "ExperimentConfig":
        return replace(self, master_seed=master_seed)

    def noise_at(self, variance: float) -> NoiseModel:
        return self.noise.with_variance(variance)


class ConfigSerializer:
    """Serializer for converting ExperimentConfig to/from JSON."""

    @staticmethod
    def to_record(config: ExperimentConfig) -> Dict[str, Any]:
        return {
            "kind": config.kind,
            "master_seed": config.master_seed,
            "noise": config.noise.to_record(),
            "trials": config.trials,
            "sweep": {"m_values": list(config.sweep.m_values), "nu_values": list(config.sweep.nu_values)},
            "params": config.params,
            "output_prefix": config.output_prefix,
        }

    @staticmethod
    def to_json(config: ExperimentConfig) -> str:
        """
        Serialize a config to JSON.

        Raises:
            TypeError: If params hold non-JSON-serializable values
        """
        try:
            return json.dumps(ConfigSerializer.to_record(config), sort_keys=True, indent=2)
        except TypeError as e:
            raise TypeError(f"Experiment params must be JSON-serializable. Error: {e}") from e

    @staticmethod
    def from_json(json_str: str) -> ExperimentConfig:
        """
        Parse and validate a config without kind-specific parameter checks.

        Raises:
            ConfigValidationError: Listing every problem found
        """
        return validate_config(json_str)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and bool(np.isfinite(value))


def validate_config(raw: str, registry: Optional["ExperimentRegistry"] = None) -> ExperimentConfig:
    """
    Parse a JSON config and fill in defaults.

    Args:
        raw: JSON text
        registry: When given, also runs the kind's parameter checks and
            merges its parameter defaults

    Returns:
        ExperimentConfig

    Raises:
        ConfigValidationError: Listing every problem, not just the first
    """
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ConfigValidationError([f"Invalid JSON format: {e}"]) from e
    if not isinstance(data, dict):
        raise ConfigValidationError([f"config must be a JSON object, got {type(data).__name__}"])

    errors: List[str] = []
    for unknown in sorted(set(data) - KNOWN_FIELDS):
        errors.append(f"{unknown}: unknown field; valid fields: {sorted(KNOWN_FIELDS)}")

    kind = data.get("kind")
    valid_kinds = list(registry.kinds()) if registry is not None else list(EXPERIMENT_KINDS)
    if kind is None:
        errors.append("kind: missing")
    elif kind not in valid_kinds:
        errors.append(f"kind: unknown kind '{kind}'; valid kinds: {valid_kinds}")

    seed = data.get("master_seed")
    if seed is None:
        errors.append("master_seed: missing")
    elif not _is_int(seed) or not 0 <= seed < 2 ** 64:
        errors.append(f"master_seed: must be an integer in [0, 2^64), got {seed!r}")

    noise = None
    noise_record = data.get("noise", DEFAULT_NOISE)
    if not isinstance(noise_record, dict):
        errors.append(f"noise: must be an object {{kind, parameter}}, got {noise_record!r}")
    else:
        try:
            noise = NoiseModel.from_record(noise_record)
        except ValueError as e:
            errors.append(f"noise: {e}")

    trials = data.get("trials", 50)
    if not _is_int(trials) or trials < 1:
        errors.append(f"trials: must be a positive integer, got {trials!r}")

    sweep = SweepConfig()
    sweep_record = data.get("sweep", {})
    if not isinstance(sweep_record, dict):
        errors.append(f"sweep: must be an object, got {sweep_record!r}")
    else:
        m_values = sweep_record.get("m_values", DEFAULT_M_VALUES)
        if not isinstance(m_values, list) or not m_values or not all(_is_int(m) and m >= 1 for m in m_values):
            errors.append(f"sweep.m_values: must be a non-empty list of positive integers, got {m_values!r}")
        else:
            sweep.m_values = list(m_values)
        nu_values = sweep_record.get("nu_values")
        if nu_values is not None:
            if not isinstance(nu_values, list) or not nu_values or not all(_is_number(v) and v >= 0 for v in nu_values):
                errors.append(f"sweep.nu_values: must be a non-empty list of non-negative numbers, got {nu_values!r}")
            else:
                sweep.nu_values = [float(v) for v in nu_values]
                if noise is not None:
                    for v in sweep.nu_values:
                        try:
                            noise.with_variance(v)
                        except ValueError as e:
                            errors.append(f"sweep.nu_values: {e}")

    params = data.get("params", {})
    if not isinstance(params, dict):
        errors.append(f"params: must be an object, got {params!r}")
        params = {}

    prefix = data.get("output_prefix", kind if isinstance(kind, str) else "enqsp")
    if not isinstance(prefix, str) or not prefix:
        errors.append(f"output_prefix: must be a non-empty string, got {prefix!r}")

    if errors:
        logger.error(f"Config validation found {len(errors)} error(s)")
        raise ConfigValidationError(errors)

    config = ExperimentConfig(
        kind=kind,
        master_seed=seed,
        noise=noise,
        trials=trials,
        sweep=sweep,
        params=dict(params),
        output_prefix=prefix,
    )
    if registry is not None:
        errors = registry.complete(config)
        if errors:
            logger.error(f"Config validation found {len(errors)} parameter error(s)")
            raise ConfigValidationError(errors)
    logger.debug(f"Validated {config.kind} config with seed {config.master_seed}")
    return config
