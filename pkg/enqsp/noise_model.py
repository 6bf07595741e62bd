"""
Noise Model Module

Even, zero-mean additive phase errors φ̃_j = φ_j + e_j, their closed-form
attenuation c = E[cos e], and counter-based random streams keyed by
(master seed, experiment, sample, ...) so draws do not depend on execution order.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Tuple

import numpy as np

from .qsp_core import PhaseFactorSequence

logger = logging.getLogger(__name__)


class NoiseKind(str, Enum):
    """Supported phase-error distributions."""
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    TWO_POINT = "two_point"
    NONE = "none"


@dataclass(frozen=True)
class NoiseModel:
    """
    I.i.d. additive phase-error distribution.

    Attributes:
        kind: Distribution family
        parameter: Variance ν for gaussian; half-width a for uniform;
            magnitude a for two_point; ignored for none
    """
    kind: NoiseKind = NoiseKind.NONE
    parameter: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if not np.isfinite(self.parameter) or self.parameter < 0:
            raise ValueError(f"Noise parameter must be finite and non-negative, got {self.parameter}")

    @classmethod
    def gaussian(cls, variance: float) -> "NoiseModel":
        return cls(NoiseKind.GAUSSIAN, variance)

    @classmethod
    def uniform(cls, half_width: float) -> "NoiseModel":
        return cls(NoiseKind.UNIFORM, half_width)

    @classmethod
    def two_point(cls, magnitude: float) -> "NoiseModel":
        return cls(NoiseKind.TWO_POINT, magnitude)

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(NoiseKind.NONE, 0.0)

    @property
    def variance(self) -> float:
        """Per-position variance ν in radians²."""
        if self.kind is NoiseKind.GAUSSIAN:
            return self.parameter
        if self.kind is NoiseKind.UNIFORM:
            return self.parameter ** 2 / 3.0
        if self.kind is NoiseKind.TWO_POINT:
            return self.parameter ** 2
        return 0.0

    def with_parameter(self, parameter: float) -> "NoiseModel":
        return NoiseModel(self.kind, parameter)

    def with_variance(self, variance: float) -> "NoiseModel":
        """
        Same distribution family with per-position variance ν.

        Raises:
            ValueError: If ν < 0, or ν > 0 for kind none
        """
        if variance < 0:
            raise ValueError(f"Variance must be non-negative, got {variance}")
        if self.kind is NoiseKind.GAUSSIAN:
            return NoiseModel(self.kind, variance)
        if self.kind is NoiseKind.UNIFORM:
            return NoiseModel(self.kind, float(np.sqrt(3.0 * variance)))
        if self.kind is NoiseKind.TWO_POINT:
            return NoiseModel(self.kind, float(np.sqrt(variance)))
        if variance > 0:
            raise ValueError(f"Noise kind 'none' cannot carry variance {variance}")
        return self

    def to_record(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "parameter": self.parameter}

    @staticmethod
    def from_record(record: Dict[str, Any]) -> "NoiseModel":
        """
        Build a model from a {kind, parameter} record.

        Raises:
            ValueError: If the kind is unknown or the parameter invalid
        """
        kind = record.get("kind", NoiseKind.NONE.value)
        valid = [k.value for k in NoiseKind]
        if kind not in valid:
            raise ValueError(f"Unknown noise kind '{kind}'; valid kinds: {valid}")
        parameter = record.get("parameter", 0.0)
        if isinstance(parameter, bool) or not isinstance(parameter, (int, float)):
            raise ValueError(f"Noise parameter must be a number, got {parameter!r}")
        return NoiseModel(NoiseKind(kind), float(parameter))


@dataclass(frozen=True)
class StreamKey:
    """
    Address of an independent random stream.

    The Philox counter inside each stream orders the draws, so position j of a
    phase sequence is the j-th draw of its sample's stream.

    Attributes:
        master_seed: 64-bit master seed
        path: Experiment / sample / role indices below the master seed
    """
    master_seed: int
    path: Tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError(f"Master seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if any(i < 0 for i in self.path):
            raise ValueError(f"Stream key indices must be non-negative, got {self.path}")

    def child(self, *indices: int) -> "StreamKey":
        return StreamKey(self.master_seed, self.path + tuple(int(i) for i in indices))

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(sequence))


def sample_errors(model: NoiseModel, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw `size` i.i.d. phase errors."""
    if model.kind is NoiseKind.GAUSSIAN:
        return rng.normal(0.0, np.sqrt(model.parameter), size)
    if model.kind is NoiseKind.UNIFORM:
        return rng.uniform(-model.parameter, model.parameter, size)
    if model.kind is NoiseKind.TWO_POINT:
        return model.parameter * rng.choice(np.array([-1.0, 1.0]), size)
    return np.zeros(size)


def sample_error(model: NoiseModel, rng: np.random.Generator) -> float:
    """
    One draw from the phase-error distribution.

    Args:
        model: Noise model
        rng: Random stream

    Returns:
        Phase error in radians
    """
    return float(sample_errors(model, rng, 1)[0])


def attenuation_factor(model: NoiseModel) -> float:
    """
    Closed-form c = E[cos e].

    gaussian(ν): e^{−ν/2}; uniform(a): sin(a)/a; two_point(a): cos(a); none: 1.
    """
    if model.kind is NoiseKind.GAUSSIAN:
        return float(np.exp(-0.5 * model.parameter))
    if model.kind is NoiseKind.UNIFORM:
        return float(np.sinc(model.parameter / np.pi))
    if model.kind is NoiseKind.TWO_POINT:
        return float(np.cos(model.parameter))
    return 1.0


def attenuation_estimate(variance: float) -> float:
    """First-order estimate c ≈ 1 − ν/2."""
    return 1.0 - 0.5 * variance


def scaling_factor(model: NoiseModel, degree: int) -> float:
    """Scaling factor α = 1 / c^d of a length-d noisy sequence."""
    return 1.0 / attenuation_factor(model) ** degree


def perturb_phases(phi: PhaseFactorSequence, model: NoiseModel, rng: np.random.Generator) -> PhaseFactorSequence:
    """
    Add independent errors to every phase.

    Args:
        phi: Noiseless phases
        model: Noise model
        rng: Random stream of this sample

    Returns:
        Phases φ_j + e_j of the same length
    """
    if model.kind is NoiseKind.NONE:
        return phi
    errors = sample_errors(model, rng, phi.degree)
    return PhaseFactorSequence(tuple(phi.as_array() + errors))
