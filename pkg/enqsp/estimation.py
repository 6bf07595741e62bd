"""
Estimation Module

Hadamard test for random non-unitary matrices and observable estimation from
noisy QSP. Each shot samples a fresh Õ, computes the exact distribution of the
three outcome codes (+1, −1, 0) of the Hadamard-test circuit for that Õ, and
draws one outcome from it.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Protocol, Tuple, Union

import numpy as np

from .block_encoding import BlockEncoding
from .ensemble_mitigation import noisy_block, polynomial_reference, require_signal
from .noise_model import NoiseModel, StreamKey, attenuation_factor
from .numerics import ComplexMatrix, as_matrix, as_state, require_hermitian, spectral_norm
from .qsp_core import PhaseFactorSequence, QubitizationCircuit

logger = logging.getLogger(__name__)

CONTRACTION_TOL = 1e-9
OUTCOMES = np.array([1, -1, 0])


@dataclass(frozen=True)
class ObservableEstimate:
    """
    Result of a Hadamard-test estimation run.

    Attributes:
        value: Rescaled estimate
        shots: Number of shots M
        rescale: Divisor applied to the raw mean
        reference: Oracle value, if known
        standard_error: Sample std / √M, divided by the rescale
        raw_value: Mean outcome before rescaling
        counts: Outcome counts (+1, −1, 0)
        total_queries: Oracle queries over all shots
    """
    value: float
    shots: int
    rescale: float
    reference: Optional[float]
    standard_error: float
    raw_value: float
    counts: Tuple[int, int, int]
    total_queries: int = 0

    @property
    def error(self) -> Optional[float]:
        if self.reference is None:
            return None
        return abs(self.value - self.reference)


class RandomBlockSampler(Protocol):
    """Source of random contractions Õ, one per stream key."""

    queries_per_shot: int

    def sample(self, key: StreamKey) -> ComplexMatrix:
        ...


def _contraction(operator: Union[BlockEncoding, ComplexMatrix]) -> ComplexMatrix:
    if isinstance(operator, BlockEncoding):
        return operator.top_left
    return as_matrix(operator, "operator")


def hadamard_distribution(
    operator: Union[BlockEncoding, ComplexMatrix],
    psi: np.ndarray,
) -> Tuple[float, float, float]:
    """
    Outcome distribution of the Hadamard test for one Õ.

    p₊ = ¼‖(I + Õ)ψ‖², p₋ = ¼‖(I − Õ)ψ‖², p₀ = 1 − p₊ − p₋; the mean
    outcome p₊ − p₋ is Re⟨ψ|Õ|ψ⟩.

    Args:
        operator: Block-encoding U_O or the matrix Õ itself
        psi: Normalized state

    Returns:
        (p₊, p₋, p₀)

    Raises:
        ValueError: If ‖Õ‖ > 1 + 1e-9, ψ is not normalized or dimensions differ
    """
    o = _contraction(operator)
    state = as_state(psi, "psi")
    if o.shape != (state.size, state.size):
        raise ValueError(f"Operator shape {o.shape} does not match state dimension {state.size}")
    norm = spectral_norm(o)
    if norm > 1.0 + CONTRACTION_TOL:
        raise ValueError(f"Hadamard test needs ‖Õ‖ ≤ 1, got {norm:.12f}")
    applied = o @ state
    plus = 0.25 * float(np.linalg.norm(state + applied) ** 2)
    minus = 0.25 * float(np.linalg.norm(state - applied) ** 2)
    zero = max(0.0, 1.0 - plus - minus)
    return plus, minus, zero


class FixedSampler:
    """Deterministic Õ; every shot sees the same matrix."""

    queries_per_shot = 0

    def __init__(self, operator: Union[BlockEncoding, ComplexMatrix]):
        self.operator = _contraction(operator)

    def sample(self, key: StreamKey) -> ComplexMatrix:
        return self.operator


class SignFlipSampler:
    """Õ = ±O with probability ½ each."""

    queries_per_shot = 0

    def __init__(self, operator: Union[BlockEncoding, ComplexMatrix]):
        self.operator = _contraction(operator)

    def sample(self, key: StreamKey) -> ComplexMatrix:
        sign = key.generator().choice(np.array([1.0, -1.0]))
        return sign * self.operator


class NoisyQSPSampler:
    """Õ = ½(P̃₁(A) + P̃₂(A)†) with E[Õ] = c^d p(A)."""

    def __init__(self, encoding: BlockEncoding, phi: PhaseFactorSequence, model: NoiseModel):
        self.circuit = QubitizationCircuit(encoding)
        self.phi = phi
        self.model = model
        self.queries_per_shot = 2 * phi.degree

    def sample(self, key: StreamKey) -> ComplexMatrix:
        first = noisy_block(self.circuit, self.phi, self.model, key.child(0))
        second = noisy_block(self.circuit, self.phi, self.model, key.child(1))
        return 0.5 * (first + second.conj().T)


class SandwichSampler:
    """
    Õ = ¼(P̃₁(A) + P̃₂(A)†) O (P̃₃(A) + P̃₄(A)†) from four independent circuits.

    E[Õ] = c^{2d} p(A)† O p(A).
    """

    def __init__(
        self,
        encoding: BlockEncoding,
        phi: PhaseFactorSequence,
        model: NoiseModel,
        observable: ComplexMatrix,
    ):
        self.circuit = QubitizationCircuit(encoding)
        self.phi = phi
        self.model = model
        self.observable = observable
        self.queries_per_shot = 4 * phi.degree

    def sample(self, key: StreamKey) -> ComplexMatrix:
        blocks = [noisy_block(self.circuit, self.phi, self.model, key.child(i)) for i in range(4)]
        left = blocks[0] + blocks[1].conj().T
        right = blocks[2] + blocks[3].conj().T
        return 0.25 * left @ self.observable @ right


def run_hadamard_test(
    sampler: RandomBlockSampler,
    psi: np.ndarray,
    shots: int,
    master_key: StreamKey,
    rescale: float = 1.0,
    reference: Optional[float] = None,
) -> ObservableEstimate:
    """
    Randomized Hadamard test.

    Shot m samples Õ from master_key.child(m, 0) and its outcome from
    master_key.child(m, 1). Outcomes fill a preallocated array that is reduced
    once after all shots.

    Args:
        sampler: Source of random contractions
        psi: Normalized state
        shots: Number of shots M ≥ 1
        master_key: Stream key of this run
        rescale: Divisor applied to the mean outcome
        reference: Oracle value recorded with the estimate

    Returns:
        ObservableEstimate

    Raises:
        ValueError: If M < 1 or a sampled Õ is not a contraction
    """
    if shots < 1:
        raise ValueError(f"Hadamard test needs at least one shot, got {shots}")
    state = as_state(psi, "psi")
    outcomes = np.empty(shots, dtype=int)
    for m in range(shots):
        shot_key = master_key.child(m)
        probabilities = np.array(hadamard_distribution(sampler.sample(shot_key.child(0)), state))
        outcomes[m] = shot_key.child(1).generator().choice(OUTCOMES, p=probabilities / probabilities.sum())

    raw = float(outcomes.mean())
    spread = float(outcomes.std(ddof=1)) if shots > 1 else 0.0
    counts = (int(np.sum(outcomes == 1)), int(np.sum(outcomes == -1)), int(np.sum(outcomes == 0)))
    logger.debug(f"Hadamard test over {shots} shots: mean {raw:.6f}, counts {counts}")
    return ObservableEstimate(
        value=raw / rescale,
        shots=shots,
        rescale=rescale,
        reference=reference,
        standard_error=spread / np.sqrt(shots) / rescale,
        raw_value=raw,
        counts=counts,
        total_queries=sampler.queries_per_shot * shots,
    )


def estimate_qsp_observable(
    encoding: BlockEncoding,
    phi: PhaseFactorSequence,
    observable: Union[BlockEncoding, ComplexMatrix],
    psi: np.ndarray,
    model: NoiseModel,
    shots: int,
    master_key: StreamKey,
) -> ObservableEstimate:
    """
    Estimate ⟨ψ|p(A)† O p(A)|ψ⟩ from noisy QSP.

    Each shot forms the sandwich Õ from four independent noisy circuits; the
    mean outcome is divided by c^{2d}.

    Args:
        encoding: Block-encoding U_A of a Hermitian contraction
        phi: Noiseless phase factors of p
        observable: Block-encoding U_O, or the matrix O, with ‖O‖ ≤ 1
        psi: Normalized state
        model: Phase-error distribution
        shots: Number of shots M
        master_key: Stream key of this run

    Returns:
        ObservableEstimate with the oracle reference attached

    Raises:
        ValueError: If O is not a Hermitian contraction
        IllPosedError: If c^{2d} < 1e-6
    """
    o = require_hermitian(_contraction(observable), "observable")
    if isinstance(observable, BlockEncoding):
        o = observable.scale * o
    norm = spectral_norm(o)
    if norm > 1.0 + CONTRACTION_TOL:
        raise ValueError(f"Observable must satisfy ‖O‖ ≤ 1, got {norm:.12f}")
    rescale = require_signal(attenuation_factor(model) ** (2 * phi.degree), "c^{2d}")
    state = as_state(psi, "psi")
    p = polynomial_reference(encoding, phi)
    reference = float(np.vdot(p @ state, o @ (p @ state)).real)

    sampler = SandwichSampler(encoding, phi, model, o)
    estimate = run_hadamard_test(sampler, state, shots, master_key, rescale=rescale, reference=reference)
    logger.info(
        f"Observable estimate {estimate.value:.6f} ± {estimate.standard_error:.2e} "
        f"(reference {reference:.6f}, {shots} shots)"
    )
    return estimate


def shots_for(eps: float, delta: float, c: float, degree: int, power: int) -> int:
    """
    Shot count M = ⌈2 ln(2/δ) / (ε · c^{d·power/2})²⌉.

    power 0 is the plain test, 2 one noisy factor, 4 the two-sided sandwich.

    Raises:
        ValueError: If ε ∉ (0, 1], δ ∉ (0, 1), c ∉ (0, 1] or power ∉ {0, 2, 4}
        IllPosedError: If the attenuated ε is below 1e-6
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not 0.0 < c <= 1.0:
        raise ValueError(f"Attenuation factor must lie in (0, 1], got {c}")
    if power not in (0, 2, 4):
        raise ValueError(f"power must be 0, 2 or 4, got {power}")
    attenuated = require_signal(eps * c ** (degree * power // 2), "attenuated eps")
    return max(1, int(np.ceil(2.0 * np.log(2.0 / delta) / attenuated ** 2)))
