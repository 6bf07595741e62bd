"""
Ensemble Mitigation Module

Averages independently sampled noisy QSP circuits, P̃_{2m−1}(A) and
P̃_{2m}(A)†, into a block-encoding of c^d · p(A). The expectation of a noisy
circuit is the attenuated noiseless polynomial, so rescaling the average by
1/c^d recovers p(A) up to sampling error.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg

from .block_encoding import BlockEncoding, adjoint_encoding, encoded_block
from .noise_model import NoiseModel, StreamKey, attenuation_factor, perturb_phases
from .numerics import ComplexMatrix, hadamard_transform, matfunc_hermitian, spectral_norm
from .qsp_core import PhaseFactorSequence, QubitizationCircuit, qsp_polynomial_values, qubitize

logger = logging.getLogger(__name__)

MIN_SIGNAL = 1e-6
MAX_EXPLICIT_PAIRS = 8


class IllPosedError(ValueError):
    """Raised when the attenuated signal c^d is too small to rescale."""

    def __init__(self, message: str, signal: float):
        super().__init__(message)
        self.signal = signal


def require_signal(signal: float, label: str = "c^d") -> float:
    """
    Guard the signal-to-noise ratio of a rescale.

    Raises:
        IllPosedError: If signal < 1e-6
    """
    if not signal >= MIN_SIGNAL:
        raise IllPosedError(
            f"Attenuated signal {label} = {signal:.3e} is below {MIN_SIGNAL:.0e}; "
            f"the mitigation problem is ill-posed",
            signal,
        )
    return signal


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """
    Outcome of block-level ensemble averaging.

    Attributes:
        averaged_block: 𝒫̃ = (1/2M) Σ (P̃_{2m−1}(A) + P̃_{2m}(A)†)
        sample_count: Number of pairs M
        rescale: c^d
        reference: Exact reference the rescaled block is compared with
        error: ‖𝒫̃/c^d − reference‖
        degree: Phase sequence length d
        query_depth: Oracle queries per sampled circuit
        total_queries: Oracle queries over all 2M circuits
        unmitigated_error: ‖½(P̃₁ + P̃₁†) − reference‖ of one realization
        unrescaled_error: ‖𝒫̃ − reference‖
        single_block: ½(P̃₁ + P̃₁†), the first realization on its own
    """
    averaged_block: ComplexMatrix
    sample_count: int
    rescale: float
    reference: ComplexMatrix
    error: float
    degree: int
    query_depth: int
    total_queries: int
    unmitigated_error: float
    unrescaled_error: float
    single_block: Optional[ComplexMatrix] = None

    @property
    def scaling_factor(self) -> float:
        return 1.0 / self.rescale

    @property
    def rescaled_block(self) -> ComplexMatrix:
        return self.averaged_block / self.rescale


def polynomial_reference(encoding: BlockEncoding, phi: PhaseFactorSequence) -> ComplexMatrix:
    """Eigendecomposition oracle for p(A) = Re P(A)."""
    return matfunc_hermitian(
        encoded_block(encoding),
        lambda x: float(qsp_polynomial_values(phi, np.array([x])).real[0]),
    )


def noisy_block(
    circuit: QubitizationCircuit,
    phi: PhaseFactorSequence,
    model: NoiseModel,
    key: StreamKey,
) -> ComplexMatrix:
    noisy = perturb_phases(phi, model, key.generator())
    return circuit.block(noisy.phases)


def sample_noisy_block(
    encoding: BlockEncoding,
    phi: PhaseFactorSequence,
    model: NoiseModel,
    key: StreamKey,
) -> ComplexMatrix:
    """
    One realization of P̃(A).

    Args:
        encoding: Block-encoding U_A of a Hermitian contraction
        phi: Noiseless phase factors
        model: Phase-error distribution
        key: Stream key of this sample

    Returns:
        Encoded block of the qubitized circuit with perturbed phases
    """
    return noisy_block(QubitizationCircuit(encoding), phi, model, key)


def ensemble_average_block(
    encoding: BlockEncoding,
    phi: PhaseFactorSequence,
    model: NoiseModel,
    sample_count: int,
    master_key: StreamKey,
    reference: Optional[ComplexMatrix] = None,
) -> EnsembleResult:
    """
    Block-level ensemble average of 2M independent noisy circuits.

    Sample i draws its errors from master_key.child(i); odd-indexed samples
    enter the average as adjoints. Samples land in a preallocated table that
    is reduced once, so the result does not depend on evaluation order.

    Args:
        encoding: Block-encoding U_A of a Hermitian contraction
        phi: Noiseless phase factors
        model: Phase-error distribution
        sample_count: Number of pairs M ≥ 1
        master_key: Stream key of this ensemble
        reference: Matrix the rescaled average is compared with; defaults to p(A)

    Returns:
        EnsembleResult

    Raises:
        ValueError: If M < 1
        IllPosedError: If c^d < 1e-6
    """
    if sample_count < 1:
        raise ValueError(f"Ensemble size must be at least 1, got {sample_count}")
    rescale = require_signal(attenuation_factor(model) ** phi.degree)
    if reference is None:
        reference = polynomial_reference(encoding, phi)

    circuit = QubitizationCircuit(encoding)
    n = encoding.system_dim
    samples = np.empty((2 * sample_count, n, n), dtype=complex)
    for i in range(2 * sample_count):
        block = noisy_block(circuit, phi, model, master_key.child(i))
        samples[i] = block if i % 2 == 0 else block.conj().T

    averaged = samples.sum(axis=0) / (2 * sample_count)
    single = 0.5 * (samples[0] + samples[0].conj().T)
    error = spectral_norm(averaged / rescale - reference)
    logger.debug(
        f"Averaged {2 * sample_count} noisy circuits of degree {phi.degree}: "
        f"c^d = {rescale:.6f}, error = {error:.3e}"
    )
    return EnsembleResult(
        averaged_block=averaged,
        sample_count=sample_count,
        rescale=rescale,
        reference=reference,
        error=error,
        degree=phi.degree,
        query_depth=circuit.last_depth,
        total_queries=circuit.queries,
        unmitigated_error=spectral_norm(single - reference),
        unrescaled_error=spectral_norm(averaged - reference),
        single_block=single,
    )


def noisy_sample_encodings(
    encoding: BlockEncoding,
    phi: PhaseFactorSequence,
    model: NoiseModel,
    sample_count: int,
    master_key: StreamKey,
) -> List[BlockEncoding]:
    """
    The 2M sampled block-encodings behind `ensemble_average_block`.

    Uses the same stream keys, so the blocks match the averaged samples.
    Odd-indexed encodings are adjoints.
    """
    encodings = []
    for i in range(2 * sample_count):
        noisy = perturb_phases(phi, model, master_key.child(i).generator())
        sampled = qubitize(encoding, noisy)
        encodings.append(sampled if i % 2 == 0 else adjoint_encoding(sampled))
    return encodings


def explicit_lcu_average(samples: Sequence[BlockEncoding]) -> BlockEncoding:
    """
    Literal LCU unitary (H^{⊗r} ⊗ I) · select · (H^{⊗r} ⊗ I) over 2M samples.

    Args:
        samples: 2M block-encodings sharing their register sizes, M a power of two, M ≤ 8

    Returns:
        Block-encoding whose block is the arithmetic average of the sample blocks

    Raises:
        ValueError: If the sample count is not 2M with M a power of two, or M > 8
    """
    count = len(samples)
    pairs = count // 2
    if count == 0 or count % 2 or pairs & (pairs - 1):
        raise ValueError(f"Explicit LCU needs 2M samples with M a power of two, got {count}")
    if pairs > MAX_EXPLICIT_PAIRS:
        raise ValueError(
            f"Explicit LCU is limited to M ≤ {MAX_EXPLICIT_PAIRS} pairs, got M = {pairs}"
        )
    shapes = {(s.ancilla_qubits, s.system_qubits) for s in samples}
    if len(shapes) != 1:
        raise ValueError(f"Samples have mismatched register sizes {sorted(shapes)}")

    select_qubits = count.bit_length() - 1
    inner_dim = samples[0].unitary.shape[0]
    spread = np.kron(hadamard_transform(select_qubits), np.eye(inner_dim))
    select = linalg.block_diag(*(s.unitary for s in samples))
    ancillas, system_qubits = shapes.pop()
    return BlockEncoding(
        unitary=spread @ select @ spread,
        ancilla_qubits=ancillas + select_qubits,
        system_qubits=system_qubits,
    )


def ensemble_size_for(eps_imp: float, delta: float, c: float, degree: int) -> int:
    """
    Ensemble size M = ⌈ln(2/δ) / (ε · c^d)²⌉.

    Raises:
        ValueError: If ε or δ lie outside (0, 1) or c outside (0, 1]
        IllPosedError: If c^d < 1e-6
    """
    if not 0.0 < eps_imp < 1.0:
        raise ValueError(f"eps_imp must lie in (0, 1), got {eps_imp}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not 0.0 < c <= 1.0:
        raise ValueError(f"Attenuation factor must lie in (0, 1], got {c}")
    signal = require_signal(c ** degree)
    return max(1, int(np.ceil(np.log(2.0 / delta) / (eps_imp * signal) ** 2)))


@dataclass(frozen=True, eq=False)
class ExpectationCheck:
    """
    Monte Carlo check of E[P̃(A)] = c^d · P(A).

    Attributes:
        mean_block: Entrywise mean of the sampled blocks
        predicted: c^d · P(A)
        max_deviation: Largest entrywise |mean − predicted|
        standard_error: Largest entrywise standard error of the mean
        sample_count: Number of samples N
    """
    mean_block: ComplexMatrix
    predicted: ComplexMatrix
    max_deviation: float
    standard_error: float
    sample_count: int


def expectation_check(
    encoding: BlockEncoding,
    phi: PhaseFactorSequence,
    model: NoiseModel,
    sample_count: int,
    master_key: StreamKey,
) -> ExpectationCheck:
    """
    Compare the mean of N noisy blocks with the attenuated noiseless block.

    Raises:
        ValueError: If N < 2
    """
    if sample_count < 2:
        raise ValueError(f"Expectation check needs at least 2 samples, got {sample_count}")
    circuit = QubitizationCircuit(encoding)
    n = encoding.system_dim
    samples = np.empty((sample_count, n, n), dtype=complex)
    for i in range(sample_count):
        samples[i] = noisy_block(circuit, phi, model, master_key.child(i))

    predicted = attenuation_factor(model) ** phi.degree * circuit.block(phi.phases)
    # shifted mean: identical samples reproduce the first one bit for bit
    mean = samples[0] + (samples - samples[0]).mean(axis=0)
    spread = np.sqrt(samples.real.var(axis=0, ddof=1) + samples.imag.var(axis=0, ddof=1))
    return ExpectationCheck(
        mean_block=mean,
        predicted=predicted,
        max_deviation=float(np.max(np.abs(mean - predicted))),
        standard_error=float(np.max(spread) / np.sqrt(sample_count)),
        sample_count=sample_count,
    )


@dataclass(frozen=True)
class ErrorBudget:
    """
    Split of a total error into implementation and algorithmic parts.

    Attributes:
        implementation: ε_imp, rescaled average vs the polynomial
        algorithmic: ε_alg, polynomial vs the exact function
        total: ε_tot, rescaled average vs the exact function
    """
    implementation: float
    algorithmic: float
    total: float

    @property
    def consistent(self) -> bool:
        return self.total <= self.implementation + self.algorithmic + 1e-9


def split_error_budget(eps: float) -> ErrorBudget:
    """Balanced allocation ε_imp = ε_alg = ε/2."""
    if not eps > 0:
        raise ValueError(f"Error budget must be positive, got {eps}")
    return ErrorBudget(implementation=0.5 * eps, algorithmic=0.5 * eps, total=eps)


def measure_error_budget(
    rescaled: ComplexMatrix,
    polynomial_reference: ComplexMatrix,
    exact_reference: ComplexMatrix,
) -> ErrorBudget:
    """Measured ε_imp, ε_alg and ε_tot in spectral norm."""
    return ErrorBudget(
        implementation=spectral_norm(rescaled - polynomial_reference),
        algorithmic=spectral_norm(polynomial_reference - exact_reference),
        total=spectral_norm(rescaled - exact_reference),
    )
