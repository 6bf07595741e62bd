"""
Applications Module

End-to-end noisy drivers for Hamiltonian simulation, quantum linear systems and
ground-state preparation. Each driver builds a certified polynomial, solves its
phases, averages noisy QSP circuits, and either post-selects a state or
estimates an observable. Every output is paired with an eigendecomposition
oracle for comparison.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from .block_encoding import BlockEncoding, dilate_hermitian, weighted_block_sum
from .ensemble_mitigation import (
    EnsembleResult,
    IllPosedError,
    ensemble_average_block,
    noisy_block,
    require_signal,
)
from .estimation import ObservableEstimate, estimate_qsp_observable, run_hadamard_test
from .noise_model import NoiseModel, StreamKey, attenuation_factor
from .numerics import (
    ComplexMatrix,
    StateVector,
    as_state,
    decode_matrix,
    decode_vector,
    encode_matrix,
    hadamard_transform,
    matfunc_hermitian,
    normalize,
    qubit_count,
    require_hermitian,
    spectral_norm,
)
from .polyapprox import CertifiedApproximant, gsp_filter_approx, inverse_approx, trig_approx
from .qsp_core import PhaseFactorSequence, QubitizationCircuit, SolverOptions, solve_phase_factors

logger = logging.getLogger(__name__)

KAPPA_TOL = 0.01
MIN_OVERLAP = 1e-3
BUDGET_WARNING = 0.8


class PostSelectionError(RuntimeError):
    """Raised when post-selection exhausts its attempt budget."""

    def __init__(self, message: str, stats: "PostSelectStats"):
        super().__init__(message)
        self.stats = stats


@dataclass(frozen=True)
class PostSelectStats:
    """
    Repeat-until-success statistics of one post-selected preparation.

    Attributes:
        attempts: Attempts made, the successful one included
        successes: 1 on success, 0 when the budget ran out
        success_probability: Exact per-attempt success probability
        predicted_bound: Analytic lower bound on the success probability
        budget: Repeat-until-success budget K = ⌈ln(1/δ)/bound⌉
        amplified_budget: Amplitude-amplified count ⌈ln(1/δ)/√bound⌉
    """
    attempts: int
    successes: int
    success_probability: float
    predicted_bound: float
    budget: int
    amplified_budget: int

    def __post_init__(self):
        if self.successes > self.attempts:
            raise ValueError(f"Successes {self.successes} exceed attempts {self.attempts}")

    @property
    def empirical_rate(self) -> float:
        return self.successes / self.attempts if self.attempts else 0.0

    def to_record(self) -> Dict[str, Any]:
        return {
            "attempts": self.attempts,
            "successes": self.successes,
            "success_probability": self.success_probability,
            "predicted_bound": self.predicted_bound,
            "budget": self.budget,
            "amplified_budget": self.amplified_budget,
        }


def _check_tolerances(eps: float, delta: float) -> None:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def _post_select(
    block: ComplexMatrix,
    state: StateVector,
    bound: float,
    delta: float,
    key: StreamKey,
    label: str,
) -> Tuple[StateVector, PostSelectStats]:
    """Bernoulli attempts with the exact success probability ‖Bψ‖²."""
    projected = block @ state
    probability = float(np.vdot(projected, projected).real)
    budget = int(np.ceil(np.log(1.0 / delta) / bound))
    amplified = int(np.ceil(np.log(1.0 / delta) / np.sqrt(bound)))
    if probability < bound:
        logger.warning(f"{label}: success probability {probability:.3e} is below the bound {bound:.3e}")

    attempts = int(key.generator().geometric(probability)) if probability > 0.0 else budget + 1
    if attempts > budget:
        stats = PostSelectStats(budget, 0, probability, bound, budget, amplified)
        raise PostSelectionError(
            f"{label}: post-selection failed after {budget} attempts (p = {probability:.3e})",
            stats,
        )
    if attempts > BUDGET_WARNING * budget:
        logger.warning(f"{label}: post-selection used {attempts} of {budget} attempts")
    stats = PostSelectStats(attempts, 1, probability, bound, budget, amplified)
    logger.debug(f"{label}: post-selected after {attempts} attempts (p = {probability:.4f})")
    return projected / np.sqrt(probability), stats


@dataclass(frozen=True, eq=False)
class QSPPlan:
    """
    Certified polynomial with its phases on a fixed block-encoding.

    Attributes:
        encoding: Block-encoding U_A the circuit queries
        approximant: Certified polynomial p
        phases: Phase factors with Re P = p
    """
    encoding: BlockEncoding
    approximant: CertifiedApproximant
    phases: PhaseFactorSequence

    @property
    def degree(self) -> int:
        return self.phases.degree


def plan_qsp(
    encoding: BlockEncoding,
    approximant: CertifiedApproximant,
    options: Optional[SolverOptions] = None,
) -> QSPPlan:
    phases = solve_phase_factors(approximant.polynomial, options=options)
    return QSPPlan(encoding=encoding, approximant=approximant, phases=phases)


# Hamiltonian simulation


@dataclass(frozen=True, eq=False)
class HamSimProblem:
    """
    Simulate e^{−iHT} on ψ₀.

    Attributes:
        hamiltonian: Hermitian H
        time: Evolution time T ≥ 0
        psi0: Initial state
        eps: Total error ε
        delta: Failure probability δ
        model: Phase-error distribution
        norm: ‖H‖, computed at construction
    """
    hamiltonian: ComplexMatrix
    time: float
    psi0: StateVector
    eps: float
    delta: float
    model: NoiseModel = field(default_factory=NoiseModel.none)
    norm: float = field(init=False)

    def __post_init__(self):
        hamiltonian = require_hermitian(self.hamiltonian, "hamiltonian")
        qubit_count(hamiltonian.shape[0])
        psi0 = as_state(self.psi0, "psi0")
        if psi0.size != hamiltonian.shape[0]:
            raise ValueError(f"psi0 dimension {psi0.size} does not match H of size {hamiltonian.shape[0]}")
        if not (np.isfinite(self.time) and self.time >= 0):
            raise ValueError(f"Evolution time must be finite and non-negative, got {self.time}")
        _check_tolerances(self.eps, self.delta)
        object.__setattr__(self, "hamiltonian", hamiltonian)
        object.__setattr__(self, "psi0", psi0)
        object.__setattr__(self, "norm", spectral_norm(hamiltonian))

    @property
    def beta(self) -> float:
        return self.norm * self.time

    def to_record(self) -> Dict[str, Any]:
        return {
            "hamiltonian": encode_matrix(self.hamiltonian),
            "time": self.time,
            "psi0": [[float(z.real), float(z.imag)] for z in self.psi0],
            "eps": self.eps,
            "delta": self.delta,
            "noise": self.model.to_record(),
        }

    @staticmethod
    def from_record(record: Dict[str, Any]) -> "HamSimProblem":
        try:
            return HamSimProblem(
                hamiltonian=decode_matrix(record["hamiltonian"], "hamiltonian"),
                time=float(record["time"]),
                psi0=normalize(decode_vector(record["psi0"], "psi0")),
                eps=float(record["eps"]),
                delta=float(record["delta"]),
                model=NoiseModel.from_record(record.get("noise", {})),
            )
        except KeyError as e:
            raise ValueError(f"Hamiltonian simulation record is missing field {e}") from e

    def evolution(self) -> ComplexMatrix:
        """Oracle e^{−iHT}."""
        return matfunc_hermitian(self.hamiltonian, lambda x: np.exp(-1j * x * self.time))

    def target_state(self) -> StateVector:
        return self.evolution() @ self.psi0


@dataclass(frozen=True, eq=False)
class HamSimPlan:
    """
    Cos/sin circuits and the noiseless-gate LCU that combines them.

    The weights c^{D−d_c} and −i·c^{D−d_s} equalize the attenuation of the
    even and odd circuits, so the combined block is r·e^{−iHT} with
    r = c^D / (2β_w).
    """
    cos: QSPPlan
    sin: QSPPlan
    weights: Tuple[complex, complex]
    block_factor: float

    @property
    def degree(self) -> int:
        return max(self.cos.degree, self.sin.degree)

    @property
    def encoding(self) -> BlockEncoding:
        return self.cos.encoding


def hsim_plan(problem: HamSimProblem, options: Optional[SolverOptions] = None) -> HamSimPlan:
    """
    Approximants, phases and LCU weights for a Hamiltonian simulation problem.

    Uses ε_alg = ε/2 for the cos/sin pair.
    """
    scaled = problem.hamiltonian / problem.norm if problem.norm > 0 else np.zeros_like(problem.hamiltonian)
    encoding = dilate_hermitian(scaled)
    approximants = trig_approx(problem.beta, 0.5 * problem.eps)
    cos_plan = plan_qsp(encoding, approximants.cos, options)
    sin_plan = plan_qsp(encoding, approximants.sin, options)

    c = attenuation_factor(problem.model)
    depth = max(cos_plan.degree, sin_plan.degree)
    weights = (c ** (depth - cos_plan.degree) + 0j, -1j * c ** (depth - sin_plan.degree))
    beta_w = abs(weights[0]) + abs(weights[1])
    block_factor = require_signal(c ** depth) / (2.0 * beta_w)
    return HamSimPlan(cos=cos_plan, sin=sin_plan, weights=weights, block_factor=block_factor)


def hsim_encode(
    problem: HamSimProblem,
    sample_count: int,
    master_key: StreamKey,
    plan: Optional[HamSimPlan] = None,
) -> EnsembleResult:
    """
    Ensemble-averaged block-encoding of e^{−iHT}.

    Args:
        problem: Hamiltonian simulation problem
        sample_count: Pairs M per cos/sin ensemble
        master_key: Stream key; cos and sin ensembles use children 0 and 1
        plan: Precomputed plan

    Returns:
        EnsembleResult whose rescale is the block factor r (¼ when noiseless)
        and whose reference is e^{−iHT}

    Raises:
        IllPosedError: If c^D < 1e-6
    """
    plan = plan or hsim_plan(problem)
    cos_result = ensemble_average_block(
        plan.encoding, plan.cos.phases, problem.model, sample_count, master_key.child(0)
    )
    sin_result = ensemble_average_block(
        plan.encoding, plan.sin.phases, problem.model, sample_count, master_key.child(1)
    )
    block = weighted_block_sum([cos_result.averaged_block, sin_result.averaged_block], plan.weights)
    single = 0.5 * (cos_result.single_block - 1j * sin_result.single_block)
    reference = problem.evolution()
    error = spectral_norm(block / plan.block_factor - reference)
    logger.info(
        f"Hamiltonian simulation block: degree {plan.degree}, factor {plan.block_factor:.6f}, "
        f"error {error:.3e}"
    )
    return EnsembleResult(
        averaged_block=block,
        sample_count=sample_count,
        rescale=plan.block_factor,
        reference=reference,
        error=error,
        degree=plan.degree,
        query_depth=max(cos_result.query_depth, sin_result.query_depth),
        total_queries=cos_result.total_queries + sin_result.total_queries,
        unmitigated_error=spectral_norm(4.0 * single - reference),
        unrescaled_error=spectral_norm(4.0 * block - reference),
        single_block=single,
    )


def hsim_prepare_state(
    problem: HamSimProblem,
    sample_count: int,
    master_key: StreamKey,
    plan: Optional[HamSimPlan] = None,
) -> Tuple[StateVector, PostSelectStats]:
    """
    Post-selected e^{−iHT}ψ₀ from the averaged block.

    The success probability is bounded below by c^{2D}/128.

    Raises:
        PostSelectionError: If K = ⌈128 ln(1/δ)/c^{2D}⌉ attempts all fail
    """
    plan = plan or hsim_plan(problem)
    result = hsim_encode(problem, sample_count, master_key.child(0), plan)
    bound = attenuation_factor(problem.model) ** (2 * plan.degree) / 128.0
    return _post_select(
        result.averaged_block, problem.psi0, bound, problem.delta, master_key.child(1), "hsim"
    )


class EvolutionSandwichSampler:
    """Õ = Ẽ₁† O Ẽ₂ with Ẽ independent noisy samples of the combined evolution block."""

    def __init__(self, plan: HamSimPlan, model: NoiseModel, observable: ComplexMatrix):
        self.plan = plan
        self.model = model
        self.observable = observable
        self.circuit = QubitizationCircuit(plan.encoding)
        self.queries_per_shot = 4 * (plan.cos.degree + plan.sin.degree)

    def _evolution(self, key: StreamKey) -> ComplexMatrix:
        blocks = [
            noisy_block(self.circuit, phases, self.model, key.child(i))
            for i, phases in enumerate(
                (self.plan.cos.phases, self.plan.cos.phases, self.plan.sin.phases, self.plan.sin.phases)
            )
        ]
        cos_part = 0.5 * (blocks[0] + blocks[1].conj().T)
        sin_part = 0.5 * (blocks[2] + blocks[3].conj().T)
        return weighted_block_sum([cos_part, sin_part], self.plan.weights)

    def sample(self, key: StreamKey) -> ComplexMatrix:
        left = self._evolution(key.child(0))
        right = self._evolution(key.child(1))
        return left.conj().T @ self.observable @ right


def _hermitian_contraction(observable: Union[BlockEncoding, ComplexMatrix]) -> ComplexMatrix:
    if isinstance(observable, BlockEncoding):
        matrix = observable.scale * observable.top_left
    else:
        matrix = observable
    matrix = require_hermitian(matrix, "observable")
    norm = spectral_norm(matrix)
    if norm > 1.0 + 1e-9:
        raise ValueError(f"Observable must satisfy ‖O‖ ≤ 1, got {norm:.12f}")
    return matrix


def hsim_observable(
    problem: HamSimProblem,
    observable: Union[BlockEncoding, ComplexMatrix],
    shots: int,
    master_key: StreamKey,
    mode: str = "sandwich",
    plan: Optional[HamSimPlan] = None,
) -> ObservableEstimate:
    """
    Estimate ⟨ψ₀|e^{iHT} O e^{−iHT}|ψ₀⟩.

    "sandwich" runs the generalized Hadamard test on Ẽ₁† O Ẽ₂ and divides by
    r². "split" estimates ⟨cos O cos⟩ and ⟨sin O sin⟩ separately and adds
    them; it drops the cross terms, so it is exact only when [H, O] = 0.

    Raises:
        ValueError: On an unknown mode or an invalid observable
        IllPosedError: If the rescale falls below 1e-6
    """
    o = _hermitian_contraction(observable)
    plan = plan or hsim_plan(problem)
    evolved = problem.target_state()
    reference = float(np.vdot(evolved, o @ evolved).real)

    if mode == "sandwich":
        rescale = require_signal(plan.block_factor ** 2, "r^2")
        sampler = EvolutionSandwichSampler(plan, problem.model, o)
        return run_hadamard_test(sampler, problem.psi0, shots, master_key, rescale=rescale, reference=reference)

    if mode == "split":
        cos_estimate = estimate_qsp_observable(
            plan.encoding, plan.cos.phases, o, problem.psi0, problem.model, shots, master_key.child(0)
        )
        sin_estimate = estimate_qsp_observable(
            plan.encoding, plan.sin.phases, o, problem.psi0, problem.model, shots, master_key.child(1)
        )
        combined = cos_estimate.value + sin_estimate.value
        counts = tuple(a + b for a, b in zip(cos_estimate.counts, sin_estimate.counts))
        return ObservableEstimate(
            value=4.0 * combined,
            shots=shots,
            rescale=0.25,
            reference=reference,
            standard_error=4.0 * float(np.hypot(cos_estimate.standard_error, sin_estimate.standard_error)),
            raw_value=combined,
            counts=counts,
            total_queries=cos_estimate.total_queries + sin_estimate.total_queries,
        )

    raise ValueError(f"Unknown observable mode '{mode}'; valid modes: ['sandwich', 'split']")


# Quantum linear systems


@dataclass(frozen=True, eq=False)
class QLSPProblem:
    """
    Prepare x/‖x‖ for A x = b.

    A is normalized to ‖A‖ = 1 on construction and x is the solution of the
    normalized system.

    Attributes:
        matrix: Hermitian invertible A
        b: Right-hand side state
        kappa: Condition-number bound κ
        eps: Target error ε
        delta: Failure probability δ
        model: Phase-error distribution
    """
    matrix: ComplexMatrix
    b: StateVector
    kappa: float
    eps: float
    delta: float
    model: NoiseModel = field(default_factory=NoiseModel.none)

    def __post_init__(self):
        matrix = require_hermitian(self.matrix, "matrix")
        qubit_count(matrix.shape[0])
        b = as_state(self.b, "b")
        if b.size != matrix.shape[0]:
            raise ValueError(f"b dimension {b.size} does not match A of size {matrix.shape[0]}")
        _check_tolerances(self.eps, self.delta)
        eigenvalues = np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T))
        smallest = float(np.min(np.abs(eigenvalues)))
        largest = float(np.max(np.abs(eigenvalues)))
        if smallest == 0.0:
            raise ValueError("Matrix is singular")
        condition = largest / smallest
        if smallest / largest < (1.0 - KAPPA_TOL) / self.kappa:
            raise ValueError(
                f"kappa = {self.kappa} is below the condition number {condition:.6f}: eigenvalue "
                f"{smallest / largest:.6f} of the normalized matrix lies inside (−1/κ, 1/κ) beyond the "
                f"{KAPPA_TOL:.0%} slack"
            )
        normalized = matrix / largest
        object.__setattr__(self, "matrix", normalized)
        object.__setattr__(self, "b", b)

    @staticmethod
    def from_record(record: Dict[str, Any]) -> "QLSPProblem":
        try:
            matrix = decode_matrix(record["matrix"], "matrix")
            kappa = record.get("kappa")
            if kappa is None:
                eigenvalues = np.abs(np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T)))
                kappa = float(np.max(eigenvalues) / np.min(eigenvalues))
            return QLSPProblem(
                matrix=matrix,
                b=normalize(decode_vector(record["b"], "b")),
                kappa=float(kappa),
                eps=float(record["eps"]),
                delta=float(record["delta"]),
                model=NoiseModel.from_record(record.get("noise", {})),
            )
        except KeyError as e:
            raise ValueError(f"Linear system record is missing field {e}") from e

    def solution(self) -> StateVector:
        """Unnormalized x = A⁻¹b."""
        return linalg.solve(self.matrix, self.b, assume_a="her")

    def target_state(self) -> StateVector:
        return normalize(self.solution())


def qlsp_plan(problem: QLSPProblem, eps: float, options: Optional[SolverOptions] = None) -> QSPPlan:
    """Odd approximant of 3/(4κx) at accuracy eps with its phases."""
    return plan_qsp(dilate_hermitian(problem.matrix), inverse_approx(problem.kappa, eps), options)


def qlsp_state_accuracy(problem: QLSPProblem) -> float:
    """ε′ = 3ε/(8κ), used for both the polynomial and the ensemble."""
    return 3.0 * problem.eps / (8.0 * problem.kappa)


def qlsp_prepare_state(
    problem: QLSPProblem,
    sample_count: int,
    master_key: StreamKey,
    plan: Optional[QSPPlan] = None,
) -> Tuple[StateVector, PostSelectStats]:
    """
    Post-selected x/‖x‖ from the averaged block of p(A) ≈ 3A⁻¹/(4κ).

    The success probability is bounded below by c^{2d}/(4κ²).

    Raises:
        PostSelectionError: If the attempt budget is exhausted
    """
    plan = plan or qlsp_plan(problem, qlsp_state_accuracy(problem))
    result = ensemble_average_block(plan.encoding, plan.phases, problem.model, sample_count, master_key.child(0))
    bound = result.rescale ** 2 / (4.0 * problem.kappa ** 2)
    return _post_select(result.averaged_block, problem.b, bound, problem.delta, master_key.child(1), "qlsp")


def qlsp_observable_accuracy(problem: QLSPProblem) -> float:
    """Polynomial accuracy (3/(4κ))² · ε/4 for x†Ox within ε/2."""
    return (3.0 / (4.0 * problem.kappa)) ** 2 * problem.eps / 4.0


def qlsp_observable(
    problem: QLSPProblem,
    observable: Union[BlockEncoding, ComplexMatrix],
    shots: int,
    master_key: StreamKey,
    plan: Optional[QSPPlan] = None,
) -> ObservableEstimate:
    """
    Estimate x†Ox with a two-sided sandwich, rescaled by (4κ/3)².

    Raises:
        IllPosedError: If c^{2d} < 1e-6
    """
    o = _hermitian_contraction(observable)
    plan = plan or qlsp_plan(problem, qlsp_observable_accuracy(problem))
    estimate = estimate_qsp_observable(plan.encoding, plan.phases, o, problem.b, problem.model, shots, master_key)
    factor = (4.0 * problem.kappa / 3.0) ** 2
    x = problem.solution()
    return ObservableEstimate(
        value=factor * estimate.value,
        shots=estimate.shots,
        rescale=estimate.rescale / factor,
        reference=float(np.vdot(x, o @ x).real),
        standard_error=factor * estimate.standard_error,
        raw_value=estimate.raw_value,
        counts=estimate.counts,
        total_queries=estimate.total_queries,
    )


# Ground-state preparation


def qetu_cosine_encoding(hamiltonian: ComplexMatrix) -> BlockEncoding:
    """
    One-ancilla block-encoding of cos(H).

    (Had ⊗ I)(|0⟩⟨0| ⊗ e^{iH} + |1⟩⟨1| ⊗ e^{−iH})(Had ⊗ I), with the
    evolution oracle evaluated by eigendecomposition.

    Raises:
        ValueError: If the spectrum is not inside (0, π)
    """
    h = require_hermitian(hamiltonian, "hamiltonian")
    system_qubits = qubit_count(h.shape[0])
    eigenvalues = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
    if eigenvalues[0] <= 0.0 or eigenvalues[-1] >= np.pi:
        raise ValueError(
            f"Spectrum [{eigenvalues[0]:.6f}, {eigenvalues[-1]:.6f}] is not inside (0, π)"
        )
    forward = matfunc_hermitian(h, lambda x: np.exp(1j * x))
    backward = matfunc_hermitian(h, lambda x: np.exp(-1j * x))
    spread = np.kron(hadamard_transform(1), np.eye(h.shape[0]))
    controlled = linalg.block_diag(forward, backward)
    return BlockEncoding(unitary=spread @ controlled @ spread, ancilla_qubits=1, system_qubits=system_qubits)


@dataclass(frozen=True, eq=False)
class GSPProblem:
    """
    Prepare the ground state ψ₀ of a shifted and scaled Hamiltonian.

    Attributes:
        hamiltonian: Hermitian H with spectrum in [2η, 1 − 2η]
        phi0: Initial guess state
        mu: Filter center (λ₀ + λ₁)/2
        gap: Spectral gap Δ = λ₁ − λ₀
        eta: Margin η
        gamma: Overlap |⟨φ|ψ₀⟩|
        eps: Target error ε
        delta: Failure probability δ
        model: Phase-error distribution
        shift: Offset of the affine map λ ↦ scale·λ + shift
        scale: Factor of the affine map
    """
    hamiltonian: ComplexMatrix
    phi0: StateVector
    mu: float
    gap: float
    eta: float
    gamma: float
    eps: float
    delta: float
    model: NoiseModel = field(default_factory=NoiseModel.none)
    shift: float = 0.0
    scale: float = 1.0

    @staticmethod
    def from_hamiltonian(
        hamiltonian: ComplexMatrix,
        phi0: StateVector,
        eta: float,
        eps: float,
        delta: float,
        model: Optional[NoiseModel] = None,
    ) -> "GSPProblem":
        """
        Map the spectrum affinely onto [2η, 1 − 2η] and read off μ, Δ and γ.

        Raises:
            ValueError: If the ground state is degenerate, η ∉ (0, 1/4) or γ = 0
        """
        h = require_hermitian(hamiltonian, "hamiltonian")
        qubit_count(h.shape[0])
        phi = as_state(phi0, "phi0")
        _check_tolerances(eps, delta)
        if not 0.0 < eta < 0.25:
            raise ValueError(f"eta must lie in (0, 1/4), got {eta}")
        eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (h + h.conj().T))
        if eigenvalues.size < 2 or eigenvalues[1] - eigenvalues[0] <= 1e-12:
            raise ValueError("Ground state is degenerate or the Hamiltonian has a single level")
        scale = (1.0 - 4.0 * eta) / (eigenvalues[-1] - eigenvalues[0])
        shift = 2.0 * eta - scale * eigenvalues[0]
        shifted = scale * h + shift * np.eye(h.shape[0])
        lowest = 2.0 * eta
        first = scale * eigenvalues[1] + shift
        gamma = float(abs(np.vdot(eigenvectors[:, 0], phi)))
        if gamma == 0.0:
            raise ValueError("Initial state has no overlap with the ground state")
        logger.info(f"Mapped spectrum with scale {scale:.6f}, shift {shift:.6f}; gap {first - lowest:.6f}, γ = {gamma:.4f}")
        return GSPProblem(
            hamiltonian=shifted,
            phi0=phi,
            mu=0.5 * (lowest + first),
            gap=first - lowest,
            eta=eta,
            gamma=gamma,
            eps=eps,
            delta=delta,
            model=model or NoiseModel.none(),
            shift=float(shift),
            scale=float(scale),
        )

    @staticmethod
    def from_record(record: Dict[str, Any]) -> "GSPProblem":
        try:
            return GSPProblem.from_hamiltonian(
                hamiltonian=decode_matrix(record["hamiltonian"], "hamiltonian"),
                phi0=normalize(decode_vector(record["phi0"], "phi0")),
                eta=float(record.get("eta", 0.05)),
                eps=float(record["eps"]),
                delta=float(record["delta"]),
                model=NoiseModel.from_record(record.get("noise", {})),
            )
        except KeyError as e:
            raise ValueError(f"Ground-state record is missing field {e}") from e

    def ground_state(self) -> StateVector:
        _, eigenvectors = np.linalg.eigh(0.5 * (self.hamiltonian + self.hamiltonian.conj().T))
        return eigenvectors[:, 0]


def gsp_plan(problem: GSPProblem, eps: float, options: Optional[SolverOptions] = None) -> QSPPlan:
    """Even filter at accuracy eps on the cosine encoding of H."""
    approximant = gsp_filter_approx(problem.mu, problem.gap, problem.eta, eps)
    return plan_qsp(qetu_cosine_encoding(problem.hamiltonian), approximant, options)


def gsp_state_accuracy(problem: GSPProblem) -> float:
    """εγ/4, used for both the filter and the ensemble."""
    return problem.eps * problem.gamma / 4.0


def gsp_prepare_state(
    problem: GSPProblem,
    sample_count: int,
    master_key: StreamKey,
    plan: Optional[QSPPlan] = None,
) -> Tuple[StateVector, PostSelectStats]:
    """
    Post-selected ground state from the averaged filter block.

    The success probability is bounded below by c^{2d}γ²/2.

    Raises:
        PostSelectionError: If the attempt budget is exhausted
    """
    plan = plan or gsp_plan(problem, gsp_state_accuracy(problem))
    result = ensemble_average_block(plan.encoding, plan.phases, problem.model, sample_count, master_key.child(0))
    bound = result.rescale ** 2 * problem.gamma ** 2 / 2.0
    return _post_select(result.averaged_block, problem.phi0, bound, problem.delta, master_key.child(1), "gsp")


def gsp_observable_accuracy(problem: GSPProblem) -> float:
    """ε′ = εγ²/8."""
    return problem.eps * problem.gamma ** 2 / 8.0


def gsp_observable(
    problem: GSPProblem,
    observable: Union[BlockEncoding, ComplexMatrix],
    shots: int,
    master_key: StreamKey,
    plan: Optional[QSPPlan] = None,
) -> ObservableEstimate:
    """
    Estimate ⟨ψ₀|O|ψ₀⟩ as ⟨φ|F O F|φ⟩ / γ².

    Raises:
        IllPosedError: If γ < 1e-3 or c^{2d} < 1e-6
    """
    if problem.gamma < MIN_OVERLAP:
        raise IllPosedError(
            f"Overlap γ = {problem.gamma:.3e} is below {MIN_OVERLAP:.0e}; the 1/γ² rescale is ill-posed",
            problem.gamma,
        )
    o = _hermitian_contraction(observable)
    plan = plan or gsp_plan(problem, gsp_observable_accuracy(problem))
    estimate = estimate_qsp_observable(plan.encoding, plan.phases, o, problem.phi0, problem.model, shots, master_key)
    factor = 1.0 / problem.gamma ** 2
    ground = problem.ground_state()
    return ObservableEstimate(
        value=factor * estimate.value,
        shots=estimate.shots,
        rescale=estimate.rescale / factor,
        reference=float(np.vdot(ground, o @ ground).real),
        standard_error=factor * estimate.standard_error,
        raw_value=estimate.raw_value,
        counts=estimate.counts,
        total_queries=estimate.total_queries,
    )
