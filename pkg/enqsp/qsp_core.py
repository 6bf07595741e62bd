"""
QSP Core Module

Quantum signal processing in the reflection convention

    U_Φ(x) = e^{iφ_d Z} R(x) ⋯ e^{iφ_1 Z} R(x),   P(x) = ⟨0|U_Φ(x)|0⟩,

its lift to block-encoded Hermitian matrices (qubitization), real-part
extraction by a two-term LCU, and a phase-factor solver.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import chebyshev
from scipy import optimize

from .block_encoding import BlockEncoding, adjoint_encoding, encoded_block, lcu_combine
from .numerics import ComplexMatrix, hermiticity_defect, HERMITIAN_TOL

logger = logging.getLogger(__name__)

GRID_POINTS = 2001
SUP_NORM_MARGIN = 1e-6
MAX_TARGET_SUP = 1.0 - SUP_NORM_MARGIN
SUP_NORM_TOL = 1e-9
SIGNAL_TOL = 1e-12


class PhaseSolverError(RuntimeError):
    """Raised when the phase solver exhausts its budget without meeting the tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class PhaseFactorSequence:
    """
    Ordered QSP phases (φ_1, …, φ_d); φ_1 acts first.

    Attributes:
        phases: Phase angles in radians
    """
    phases: Tuple[float, ...] = ()

    def __post_init__(self):
        phases = tuple(float(p) for p in self.phases)
        if not all(np.isfinite(phases)):
            raise ValueError(f"Phase factors must be finite, got {phases}")
        object.__setattr__(self, "phases", phases)

    @property
    def degree(self) -> int:
        return len(self.phases)

    @property
    def parity(self) -> int:
        return self.degree % 2

    def as_array(self) -> np.ndarray:
        return np.array(self.phases, dtype=float)


def chebyshev_grid(lower: float = -1.0, upper: float = 1.0, points: int = GRID_POINTS) -> np.ndarray:
    """Chebyshev extreme points mapped to [lower, upper], endpoints included."""
    nodes = chebyshev.chebpts2(points)
    return 0.5 * (upper + lower) + 0.5 * (upper - lower) * nodes


@dataclass(frozen=True, eq=False)
class TargetPolynomial:
    """
    Real polynomial with definite parity in the Chebyshev basis.

    Attributes:
        coefficients: Chebyshev coefficients c_k of Σ c_k T_k(x)
        parity: 0 for even, 1 for odd
    """
    coefficients: np.ndarray
    parity: int
    sup_norm: float = field(init=False)

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if coefficients.size == 0:
            raise ValueError("Target polynomial needs at least one coefficient")
        if self.parity not in (0, 1):
            raise ValueError(f"Parity must be 0 or 1, got {self.parity}")
        wrong = coefficients[1 - self.parity::2]
        if np.any(wrong != 0.0):
            raise ValueError(
                f"Coefficients of the wrong parity are nonzero (max |c| = {np.max(np.abs(wrong)):.3e})"
            )
        object.__setattr__(self, "coefficients", coefficients)
        sup = float(np.max(np.abs(chebyshev.chebval(chebyshev_grid(), coefficients))))
        if sup > 1.0 + SUP_NORM_TOL:
            raise ValueError(f"Target polynomial exceeds 1 on [-1, 1] (sup = {sup:.9f})")
        object.__setattr__(self, "sup_norm", sup)

    @property
    def degree(self) -> int:
        top = self.coefficients.size - 1
        return top if top % 2 == self.parity else top - 1

    def __call__(self, x):
        return chebyshev.chebval(x, self.coefficients)


def signal_operator(x: float) -> ComplexMatrix:
    """
    Reflection signal operator R(x) = [[x, √(1−x²)], [√(1−x²), −x]].

    Raises:
        ValueError: If |x| > 1
    """
    if abs(x) > 1.0 + SIGNAL_TOL:
        raise ValueError(f"Signal value must lie in [-1, 1], got {x}")
    x = float(np.clip(x, -1.0, 1.0))
    s = np.sqrt(1.0 - x * x)
    return np.array([[x, s], [s, -x]], dtype=complex)


def qsp_unitary_scalar(phi: PhaseFactorSequence, x: float) -> ComplexMatrix:
    """
    Ordered product e^{iφ_d Z} R(x) ⋯ e^{iφ_1 Z} R(x).

    Args:
        phi: Phase factors
        x: Signal value in [-1, 1]

    Returns:
        2x2 unitary whose [0, 0] entry is P(x)
    """
    reflection = signal_operator(x)
    unitary = np.eye(2, dtype=complex)
    for phase in phi.phases:
        rotation = np.array([np.exp(1j * phase), np.exp(-1j * phase)])
        unitary = rotation[:, np.newaxis] * (reflection @ unitary)
    return unitary


def qsp_polynomial_values(phi: PhaseFactorSequence, xs: np.ndarray) -> np.ndarray:
    """Vectorized P(x) over an array of signal values."""
    values, _ = _forward_with_gradient(phi.as_array(), np.asarray(xs, dtype=float), with_gradient=False)
    return values


def _forward_with_gradient(phases: np.ndarray, xs: np.ndarray, with_gradient: bool = True):
    """
    P(x_k) and ∂P/∂φ_j for all nodes at once.

    Propagates the first column of the prefix products G_j ⋯ G_1 and the first
    row of the suffix products G_d ⋯ G_{j+1}, with G_j = e^{iφ_j Z} R(x).
    """
    xs = np.clip(xs, -1.0, 1.0)
    s = np.sqrt(1.0 - xs * xs)
    d = phases.size
    k = xs.size
    columns = np.empty((d + 1, k, 2), dtype=complex)
    columns[0, :, 0] = 1.0
    columns[0, :, 1] = 0.0
    for j in range(d):
        a, b = columns[j, :, 0], columns[j, :, 1]
        columns[j + 1, :, 0] = np.exp(1j * phases[j]) * (xs * a + s * b)
        columns[j + 1, :, 1] = np.exp(-1j * phases[j]) * (s * a - xs * b)
    values = columns[d, :, 0]
    if not with_gradient:
        return values, None

    gradient = np.empty((k, d), dtype=complex)
    row = np.zeros((k, 2), dtype=complex)
    row[:, 0] = 1.0
    for j in range(d - 1, -1, -1):
        # row holds the first row of G_d ⋯ G_{j+2}; columns[j + 1] is G_{j+1} ⋯ G_1 |0⟩
        gradient[:, j] = 1j * (row[:, 0] * columns[j + 1, :, 0] - row[:, 1] * columns[j + 1, :, 1])
        t0 = row[:, 0] * np.exp(1j * phases[j])
        t1 = row[:, 1] * np.exp(-1j * phases[j])
        row = np.stack([t0 * xs + t1 * s, t0 * s - t1 * xs], axis=1)
    return values, gradient


class QubitizationCircuit:
    """
    Alternating U_A / U_A† circuit with projector-controlled phase rotations.

    The extra qubit of the controlled rotation stays in |0⟩, so blocks are
    evaluated on that sector; `unitary` materializes the full circuit with the
    extra qubit as the most significant register.

    Attributes:
        encoding: Block-encoding of a Hermitian contraction (α = 1)
        queries: Total number of U_A / U_A† applications so far
        last_depth: Oracle queries used by the most recent circuit
    """

    def __init__(self, encoding: BlockEncoding):
        """
        Initialize the circuit for a block-encoding.

        Args:
            encoding: Block-encoding with scale 1 of a Hermitian matrix

        Raises:
            ValueError: If the encoded block is not Hermitian or the scale is not 1
        """
        if abs(encoding.scale - 1.0) > 1e-12:
            raise ValueError(f"Qubitization needs a block-encoding with scale 1, got {encoding.scale}")
        defect = hermiticity_defect(encoded_block(encoding))
        if defect > HERMITIAN_TOL:
            raise ValueError(
                f"Qubitization needs a Hermitian encoded block: defect ‖A − A†‖ = {defect:.3e}"
            )
        self.encoding = encoding
        self.system_dim = encoding.system_dim
        self._forward = encoding.unitary
        self._backward = encoding.unitary.conj().T
        self._in_projector = np.zeros(encoding.unitary.shape[0], dtype=bool)
        self._in_projector[: self.system_dim] = True
        self.queries = 0
        self.last_depth = 0

    def _rotation(self, phase: float) -> np.ndarray:
        return np.where(self._in_projector, np.exp(1j * phase), np.exp(-1j * phase))

    def block(self, phases: Sequence[float]) -> ComplexMatrix:
        """
        Top-left block of the circuit for the given phases.

        Only the system-sized column block is propagated.
        """
        columns = np.eye(self._forward.shape[0], self.system_dim, dtype=complex)
        for j, phase in enumerate(phases):
            oracle = self._forward if j % 2 == 0 else self._backward
            columns = self._rotation(phase)[:, np.newaxis] * (oracle @ columns)
        self.last_depth = len(phases)
        self.queries += len(phases)
        return columns[: self.system_dim, :]

    def unitary(self, phases: Sequence[float]) -> ComplexMatrix:
        """Full circuit unitary including the extra rotation qubit."""
        dim = self._forward.shape[0]
        lifted_forward = np.kron(np.eye(2), self._forward)
        lifted_backward = np.kron(np.eye(2), self._backward)
        in_projector = np.zeros(2 * dim, dtype=bool)
        in_projector[: self.system_dim] = True
        unitary = np.eye(2 * dim, dtype=complex)
        for j, phase in enumerate(phases):
            oracle = lifted_forward if j % 2 == 0 else lifted_backward
            rotation = np.where(in_projector, np.exp(1j * phase), np.exp(-1j * phase))
            unitary = rotation[:, np.newaxis] * (oracle @ unitary)
        self.last_depth = len(phases)
        self.queries += len(phases)
        return unitary


def qubitize(encoding: BlockEncoding, phi: PhaseFactorSequence) -> BlockEncoding:
    """
    Block-encoding of P(A) for the phase factors phi.

    Args:
        encoding: (1, m, 0)-block-encoding of a Hermitian A with ‖A‖ ≤ 1
        phi: Phase factors

    Returns:
        Block-encoding with m + 1 ancillas whose block is P(A)

    Raises:
        ValueError: If the encoded block is not Hermitian
    """
    circuit = QubitizationCircuit(encoding)
    return BlockEncoding(
        unitary=circuit.unitary(phi.phases),
        ancilla_qubits=encoding.ancilla_qubits + 1,
        system_qubits=encoding.system_qubits,
    )


def real_part_encoding(phi: PhaseFactorSequence, encoding: BlockEncoding) -> BlockEncoding:
    """
    Block-encoding of p(A) = ½(P(A) + P(A)†).

    Combines the qubitized circuit and its adjoint with equal weights.

    Raises:
        ValueError: As qubitize
    """
    complex_part = qubitize(encoding, phi)
    return lcu_combine([complex_part, adjoint_encoding(complex_part)], [0.5, 0.5])


def real_polynomial_of(phi: PhaseFactorSequence) -> TargetPolynomial:
    """
    Chebyshev expansion of Re P for a phase sequence.

    Interpolates at degree d and zeroes the opposite-parity coefficients,
    which vanish exactly in exact arithmetic. The sup-norm can reach 1;
    pass the result through fit_to_margin before solving for it.
    """
    d = phi.degree
    coefficients = chebyshev.chebinterpolate(lambda xs: qsp_polynomial_values(phi, xs).real, d)
    coefficients[1 - phi.parity::2] = 0.0
    return TargetPolynomial(coefficients=coefficients, parity=phi.parity)


def fit_to_margin(target: TargetPolynomial) -> TargetPolynomial:
    """Scale a target down to sup-norm 1 − 1e-6 if it exceeds that; smaller targets are returned unchanged."""
    if target.sup_norm <= MAX_TARGET_SUP:
        return target
    return TargetPolynomial(
        coefficients=target.coefficients * (MAX_TARGET_SUP / target.sup_norm),
        parity=target.parity,
    )


@dataclass
class SolverOptions:
    """
    Phase solver configuration.

    Attributes:
        max_restarts: Random restarts after the first attempt
        max_iterations: Quasi-Newton iteration cap per attempt
        seed: Seed of the solver's private random source
    """
    max_restarts: int = 32
    max_iterations: int = 2000
    seed: int = 0


def reference_phases(degree: int) -> np.ndarray:
    """
    Phases at which Re P vanishes identically.

    (−π/2, …, −π/2, (d mod 4)·π/2) maps onto the symmetric start point of the
    W_x convention, whose neighbourhood is well conditioned for optimization.
    """
    phases = np.full(degree, -0.5 * np.pi)
    if degree > 0:
        phases[-1] = (degree % 4) * 0.5 * np.pi
    return phases


def solver_nodes(degree: int) -> np.ndarray:
    """Chebyshev nodes cos((2k−1)π/(8d)), k = 1..4d."""
    k = np.arange(1, 4 * degree + 1)
    return np.cos((2 * k - 1) * np.pi / (8 * degree))


def solve_phase_factors(
    target: TargetPolynomial,
    tol: float = 1e-10,
    options: Optional[SolverOptions] = None,
) -> PhaseFactorSequence:
    """
    Find phases whose Re P matches the target polynomial.

    Minimizes the squared residuals of Re P_Φ − p over 4d Chebyshev nodes with
    BFGS from the zero offset around `reference_phases`, polishes with
    Levenberg–Marquardt, and retries from seeded random offsets.

    Args:
        target: Real polynomial of definite parity with |p| ≤ 1 − 1e-6
        tol: Required max residual over the nodes
        options: Solver configuration

    Returns:
        Phase factors of length target.degree

    Raises:
        ValueError: If the target comes within 1e-6 of 1 or cannot be realized at its degree
        PhaseSolverError: If no attempt reaches the tolerance
    """
    options = options or SolverOptions()
    d = target.degree
    if target.sup_norm > MAX_TARGET_SUP + SIGNAL_TOL:
        raise ValueError(
            f"Target sup-norm {target.sup_norm:.9f} exceeds {MAX_TARGET_SUP}; scale it with fit_to_margin"
        )
    if d == 0:
        constant = float(target.coefficients[0])
        if abs(constant - 1.0) <= tol:
            return PhaseFactorSequence(())
        raise ValueError(f"A degree-0 sequence realizes only p = 1, got constant {constant}")

    nodes = solver_nodes(d)
    goal = target(nodes)
    reference = reference_phases(d)

    def residuals(offsets: np.ndarray) -> np.ndarray:
        values, _ = _forward_with_gradient(reference + offsets, nodes, with_gradient=False)
        return values.real - goal

    def jacobian(offsets: np.ndarray) -> np.ndarray:
        _, gradient = _forward_with_gradient(reference + offsets, nodes)
        return gradient.real

    def objective(offsets: np.ndarray):
        values, gradient = _forward_with_gradient(reference + offsets, nodes)
        r = values.real - goal
        return 0.5 * float(r @ r), gradient.real.T @ r

    rng = np.random.default_rng(options.seed)
    best_residual = np.inf
    for attempt in range(options.max_restarts + 1):
        start = np.zeros(d) if attempt == 0 else rng.uniform(-0.5 * np.pi, 0.5 * np.pi, d)
        result = optimize.minimize(
            objective,
            start,
            jac=True,
            method="BFGS",
            options={"gtol": 1e-14, "maxiter": options.max_iterations},
        )
        offsets = result.x
        residual = float(np.max(np.abs(residuals(offsets))))
        if residual > tol:
            polished = optimize.least_squares(
                residuals,
                offsets,
                jac=jacobian,
                method="lm",
                xtol=1e-15,
                ftol=1e-15,
                gtol=1e-15,
                max_nfev=200 * d,
            )
            offsets = polished.x
            residual = float(np.max(np.abs(residuals(offsets))))
        best_residual = min(best_residual, residual)
        if residual <= tol:
            phases = np.mod(reference + offsets + np.pi, 2 * np.pi) - np.pi
            logger.info(f"Solved {d} phase factors (residual {residual:.2e}, attempt {attempt + 1})")
            return PhaseFactorSequence(tuple(phases))
        logger.warning(f"Phase solve attempt {attempt + 1} stalled at residual {residual:.2e}")

    raise PhaseSolverError(
        f"Phase solver did not reach {tol:.1e} after {options.max_restarts + 1} attempts "
        f"(best residual {best_residual:.3e})",
        best_residual,
    )
