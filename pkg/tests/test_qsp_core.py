"""
Tests for QSP Core Module
"""

import numpy as np
import pytest
from numpy.polynomial import chebyshev

from enqsp.block_encoding import BlockEncoding, dilate_hermitian, encoded_block
from enqsp.numerics import check_unitary, matfunc_hermitian, random_hermitian
from enqsp.qsp_core import (
    MAX_TARGET_SUP,
    SUP_NORM_MARGIN,
    PhaseFactorSequence,
    QubitizationCircuit,
    SolverOptions,
    TargetPolynomial,
    chebyshev_grid,
    fit_to_margin,
    qsp_polynomial_values,
    qsp_unitary_scalar,
    qubitize,
    real_part_encoding,
    real_polynomial_of,
    reference_phases,
    signal_operator,
    solve_phase_factors,
)


def _grid_residual(phi, target):
    grid = chebyshev_grid()
    return float(np.max(np.abs(qsp_polynomial_values(phi, grid).real - target(grid))))


def _random_sequence(rng, max_degree=8):
    degree = int(rng.integers(1, max_degree + 1))
    return PhaseFactorSequence(tuple(rng.uniform(-np.pi, np.pi, degree)))


class TestTargetPolynomial:
    """Tests for TargetPolynomial validation."""

    def test_degree_and_parity(self):
        """Test the degree follows the top coefficient of the right parity."""
        target = TargetPolynomial(coefficients=np.array([0.0, 0.5, 0.0, 0.3]), parity=1)
        assert target.degree == 3
        assert target(0.0) == pytest.approx(0.0)

    def test_wrong_parity_rejected(self):
        """Test a nonzero coefficient of the wrong parity is rejected."""
        with pytest.raises(ValueError, match="wrong parity"):
            TargetPolynomial(coefficients=np.array([0.1, 0.5]), parity=1)

    def test_sup_norm_above_one_rejected(self):
        """Test polynomials exceeding 1 on [-1, 1] are rejected."""
        with pytest.raises(ValueError, match="exceeds 1"):
            TargetPolynomial(coefficients=np.array([0.0, 0.0, 1.2]), parity=0)

    def test_invalid_parity(self):
        """Test parity must be 0 or 1."""
        with pytest.raises(ValueError, match="Parity"):
            TargetPolynomial(coefficients=np.array([1.0]), parity=2)


class TestScalarQSP:
    """Tests for the scalar QSP product."""

    def test_signal_operator_range(self):
        """Test signal values outside [-1, 1] are rejected."""
        with pytest.raises(ValueError, match="Signal value"):
            signal_operator(1.5)

    def test_single_zero_phase_is_identity_polynomial(self):
        """Test d = 1 with φ = 0 gives P(x) = x."""
        phi = PhaseFactorSequence((0.0,))
        xs = np.linspace(-1.0, 1.0, 11)
        assert np.allclose(qsp_polynomial_values(phi, xs), xs, atol=1e-14)

    def test_vectorized_matches_scalar(self):
        """Test the vectorized evaluation agrees with the 2x2 product."""
        phi = PhaseFactorSequence((0.3, -1.1, 0.7, 2.0))
        for x in (-0.9, -0.2, 0.4, 1.0):
            assert qsp_polynomial_values(phi, np.array([x]))[0] == pytest.approx(qsp_unitary_scalar(phi, x)[0, 0])

    def test_scalar_product_is_unitary(self):
        """Test the QSP product is unitary."""
        phi = PhaseFactorSequence((0.1, 0.2, -0.3))
        assert check_unitary(qsp_unitary_scalar(phi, 0.37)) < 1e-14

    def test_reference_phases_vanish(self):
        """Test Re P is identically zero at the reference phases for d = 1..6."""
        grid = chebyshev_grid(points=101)
        for degree in range(1, 7):
            phi = PhaseFactorSequence(tuple(reference_phases(degree)))
            assert np.max(np.abs(qsp_polynomial_values(phi, grid).real)) < 1e-12

    def test_non_finite_phase_rejected(self):
        """Test phase factors must be finite."""
        with pytest.raises(ValueError, match="finite"):
            PhaseFactorSequence((0.0, np.nan))


class TestPhaseSolver:
    """Tests for solve_phase_factors."""

    def test_chebyshev_t2(self):
        """Test the solver reproduces T₂ scaled to the margin within 1e-10."""
        target = fit_to_margin(TargetPolynomial(coefficients=np.array([0.0, 0.0, 1.0]), parity=0))
        assert target.sup_norm == pytest.approx(MAX_TARGET_SUP)
        phi = solve_phase_factors(target, tol=1e-11)
        assert phi.degree == 2
        assert _grid_residual(phi, target) < 1e-10

    def test_t2_known_phases(self):
        """Test (−π/2, π/2) realizes 2x² − 1 exactly."""
        phi = PhaseFactorSequence((-0.5 * np.pi, 0.5 * np.pi))
        grid = chebyshev_grid()
        assert np.max(np.abs(qsp_polynomial_values(phi, grid) - (2 * grid ** 2 - 1))) < 1e-12

    def test_unit_sup_norm_rejected(self):
        """Test targets reaching 1 are rejected before solving."""
        with pytest.raises(ValueError, match="sup-norm"):
            solve_phase_factors(TargetPolynomial(coefficients=np.array([0.0, 1.0]), parity=1))

    def test_sup_norm_inside_margin_rejected(self):
        """Test a target half a margin below 1 is rejected."""
        coefficients = np.array([0.0, 0.0, 1.0 - 0.5 * SUP_NORM_MARGIN])
        with pytest.raises(ValueError, match="fit_to_margin"):
            solve_phase_factors(TargetPolynomial(coefficients=coefficients, parity=0))

    def test_fit_to_margin_leaves_small_targets(self):
        """Test targets below the margin are returned unchanged."""
        target = TargetPolynomial(coefficients=np.array([0.0, 0.5, 0.0, 0.3]), parity=1)
        assert fit_to_margin(target) is target

    def test_odd_target(self):
        """Test an odd degree-5 target."""
        target = TargetPolynomial(coefficients=np.array([0.0, 0.4, 0.0, -0.2, 0.0, 0.15]), parity=1)
        phi = solve_phase_factors(target, tol=1e-10)
        assert phi.degree == 5
        assert _grid_residual(phi, target) < 1e-8

    def test_even_target(self):
        """Test an even degree-6 target with a constant term."""
        target = TargetPolynomial(coefficients=np.array([0.2, 0.0, 0.3, 0.0, -0.1, 0.0, 0.25]), parity=0)
        phi = solve_phase_factors(target, tol=1e-10, options=SolverOptions(seed=3))
        assert phi.degree == 6
        assert _grid_residual(phi, target) < 1e-8

    def test_degree_zero_constant_one(self):
        """Test p = 1 violates the margin even though the empty sequence realizes it."""
        with pytest.raises(ValueError, match="sup-norm"):
            solve_phase_factors(TargetPolynomial(coefficients=np.array([1.0]), parity=0))

    def test_degree_zero_other_constant(self):
        """Test other constants cannot be realized at degree 0."""
        with pytest.raises(ValueError, match="degree-0"):
            solve_phase_factors(TargetPolynomial(coefficients=np.array([0.5]), parity=0))

    def test_real_polynomial_of_roundtrip(self):
        """Test the Chebyshev expansion of Re P matches the solved target."""
        target = TargetPolynomial(coefficients=np.array([0.0, 0.5, 0.0, 0.3]), parity=1)
        phi = solve_phase_factors(target)
        recovered = real_polynomial_of(phi)
        assert np.allclose(recovered.coefficients, target.coefficients, atol=1e-8)

    def test_real_polynomial_of_unit_target(self):
        """Test Re P of (−π/2, π/2) reaches 1 and solves once fit to the margin."""
        target = real_polynomial_of(PhaseFactorSequence((-0.5 * np.pi, 0.5 * np.pi)))
        assert target.sup_norm == pytest.approx(1.0)
        with pytest.raises(ValueError, match="sup-norm"):
            solve_phase_factors(target)
        scaled = fit_to_margin(target)
        phi = solve_phase_factors(scaled)
        assert _grid_residual(phi, scaled) < 1e-8


class TestPhaseProperties:
    """Seeded property checks over random phase sequences of degree at most 8."""

    @pytest.mark.parametrize("seed", range(20))
    def test_parity_and_degree(self, seed):
        """Test P has parity d mod 2 and no Chebyshev terms above d."""
        phi = _random_sequence(np.random.default_rng(seed))
        d = phi.degree
        for part in (np.real, np.imag):
            coefficients = chebyshev.chebinterpolate(lambda xs: part(qsp_polynomial_values(phi, xs)), d + 2)
            assert np.max(np.abs(coefficients[d + 1:])) < 1e-10
            assert np.max(np.abs(coefficients[1 - phi.parity::2])) < 1e-10

    @pytest.mark.parametrize("seed", range(20))
    def test_bounded_by_one(self, seed):
        """Test |P(x)| ≤ 1 on a dense grid."""
        phi = _random_sequence(np.random.default_rng(seed))
        values = qsp_polynomial_values(phi, np.linspace(-1.0, 1.0, 4001))
        assert np.max(np.abs(values)) <= 1.0 + 1e-12

    @pytest.mark.parametrize("seed", range(20))
    def test_solver_roundtrip(self, seed):
        """Test solving for Re P of random phases reproduces it within 1e-8."""
        rng = np.random.default_rng(100 + seed)
        target = None
        while target is None or target.sup_norm > 0.95:
            d = int(rng.integers(1, 9))
            phi_star = PhaseFactorSequence(tuple(reference_phases(d) + rng.uniform(-0.4, 0.4, d)))
            target = real_polynomial_of(phi_star)
        phi = solve_phase_factors(target, tol=1e-9, options=SolverOptions(seed=seed))
        assert phi.degree == phi_star.degree
        grid = np.linspace(-1.0, 1.0, 4001)
        difference = qsp_polynomial_values(phi, grid).real - qsp_polynomial_values(phi_star, grid).real
        assert np.max(np.abs(difference)) < 1e-8


class TestQubitizationCircuit:
    """Tests for the matrix-level QSP circuit."""

    @pytest.fixture
    def encoding(self):
        return dilate_hermitian(random_hermitian(4, np.random.default_rng(5), norm=0.9))

    def test_block_matches_scalar_polynomial(self, encoding):
        """Test the circuit block equals P(A) from the scalar product."""
        phi = PhaseFactorSequence((0.4, -0.9, 1.3, 0.2, -0.5))
        circuit = QubitizationCircuit(encoding)
        expected = matfunc_hermitian(encoded_block(encoding), lambda x: qsp_unitary_scalar(phi, x)[0, 0])
        assert np.max(np.abs(circuit.block(phi.phases) - expected)) < 1e-10

    def test_full_unitary_block(self, encoding):
        """Test the materialized circuit is unitary and carries the same block."""
        phi = PhaseFactorSequence((0.4, -0.9, 1.3))
        circuit = QubitizationCircuit(encoding)
        unitary = circuit.unitary(phi.phases)
        assert check_unitary(unitary) < 1e-10
        assert np.max(np.abs(unitary[:4, :4] - circuit.block(phi.phases))) < 1e-12

    def test_query_counters(self, encoding):
        """Test each phase costs one oracle query."""
        circuit = QubitizationCircuit(encoding)
        circuit.block((0.1, 0.2, 0.3))
        circuit.block((0.1, 0.2))
        assert circuit.last_depth == 2
        assert circuit.queries == 5

    def test_scale_must_be_one(self):
        """Test encodings with scale other than 1 are rejected."""
        scaled = BlockEncoding(unitary=np.eye(4), ancilla_qubits=1, system_qubits=1, scale=2.0)
        with pytest.raises(ValueError, match="scale 1"):
            QubitizationCircuit(scaled)

    def test_non_hermitian_block_rejected(self):
        """Test a non-Hermitian encoded block is rejected."""
        swap_like = np.kron(np.eye(2), np.array([[0.0, 1j], [1j, 0.0]]))
        with pytest.raises(ValueError, match="Hermitian"):
            QubitizationCircuit(BlockEncoding(unitary=swap_like, ancilla_qubits=1, system_qubits=1))

    def test_qubitize_adds_ancilla(self, encoding):
        """Test qubitize adds one ancilla and encodes P(A)."""
        phi = PhaseFactorSequence((0.0,))
        qubitized = qubitize(encoding, phi)
        assert qubitized.ancilla_qubits == encoding.ancilla_qubits + 1
        assert np.max(np.abs(encoded_block(qubitized) - encoded_block(encoding))) < 1e-12

    def test_real_part_encoding(self, encoding):
        """Test the real-part encoding carries p(A) for a solved target."""
        target = TargetPolynomial(coefficients=np.array([0.1, 0.0, 0.7]), parity=0)
        phi = solve_phase_factors(target)
        real_part = real_part_encoding(phi, encoding)
        expected = matfunc_hermitian(encoded_block(encoding), target)
        assert np.max(np.abs(encoded_block(real_part) - expected)) < 1e-8
