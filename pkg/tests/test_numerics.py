"""
Tests for Numerics Module
"""

import numpy as np
import pytest

from enqsp.numerics import (
    as_state,
    check_unitary,
    decode_matrix,
    decode_vector,
    encode_matrix,
    fidelity,
    hadamard_transform,
    hermiticity_defect,
    is_unitary,
    matfunc_hermitian,
    normalize,
    qubit_count,
    random_hermitian,
    random_state,
    random_unitary,
    require_hermitian,
    spectral_norm,
)


class TestSpectralNorm:
    """Tests for spectral_norm and Hermiticity checks."""

    def test_diagonal_norm(self):
        """Test the norm of a diagonal matrix is its largest absolute entry."""
        assert spectral_norm(np.diag([3.0, -1.0])) == pytest.approx(3.0)

    def test_empty_matrix_rejected(self):
        """Test an empty matrix has no spectral norm."""
        with pytest.raises(ValueError, match="empty"):
            spectral_norm(np.zeros((0, 0)))

    def test_non_finite_rejected(self):
        """Test non-finite entries are rejected."""
        with pytest.raises(ValueError, match="non-finite"):
            spectral_norm(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_hermiticity_defect(self):
        """Test the defect of a nilpotent matrix."""
        assert hermiticity_defect(np.array([[0.0, 1.0], [0.0, 0.0]])) == pytest.approx(1.0)

    def test_require_hermitian_rejects(self):
        """Test a non-Hermitian matrix is rejected with its defect."""
        with pytest.raises(ValueError, match="not Hermitian"):
            require_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]), "A")

    def test_require_hermitian_accepts(self):
        """Test a Hermitian matrix passes through unchanged."""
        a = np.array([[1.0, 1j], [-1j, 0.5]])
        assert np.array_equal(require_hermitian(a), a)


class TestMatfunc:
    """Tests for the eigendecomposition oracle."""

    def test_square_of_diagonal(self):
        """Test f(x) = x² on a diagonal matrix."""
        result = matfunc_hermitian(np.diag([0.2, 0.5]), lambda x: x * x)
        assert np.allclose(result, np.diag([0.04, 0.25]), atol=1e-14)

    def test_degenerate_eigenvalues(self):
        """Test a degenerate spectrum gives f(λ)·I."""
        result = matfunc_hermitian(0.3 * np.eye(4), np.exp)
        assert np.allclose(result, np.exp(0.3) * np.eye(4), atol=1e-13)

    def test_matches_polynomial(self):
        """Test the oracle agrees with direct matrix arithmetic for a polynomial."""
        rng = np.random.default_rng(0)
        a = random_hermitian(4, rng, norm=0.8)
        result = matfunc_hermitian(a, lambda x: 2 * x * x - 1)
        assert np.allclose(result, 2 * a @ a - np.eye(4), atol=1e-12)

    def test_complex_valued_function(self):
        """Test a complex function gives a unitary for e^{ix}."""
        rng = np.random.default_rng(1)
        a = random_hermitian(4, rng, norm=2.0)
        assert check_unitary(matfunc_hermitian(a, lambda x: np.exp(1j * x))) < 1e-12


class TestUnitaryAndStates:
    """Tests for unitarity checks and state helpers."""

    def test_hadamard_is_unitary(self):
        """Test H^{⊗2} has no unitarity defect."""
        assert check_unitary(hadamard_transform(2)) < 1e-14

    def test_non_square_rejected(self):
        """Test the unitarity check needs a square matrix."""
        with pytest.raises(ValueError, match="square"):
            check_unitary(np.zeros((2, 3)))

    def test_random_unitary(self):
        """Test Haar samples are unitary."""
        assert check_unitary(random_unitary(4, np.random.default_rng(2))) < 1e-12

    def test_is_unitary(self):
        """Test the pass/fail check and its tolerance."""
        assert is_unitary(hadamard_transform(2))
        assert not is_unitary(1.01 * np.eye(2))
        assert is_unitary(1.01 * np.eye(2), tol=0.1)

    def test_qubit_count(self):
        """Test the qubit count of a power-of-two dimension."""
        assert qubit_count(8) == 3
        with pytest.raises(ValueError, match="power of two"):
            qubit_count(6)

    def test_as_state_rejects_unnormalized(self):
        """Test unnormalized states are rejected."""
        with pytest.raises(ValueError, match="not normalized"):
            as_state([1.0, 1.0])

    def test_as_state_rejects_dimension(self):
        """Test states must have power-of-two dimension."""
        with pytest.raises(ValueError, match="power of two"):
            as_state(np.ones(3) / np.sqrt(3))

    def test_normalize_zero_rejected(self):
        """Test the zero vector cannot be normalized."""
        with pytest.raises(ValueError, match="zero vector"):
            normalize([0.0, 0.0])

    def test_fidelity(self):
        """Test fidelity ignores a global phase and vanishes for orthogonal states."""
        psi = random_state(4, np.random.default_rng(3))
        assert fidelity(psi, 1j * psi) == pytest.approx(1.0)
        assert fidelity(np.array([1, 0]), np.array([0, 1])) == 0.0

    def test_random_hermitian_norm(self):
        """Test the requested spectral norm is met."""
        a = random_hermitian(4, np.random.default_rng(4), norm=0.7)
        assert hermiticity_defect(a) < 1e-14
        assert spectral_norm(a) == pytest.approx(0.7)


class TestOracleProperties:
    """Seeded algebraic properties of matfunc_hermitian and spectral_norm."""

    @pytest.mark.parametrize("seed", range(5))
    def test_unitary_conjugation(self, seed):
        """Test f(UAU†) = U f(A) U†."""
        rng = np.random.default_rng(seed)
        a = random_hermitian(4, rng, norm=0.9)
        u = random_unitary(4, rng)

        def func(x):
            return np.cos(3 * x) + 0.5j * x ** 3

        conjugated = matfunc_hermitian(u @ a @ u.conj().T, func)
        assert np.allclose(conjugated, u @ matfunc_hermitian(a, func) @ u.conj().T, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_identity_function(self, seed):
        """Test f(x) = x reproduces A."""
        a = random_hermitian(8, np.random.default_rng(seed), norm=1.5)
        assert np.allclose(matfunc_hermitian(a, lambda x: x), a, atol=1e-13)

    @pytest.mark.parametrize("seed", range(5))
    def test_cubic_polynomial(self, seed):
        """Test a complex cubic matches the matrix polynomial."""
        a = random_hermitian(4, np.random.default_rng(seed), norm=1.0)
        coefficients = [0.3, -0.2j, 0.5, 0.1]
        expected = 0.3 * np.eye(4) - 0.2j * a + 0.5 * a @ a + 0.1 * a @ a @ a
        result = matfunc_hermitian(a, lambda x: np.polynomial.polynomial.polyval(x, coefficients))
        assert np.allclose(result, expected, atol=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_submultiplicative(self, seed):
        """Test ‖AB‖ ≤ ‖A‖‖B‖."""
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        b = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        assert spectral_norm(a @ b) <= spectral_norm(a) * spectral_norm(b) * (1 + 1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_power_iteration(self, seed):
        """Test the norm matches power iteration on A†A."""
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        gram = a.conj().T @ a
        v = rng.normal(size=6) + 1j * rng.normal(size=6)
        for _ in range(500):
            v = gram @ v
            v /= np.linalg.norm(v)
        estimate = np.sqrt(np.real(v.conj() @ gram @ v))
        assert spectral_norm(a) == pytest.approx(estimate, rel=1e-9)

    def test_hermitian_norm_is_largest_eigenvalue(self):
        """Test ‖A‖ = max |λ| for Hermitian A."""
        a = random_hermitian(6, np.random.default_rng(9))
        assert spectral_norm(a) == pytest.approx(np.max(np.abs(np.linalg.eigvalsh(a))))


class TestMatrixRecords:
    """Tests for the [re, im] matrix encoding."""

    def test_decode_pairs_and_reals(self):
        """Test pairs and plain numbers decode to complex entries."""
        matrix = decode_matrix([[1, [0.5, -0.25]], [[0.5, 0.25], 2.0]])
        assert matrix[0, 1] == 0.5 - 0.25j
        assert matrix[1, 1] == 2.0

    def test_encode_then_decode(self):
        """Test an encoded matrix decodes to itself."""
        a = np.array([[1.0, 2j], [-2j, 0.5]])
        assert np.array_equal(decode_matrix(encode_matrix(a)), a)

    def test_ragged_rows_rejected(self):
        """Test rows of differing length are rejected."""
        with pytest.raises(ValueError, match="differing lengths"):
            decode_matrix([[1, 2], [3]])

    def test_malformed_entry_rejected(self):
        """Test a malformed entry is reported with its position."""
        with pytest.raises(ValueError, match=r"m\[0\]\[1\]"):
            decode_matrix([[1, "x"], [0, 1]], "m")

    def test_decode_vector(self):
        """Test vectors decode from pairs."""
        assert np.array_equal(decode_vector([[0, 1], 1]), np.array([1j, 1.0]))
