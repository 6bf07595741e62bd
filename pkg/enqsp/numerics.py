"""
Numerics Module

Dense complex linear algebra shared by every other module, and the
eigendecomposition oracle that simulated circuits are checked against.
"""

import logging
from typing import Any, Callable, List, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

logger = logging.getLogger(__name__)

ComplexMatrix = np.ndarray
StateVector = np.ndarray

HERMITIAN_TOL = 1e-10
NORMALIZATION_TOL = 1e-10
UNITARY_TOL = 1e-10


def as_matrix(matrix: Any, name: str = "matrix") -> ComplexMatrix:
    """
    Convert input to a dense complex 2-D array.

    Args:
        matrix: Array-like input
        name: Name used in error messages

    Returns:
        Complex ndarray of shape (rows, cols)

    Raises:
        ValueError: If the input is not two-dimensional or has non-finite entries
    """
    array = np.asarray(matrix, dtype=complex)
    if array.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} has non-finite entries")
    return array


def spectral_norm(matrix: ComplexMatrix) -> float:
    """
    Largest singular value of a matrix.

    Args:
        matrix: Dense matrix with finite entries

    Returns:
        Spectral norm

    Raises:
        ValueError: If the matrix is empty or has non-finite entries
    """
    array = as_matrix(matrix)
    if array.size == 0:
        raise ValueError("Cannot take the spectral norm of an empty matrix")
    return float(np.linalg.norm(array, 2))


def hermiticity_defect(matrix: ComplexMatrix) -> float:
    """Return ‖A − A†‖ for a square matrix."""
    array = as_matrix(matrix)
    if array.shape[0] != array.shape[1]:
        raise ValueError(f"Hermiticity needs a square matrix, got shape {array.shape}")
    if array.size == 0:
        return 0.0
    return spectral_norm(array - array.conj().T)


def require_hermitian(matrix: Any, name: str = "matrix", tol: float = HERMITIAN_TOL) -> ComplexMatrix:
    """
    Validate that a matrix is Hermitian within tolerance.

    Args:
        matrix: Array-like square matrix
        name: Name used in error messages
        tol: Absolute tolerance on ‖A − A†‖

    Returns:
        The matrix as a complex ndarray

    Raises:
        ValueError: If the matrix is not square or its Hermiticity defect exceeds tol
    """
    array = as_matrix(matrix, name)
    defect = hermiticity_defect(array)
    if defect > tol:
        raise ValueError(
            f"{name} is not Hermitian: defect ‖A − A†‖ = {defect:.3e} exceeds {tol:.0e}"
        )
    return array


def matfunc_hermitian(matrix: ComplexMatrix, func: Callable[[float], complex]) -> ComplexMatrix:
    """
    Apply a scalar function to a Hermitian matrix through its eigendecomposition.

    Computes V f(Λ) V† from A = V Λ V†. Degenerate eigenvalues are fine since
    only f(Λ) enters the result.

    Args:
        matrix: Hermitian matrix (defect ≤ 1e-10)
        func: Scalar function, real or complex valued

    Returns:
        f(A) as a dense complex matrix

    Raises:
        ValueError: If the matrix is not Hermitian
    """
    array = require_hermitian(matrix)
    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (array + array.conj().T))
    values = np.array([func(float(x)) for x in eigenvalues], dtype=complex)
    return (eigenvectors * values) @ eigenvectors.conj().T


def check_unitary(matrix: ComplexMatrix) -> float:
    """
    Unitarity defect ‖M†M − I‖.

    The caller compares the returned defect against its own tolerance.

    Args:
        matrix: Square matrix

    Returns:
        Spectral norm of M†M − I

    Raises:
        ValueError: If the matrix is not square
    """
    array = as_matrix(matrix)
    rows, cols = array.shape
    if rows != cols:
        raise ValueError(f"Unitarity check needs a square matrix, got shape {array.shape}")
    return spectral_norm(array.conj().T @ array - np.eye(rows))


def is_unitary(matrix: ComplexMatrix, tol: float = UNITARY_TOL) -> bool:
    """Pass/fail form of check_unitary: True when ‖M†M − I‖ ≤ tol."""
    return check_unitary(matrix) <= tol


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def qubit_count(dim: int) -> int:
    """Number of qubits for a power-of-two dimension."""
    if not is_power_of_two(dim):
        raise ValueError(f"Dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def as_state(vector: Any, name: str = "state") -> StateVector:
    """
    Validate a normalized state vector.

    Raises:
        ValueError: If the dimension is not a power of two or the norm is not 1
    """
    state = np.asarray(vector, dtype=complex).reshape(-1)
    if not is_power_of_two(state.size):
        raise ValueError(f"{name} dimension {state.size} is not a power of two")
    norm = float(np.linalg.norm(state))
    if abs(norm - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"{name} is not normalized: norm = {norm:.12f}")
    return state


def normalize(vector: Any) -> StateVector:
    """
    Scale a vector to unit Euclidean norm.

    Raises:
        ValueError: If the vector is zero
    """
    state = np.asarray(vector, dtype=complex).reshape(-1)
    norm = float(np.linalg.norm(state))
    if norm == 0.0:
        raise ValueError("Cannot normalize the zero vector")
    return state / norm


def fidelity(a: StateVector, b: StateVector) -> float:
    """Return |⟨a|b⟩|² for two normalized states."""
    return float(abs(np.vdot(a, b)) ** 2)


def hadamard_transform(qubits: int) -> ComplexMatrix:
    """Return H^{⊗qubits} as a dense matrix."""
    dim = 2 ** qubits
    return linalg.hadamard(dim).astype(complex) / np.sqrt(dim)


def random_hermitian(dim: int, rng: np.random.Generator, norm: Optional[float] = None) -> ComplexMatrix:
    """
    Draw a random Hermitian matrix.

    Args:
        dim: Matrix dimension
        rng: Random generator
        norm: If given, rescale so the spectral norm equals this value

    Returns:
        Hermitian matrix
    """
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    hermitian = 0.5 * (raw + raw.conj().T)
    if norm is not None:
        hermitian *= norm / spectral_norm(hermitian)
    return hermitian


def random_unitary(dim: int, rng: np.random.Generator) -> ComplexMatrix:
    """Draw a Haar-random unitary."""
    return unitary_group.rvs(dim, random_state=rng)


def random_state(dim: int, rng: np.random.Generator) -> StateVector:
    """Draw a Haar-random normalized state."""
    return normalize(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def encode_matrix(matrix: ComplexMatrix) -> List[List[List[float]]]:
    """Encode a complex matrix as nested [re, im] arrays."""
    array = as_matrix(matrix)
    return [[[float(z.real), float(z.imag)] for z in row] for row in array]


def decode_matrix(raw: Any, name: str = "matrix") -> ComplexMatrix:
    """
    Decode nested [re, im] arrays into a complex matrix.

    Plain real numbers are accepted in place of [re, 0] pairs.

    Raises:
        ValueError: If the nesting is ragged or an entry is malformed
    """
    if not isinstance(raw, Sequence) or isinstance(raw, str) or len(raw) == 0:
        raise ValueError(f"{name} must be a non-empty list of rows")
    rows = []
    for i, row in enumerate(raw):
        if not isinstance(row, Sequence) or isinstance(row, str):
            raise ValueError(f"{name} row {i} is not a list")
        rows.append([_decode_entry(entry, f"{name}[{i}][{j}]") for j, entry in enumerate(row)])
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise ValueError(f"{name} rows have differing lengths {sorted(widths)}")
    return as_matrix(rows, name)


def decode_vector(raw: Any, name: str = "vector") -> np.ndarray:
    """Decode a list of [re, im] pairs into a complex vector."""
    if not isinstance(raw, Sequence) or isinstance(raw, str) or len(raw) == 0:
        raise ValueError(f"{name} must be a non-empty list")
    return np.array([_decode_entry(entry, f"{name}[{i}]") for i, entry in enumerate(raw)], dtype=complex)


def _decode_entry(entry: Any, where: str) -> complex:
    if isinstance(entry, (int, float)) and not isinstance(entry, bool):
        return complex(entry)
    if (
        isinstance(entry, Sequence)
        and not isinstance(entry, str)
        and len(entry) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)
    ):
        return complex(entry[0], entry[1])
    raise ValueError(f"{where} must be a number or an [re, im] pair, got {entry!r}")
