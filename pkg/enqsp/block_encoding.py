"""
Block Encoding Module

Construct, extract and combine block-encodings. A block-encoding is a unitary
U on ancilla ⊗ system whose top-left system-sized block, times the scale α,
is the encoded matrix. Ancilla registers are always the most significant.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .numerics import (
    ComplexMatrix,
    UNITARY_TOL,
    as_matrix,
    check_unitary,
    hadamard_transform,
    is_power_of_two,
    matfunc_hermitian,
    require_hermitian,
    spectral_norm,
)

logger = logging.getLogger(__name__)

DILATION_NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BlockEncoding:
    """
    Explicit block-encoding of a matrix.

    Attributes:
        unitary: Unitary of dimension 2^(system_qubits + ancilla_qubits)
        ancilla_qubits: Number of ancilla qubits m
        system_qubits: Number of system qubits n
        scale: Normalization factor α > 0
        precision: Encoding precision ε ≥ 0
    """
    unitary: ComplexMatrix
    ancilla_qubits: int
    system_qubits: int
    scale: float = 1.0
    precision: float = 0.0

    def __post_init__(self):
        unitary = as_matrix(self.unitary, "unitary")
        expected = 2 ** (self.system_qubits + self.ancilla_qubits)
        if unitary.shape != (expected, expected):
            raise ValueError(
                f"Unitary shape {unitary.shape} does not match "
                f"{self.system_qubits} system + {self.ancilla_qubits} ancilla qubits"
            )
        if self.scale <= 0:
            raise ValueError(f"Scale must be positive, got {self.scale}")
        if self.precision < 0:
            raise ValueError(f"Precision must be non-negative, got {self.precision}")
        defect = check_unitary(unitary)
        if defect > UNITARY_TOL:
            raise ValueError(f"Block-encoding matrix is not unitary (defect {defect:.3e})")
        object.__setattr__(self, "unitary", unitary)

    @property
    def system_dim(self) -> int:
        return 2 ** self.system_qubits

    @property
    def top_left(self) -> ComplexMatrix:
        """Unscaled top-left block (⟨0|^m ⊗ I) U (|0⟩^m ⊗ I)."""
        n = self.system_dim
        return self.unitary[:n, :n]


def encoded_block(encoding: BlockEncoding) -> ComplexMatrix:
    """
    Extract the encoded matrix α · (⟨0|^m ⊗ I) U (|0⟩^m ⊗ I).

    Args:
        encoding: Block-encoding

    Returns:
        The scaled top-left block
    """
    return encoding.scale * encoding.top_left


def dilate_hermitian(matrix: ComplexMatrix) -> BlockEncoding:
    """
    One-ancilla block-encoding of a Hermitian contraction.

    Builds U = [[A, √(I−A²)], [√(I−A²), −A]]. The square root comes from the
    eigendecomposition with roundoff-negative eigenvalues clamped to zero.

    Args:
        matrix: Hermitian matrix with ‖A‖ ≤ 1

    Returns:
        (1, 1, 0)-block-encoding whose top-left block is A

    Raises:
        ValueError: If A is not Hermitian, not a power-of-two size, or ‖A‖ > 1
    """
    a = require_hermitian(matrix, "A")
    norm = spectral_norm(a)
    if norm > 1.0 + DILATION_NORM_TOL:
        raise ValueError(f"Cannot dilate a matrix with spectral norm {norm:.12f} > 1")
    dim = a.shape[0]
    if not is_power_of_two(dim):
        raise ValueError(f"Matrix dimension {dim} is not a power of two")

    complement = matfunc_hermitian(a, lambda x: np.sqrt(max(1.0 - x * x, 0.0)))
    unitary = np.block([[a, complement], [complement, -a]])
    logger.debug(f"Dilated {dim}x{dim} Hermitian matrix with norm {norm:.6f}")
    return BlockEncoding(unitary=unitary, ancilla_qubits=1, system_qubits=dim.bit_length() - 1)


def adjoint_encoding(encoding: BlockEncoding) -> BlockEncoding:
    """Block-encoding of A† obtained from U†."""
    return BlockEncoding(
        unitary=encoding.unitary.conj().T,
        ancilla_qubits=encoding.ancilla_qubits,
        system_qubits=encoding.system_qubits,
        scale=encoding.scale,
        precision=encoding.precision,
    )


def pad_ancillas(encoding: BlockEncoding, ancilla_qubits: int) -> BlockEncoding:
    """Add idle ancilla qubits above the existing ones; the block is unchanged."""
    extra = ancilla_qubits - encoding.ancilla_qubits
    if extra < 0:
        raise ValueError(
            f"Cannot shrink {encoding.ancilla_qubits} ancillas to {ancilla_qubits}"
        )
    if extra == 0:
        return encoding
    return BlockEncoding(
        unitary=np.kron(np.eye(2 ** extra), encoding.unitary),
        ancilla_qubits=ancilla_qubits,
        system_qubits=encoding.system_qubits,
        scale=encoding.scale,
        precision=encoding.precision,
    )


def prepare_unitary(first_column: np.ndarray) -> ComplexMatrix:
    """
    Complete a unit vector to a unitary whose first column it is.

    A uniform real positive column yields the Hadamard transform; any other
    column is completed with an orthonormal basis of its complement.
    """
    column = np.asarray(first_column, dtype=complex).reshape(-1)
    size = column.size
    if is_power_of_two(size) and np.allclose(column, 1.0 / np.sqrt(size), atol=1e-15):
        return hadamard_transform(size.bit_length() - 1)
    complement = linalg.null_space(column.conj()[np.newaxis, :])
    return np.column_stack([column, complement])


def weighted_block_sum(blocks: Sequence[ComplexMatrix], weights: Sequence[complex]) -> ComplexMatrix:
    """
    Block-level LCU algebra: (1/β) Σ w_j B_j with β = Σ|w_j|.

    Raises:
        ValueError: If the lists are empty, lengths differ or a weight is zero
    """
    if len(blocks) == 0:
        raise ValueError("Cannot combine an empty list of blocks")
    if len(blocks) != len(weights):
        raise ValueError(f"Got {len(blocks)} blocks but {len(weights)} weights")
    weights = np.asarray(weights, dtype=complex)
    if np.any(np.abs(weights) == 0):
        raise ValueError("LCU weights must be nonzero")
    beta = float(np.sum(np.abs(weights)))
    total = sum(w * np.asarray(b, dtype=complex) for w, b in zip(weights, blocks))
    return total / beta


def lcu_combine(encodings: Sequence[BlockEncoding], weights: Sequence[complex]) -> BlockEncoding:
    """
    Linear combination of block-encodings.

    The new combine register sits above all existing ancillas. Weight phases
    are split evenly between the left and right prepare unitaries, and the
    select register is padded to a power of two with identity terms.

    Args:
        encodings: Block-encodings sharing the system size and scale
        weights: Nonzero complex weights w_j

    Returns:
        Block-encoding of (1/β) Σ w_j · block_j with β = Σ|w_j|

    Raises:
        ValueError: On an empty list, mismatched sizes/scales or zero weights
    """
    if len(encodings) == 0:
        raise ValueError("Cannot combine an empty list of block-encodings")
    if len(encodings) != len(weights):
        raise ValueError(f"Got {len(encodings)} encodings but {len(weights)} weights")
    system_qubits = {e.system_qubits for e in encodings}
    if len(system_qubits) != 1:
        raise ValueError(f"Block-encodings have mismatched system sizes {sorted(system_qubits)}")
    scales = [e.scale for e in encodings]
    if not np.allclose(scales, scales[0], rtol=1e-12, atol=0.0):
        raise ValueError(f"Block-encodings have mismatched scales {scales}")
    weights = np.asarray(weights, dtype=complex)
    if np.any(np.abs(weights) == 0):
        raise ValueError("LCU weights must be nonzero")

    k = len(encodings)
    select_qubits = int(np.ceil(np.log2(k))) if k > 1 else 0
    slots = 2 ** select_qubits
    ancillas = max(e.ancilla_qubits for e in encodings)
    padded = [pad_ancillas(e, ancillas) for e in encodings]
    inner_dim = padded[0].unitary.shape[0]

    beta = float(np.sum(np.abs(weights)))
    magnitudes = np.sqrt(np.abs(weights) / beta)
    half_phases = np.exp(0.5j * np.angle(weights))
    left = np.zeros(slots, dtype=complex)
    right = np.zeros(slots, dtype=complex)
    left[:k] = magnitudes * half_phases.conj()
    right[:k] = magnitudes * half_phases

    prepare_left = prepare_unitary(left)
    prepare_right = prepare_unitary(right)
    terms = [e.unitary for e in padded] + [np.eye(inner_dim)] * (slots - k)
    select = linalg.block_diag(*terms)
    unitary = (
        np.kron(prepare_left.conj().T, np.eye(inner_dim))
        @ select
        @ np.kron(prepare_right, np.eye(inner_dim))
    )
    logger.debug(f"Combined {k} block-encodings with β = {beta:.6f} on {select_qubits} select qubits")
    return BlockEncoding(
        unitary=unitary,
        ancilla_qubits=ancillas + select_qubits,
        system_qubits=encodings[0].system_qubits,
        scale=scales[0],
        precision=max(e.precision for e in encodings),
    )


def product_encode(a: BlockEncoding, b: BlockEncoding) -> BlockEncoding:
    """
    Block-encoding of the product block(a) · block(b).

    Register order is (ancillas of b, ancillas of a, system); U_a acts on its
    ancillas and the system, U_b on its ancillas and the system.

    Raises:
        ValueError: If the system sizes differ
    """
    if a.system_qubits != b.system_qubits:
        raise ValueError(
            f"Cannot multiply encodings of {a.system_qubits} and {b.system_qubits} system qubits"
        )
    n = a.system_dim
    dim_a = 2 ** a.ancilla_qubits
    dim_b = 2 ** b.ancilla_qubits

    lifted_a = np.kron(np.eye(dim_b), a.unitary)
    ub = b.unitary.reshape(dim_b, n, dim_b, n)
    lifted_b = np.einsum("ixjy,ab->iaxjby", ub, np.eye(dim_a)).reshape(dim_b * dim_a * n, dim_b * dim_a * n)

    return BlockEncoding(
        unitary=lifted_a @ lifted_b,
        ancilla_qubits=a.ancilla_qubits + b.ancilla_qubits,
        system_qubits=a.system_qubits,
        scale=a.scale * b.scale,
        precision=a.precision + b.precision,
    )
