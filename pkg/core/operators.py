"""
Dense operators, tensor embedding and matrix exponentials.

Operators use the same basis convention as core.states: qubit 1 is the most
significant bit. Qubit indices are 1-based throughout the package.
"""

import logging
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, NonFiniteError, QubitIndexError
from .states import StateVector, num_qubits_for_dimension

logger = logging.getLogger(__name__)

UNITARY_TOLERANCE = 1e-10
NORMALITY_TOLERANCE = 1e-12

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)

# sigma^- = |0><1| lowers the excited state
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T
EXCITATION = SIGMA_PLUS @ SIGMA_MINUS

CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
CZ_MATRIX = np.diag([1, 1, 1, -1]).astype(complex)

PAULIS = {'I': PAULI_I, 'X': PAULI_X, 'Y': PAULI_Y, 'Z': PAULI_Z}


def _freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Square complex matrix acting on num_qubits qubits.

    Unitarity is not assumed; callers that need it use is_unitary().
    """

    num_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.entries, dtype=complex)
        dim = 2 ** self.num_qubits
        if matrix.shape != (dim, dim):
            raise DimensionMismatchError(f"expected {dim}x{dim} matrix, got {matrix.shape}")
        object.__setattr__(self, 'entries', _freeze(matrix))

    @property
    def dim(self) -> int:
        return 2 ** self.num_qubits

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> 'DenseOperator':
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"matrix must be square, got {matrix.shape}")
        return cls(num_qubits_for_dimension(matrix.shape[0]), matrix)

    @classmethod
    def identity(cls, num_qubits: int) -> 'DenseOperator':
        return cls(num_qubits, np.eye(2 ** num_qubits, dtype=complex))

    def dagger(self) -> 'DenseOperator':
        return DenseOperator(self.num_qubits, self.entries.conj().T)

    def is_unitary(self, tol: float = UNITARY_TOLERANCE) -> bool:
        product = self.entries.conj().T @ self.entries
        return float(np.max(np.abs(product - np.eye(self.dim)))) <= tol

    def is_hermitian(self, tol: float = UNITARY_TOLERANCE) -> bool:
        return float(np.max(np.abs(self.entries - self.entries.conj().T))) <= tol

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.entries)))

    def _check(self, other: 'DenseOperator') -> None:
        if other.num_qubits != self.num_qubits:
            raise DimensionMismatchError(
                f"qubit count mismatch: {self.num_qubits} vs {other.num_qubits}"
            )

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return apply(self, other)
        if isinstance(other, DenseOperator):
            self._check(other)
            return DenseOperator(self.num_qubits, self.entries @ other.entries)
        return NotImplemented

    def __add__(self, other: 'DenseOperator') -> 'DenseOperator':
        self._check(other)
        return DenseOperator(self.num_qubits, self.entries + other.entries)

    def __sub__(self, other: 'DenseOperator') -> 'DenseOperator':
        self._check(other)
        return DenseOperator(self.num_qubits, self.entries - other.entries)

    def __mul__(self, scalar: complex) -> 'DenseOperator':
        return DenseOperator(self.num_qubits, self.entries * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> 'DenseOperator':
        return DenseOperator(self.num_qubits, -self.entries)

    def __repr__(self) -> str:
        return f"DenseOperator(num_qubits={self.num_qubits})"


def _as_array(op: Union[DenseOperator, np.ndarray]) -> np.ndarray:
    if isinstance(op, DenseOperator):
        return op.entries
    return np.asarray(op, dtype=complex)


def _check_qubit(index: int, num_qubits: int) -> None:
    if not 1 <= index <= num_qubits:
        raise QubitIndexError(f"qubit index {index} outside 1..{num_qubits}")


def embed_single_qubit(op: np.ndarray, qubit_index: int, num_qubits: int) -> DenseOperator:
    """
    Place a 2x2 operator on one qubit of an N-qubit register.

    Args:
        op: 2x2 complex matrix
        qubit_index: Target qubit (1-based, 1 = most significant)
        num_qubits: Register size

    Returns:
        I ⊗ ... ⊗ op ⊗ ... ⊗ I
    """
    _check_qubit(qubit_index, num_qubits)
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise DimensionMismatchError(f"single-qubit operator must be 2x2, got {op.shape}")
    factors = [PAULI_I] * num_qubits
    factors[qubit_index - 1] = op
    return DenseOperator(num_qubits, reduce(np.kron, factors))


def embed_operator(op: np.ndarray, qubits: Sequence[int], num_qubits: int) -> DenseOperator:
    """Place a k-qubit operator on an ordered list of distinct qubits.

    The first listed qubit is the most significant bit of the operator's own
    index, so embed_operator(CNOT_MATRIX, (3, 1), 3) has control 3, target 1.
    """
    qubits = tuple(int(q) for q in qubits)
    for q in qubits:
        _check_qubit(q, num_qubits)
    if len(set(qubits)) != len(qubits):
        raise QubitIndexError(f"qubits must be distinct, got {qubits}")
    k = len(qubits)
    op = np.asarray(op, dtype=complex)
    if op.shape != (2 ** k, 2 ** k):
        raise DimensionMismatchError(f"operator shape {op.shape} does not match {k} qubits")

    dim = 2 ** num_qubits
    gate = op.reshape([2] * (2 * k))
    columns = np.eye(dim, dtype=complex).reshape([2] * num_qubits + [dim])
    axes = [q - 1 for q in qubits]
    out = np.tensordot(gate, columns, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return DenseOperator(num_qubits, out.reshape(dim, dim))


def tensor_power(op: np.ndarray, num_qubits: int) -> DenseOperator:
    """op ⊗ op ⊗ ... (num_qubits factors)."""
    op = np.asarray(op, dtype=complex)
    return DenseOperator(num_qubits, reduce(np.kron, [op] * num_qubits))


def pauli_string(labels: str) -> DenseOperator:
    """Tensor product from a label string such as "XIZ"."""
    return DenseOperator(len(labels), reduce(np.kron, [PAULIS[c] for c in labels]))


def apply(op: DenseOperator, state: StateVector) -> StateVector:
    """op·state without renormalization."""
    if op.num_qubits != state.num_qubits:
        raise DimensionMismatchError(
            f"operator on {op.num_qubits} qubits applied to state on {state.num_qubits}"
        )
    return StateVector(state.num_qubits, op.entries @ state.amplitudes)


def compose(ops: Iterable[DenseOperator]) -> DenseOperator:
    """Product of operators in time order: the first element acts first."""
    ops = list(ops)
    if not ops:
        raise ValueError("compose() needs at least one operator")
    result = ops[0]
    for op in ops[1:]:
        result = op @ result
    return result


def commutator(a: Union[DenseOperator, np.ndarray], b: Union[DenseOperator, np.ndarray]) -> np.ndarray:
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def expm(matrix: Union[DenseOperator, np.ndarray]) -> DenseOperator:
    """
    Matrix exponential.

    Diagonal inputs are exponentiated entrywise. Normal matrices go through
    an eigendecomposition (eigh for Hermitian and anti-Hermitian input,
    complex Schur otherwise). Anything else uses Padé scaling and squaring.

    Raises:
        NonFiniteError: if any entry is NaN or infinite
    """
    a = _as_array(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"matrix must be square, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("matrix has non-finite entries")
    num_qubits = num_qubits_for_dimension(a.shape[0])

    diagonal = np.diag(a)
    if not np.any(a - np.diag(diagonal)):
        return DenseOperator(num_qubits, np.diag(np.exp(diagonal)))

    scale = max(1.0, float(np.max(np.abs(a))))
    adjoint = a.conj().T
    if np.max(np.abs(a @ adjoint - adjoint @ a)) <= NORMALITY_TOLERANCE * scale ** 2:
        if np.max(np.abs(a - adjoint)) <= NORMALITY_TOLERANCE * scale:
            w, v = np.linalg.eigh(0.5 * (a + adjoint))
            result = (v * np.exp(w)) @ v.conj().T
        elif np.max(np.abs(a + adjoint)) <= NORMALITY_TOLERANCE * scale:
            # a = iH with H Hermitian
            hermitian = -0.5j * (a - adjoint)
            w, v = np.linalg.eigh(hermitian)
            result = (v * np.exp(1j * w)) @ v.conj().T
        else:
            t, z = scipy.linalg.schur(a, output='complex')
            result = (z * np.exp(np.diag(t))) @ z.conj().T
    else:
        result = scipy.linalg.expm(a)
    return DenseOperator(num_qubits, result)


def evolution(generator: Union[DenseOperator, np.ndarray], angle: float) -> DenseOperator:
    """exp(-i·angle·generator)."""
    return expm(-1j * angle * _as_array(generator))


def operator_distance(u: Union[DenseOperator, np.ndarray], v: Union[DenseOperator, np.ndarray]) -> float:
    """Global-phase-insensitive max-norm distance ‖U − e^{iφ}V‖_max.

    φ is read off the largest-magnitude entry of V.
    """
    u, v = _as_array(u), _as_array(v)
    if u.shape != v.shape:
        raise DimensionMismatchError(f"shape mismatch {u.shape} vs {v.shape}")
    k = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    phase = 1.0 + 0j
    if abs(v[k]) > 0 and abs(u[k]) > 0:
        ratio = u[k] / v[k]
        phase = ratio / abs(ratio)
    return float(np.max(np.abs(u - phase * v)))


def excitation_bits(num_qubits: int) -> np.ndarray:
    """(2^N, N) array whose row b holds the bits b_1..b_N of basis index b."""
    indices = np.arange(2 ** num_qubits)
    shifts = np.arange(num_qubits - 1, -1, -1)
    return (indices[:, None] >> shifts[None, :]) & 1


def lower_amplitudes(amplitudes: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    """sigma^-_qubit applied to a raw amplitude vector (no renormalization)."""
    _check_qubit(qubit, num_qubits)
    view = np.asarray(amplitudes).reshape(2 ** (qubit - 1), 2, 2 ** (num_qubits - qubit))
    out = np.zeros_like(view, dtype=complex)
    out[:, 0, :] = view[:, 1, :]
    return out.reshape(-1)


def apply_lowering(state: StateVector, qubit: int) -> StateVector:
    """sigma^-_qubit·state, unnormalized."""
    return StateVector(state.num_qubits, lower_amplitudes(state.amplitudes, qubit, state.num_qubits))
