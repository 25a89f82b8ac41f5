"""
State containers for few-qubit dense simulation.

Basis convention: qubit 1 is the most significant bit of the basis index,
so the amplitude of |b_1 b_2 ... b_N> sits at index int("b_1...b_N", 2).
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatchError, NormalizationError

NORM_TOLERANCE = 1e-10


def _freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def num_qubits_for_dimension(dim: int) -> int:
    """Return N with 2**N == dim, or raise."""
    num_qubits = int(dim).bit_length() - 1
    if dim < 2 or (1 << num_qubits) != dim:
        raise DimensionMismatchError(f"dimension {dim} is not a power of two >= 2")
    return num_qubits


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitude vector over num_qubits qubits.

    Amplitudes are copied on construction and stored read-only. The vector is
    not required to be normalized; conditional evolution produces shrinking
    norms on purpose.
    """

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise DimensionMismatchError("num_qubits must be >= 1")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 2 ** self.num_qubits:
            raise DimensionMismatchError(
                f"expected {2 ** self.num_qubits} amplitudes, got {amps.shape[0]}"
            )
        object.__setattr__(self, 'amplitudes', _freeze(amps))

    @property
    def dim(self) -> int:
        return 2 ** self.num_qubits

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex]) -> 'StateVector':
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(num_qubits_for_dimension(amps.shape[0]), amps)

    @classmethod
    def basis_state(cls, num_qubits: int, index: int) -> 'StateVector':
        amps = np.zeros(2 ** num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_bitstring(cls, bits: str) -> 'StateVector':
        """Computational basis state, e.g. "010" -> |010>."""
        if not bits or any(b not in '01' for b in bits):
            raise ValueError(f"invalid bitstring {bits!r}")
        return cls.basis_state(len(bits), int(bits, 2))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORM_TOLERANCE) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def normalized(self) -> 'StateVector':
        norm = self.norm()
        if norm == 0.0:
            raise NormalizationError("cannot normalize the zero vector")
        return StateVector(self.num_qubits, self.amplitudes / norm)

    def require_normalized(self, tol: float = NORM_TOLERANCE) -> None:
        if not self.is_normalized(tol):
            raise NormalizationError(f"state norm {self.norm():.12g} is not 1")

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def projector(self) -> 'DensityMatrix':
        return DensityMatrix.from_state(self)

    def to_dict(self, cutoff: float = 0.0) -> Dict[str, List[float]]:
        """Basis-index -> [re, im] for amplitudes above cutoff in magnitude."""
        return {
            str(index): [float(amp.real), float(amp.imag)]
            for index, amp in enumerate(self.amplitudes)
            if abs(amp) > cutoff
        }

    @classmethod
    def from_dict(cls, num_qubits: int, data: Dict[str, Sequence[float]]) -> 'StateVector':
        amps = np.zeros(2 ** num_qubits, dtype=complex)
        for index, (re, im) in data.items():
            amps[int(index)] = complex(re, im)
        return cls(num_qubits, amps)

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits}, norm={self.norm():.6f})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density operator on num_qubits qubits; entries stored read-only."""

    num_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        dim = 2 ** self.num_qubits
        if rho.shape != (dim, dim):
            raise DimensionMismatchError(f"expected {dim}x{dim} matrix, got {rho.shape}")
        object.__setattr__(self, 'entries', _freeze(rho))

    @property
    def dim(self) -> int:
        return 2 ** self.num_qubits

    @classmethod
    def from_state(cls, state: StateVector) -> 'DensityMatrix':
        amps = state.amplitudes
        return cls(state.num_qubits, np.outer(amps, amps.conj()))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> 'DensityMatrix':
        matrix = np.asarray(matrix, dtype=complex)
        return cls(num_qubits_for_dimension(matrix.shape[0]), matrix)

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> 'DensityMatrix':
        dim = 2 ** num_qubits
        return cls(num_qubits, np.eye(dim, dtype=complex) / dim)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def is_valid(self, tol: float = NORM_TOLERANCE, eig_tol: float = 1e-9) -> Tuple[bool, Optional[str]]:
        """
        Check trace, hermiticity and positivity.

        Returns:
            Tuple of (is_valid, error_message)
        """
        rho = self.entries
        if abs(np.trace(rho) - 1.0) > tol:
            return False, f"trace {np.trace(rho).real:.12g} differs from 1"
        if np.max(np.abs(rho - rho.conj().T)) > tol:
            return False, "matrix is not Hermitian"
        min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))))
        if min_eig < -eig_tol:
            return False, f"negative eigenvalue {min_eig:.3e}"
        return True, None

    def __repr__(self) -> str:
        return f"DensityMatrix(num_qubits={self.num_qubits}, trace={self.trace().real:.6f})"


def _check_same_size(a, b) -> None:
    if a.num_qubits != b.num_qubits:
        raise DimensionMismatchError(
            f"qubit count mismatch: {a.num_qubits} vs {b.num_qubits}"
        )


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugating the left argument."""
    _check_same_size(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def purity(rho: DensityMatrix) -> float:
    """Tr(rho^2), clamped to [1/d, 1] for reporting."""
    value = float(np.real(np.einsum('ij,ji->', rho.entries, rho.entries)))
    return float(np.clip(value, 1.0 / rho.dim, 1.0))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    _check_same_size(rho, sigma)
    diff = rho.entries - sigma.entries
    eigenvalues = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return 0.5 * float(np.sum(np.abs(eigenvalues)))


def state_fidelity(rho: DensityMatrix, state: StateVector) -> float:
    """<psi|rho|psi> for a pure reference."""
    _check_same_size(rho, state)
    amps = state.amplitudes
    return float(np.real(np.vdot(amps, rho.entries @ amps)))


def haar_random_state(num_qubits: int, rng: Union[np.random.Generator, int]) -> StateVector:
    """Haar-distributed pure state from normalized complex Gaussians."""
    rng = np.random.default_rng(rng)
    dim = 2 ** num_qubits
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(num_qubits, amps / np.linalg.norm(amps))
