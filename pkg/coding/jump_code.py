"""
The (n+1, n) detected-jump code.

Codewords |x⟩_L = (|x, 0⟩ + |x̄, 1⟩)/√2 span the +1 eigenspace of the
collective stabilizer ⊗_j X_j. A detected emission on qubit i is undone by
the recovery circuit H_i, then CNOT_{i→k}, then X_k for every k ≠ i.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import DimensionMismatchError, NormalizationError, QubitIndexError
from core.operators import PAULI_X, DenseOperator, apply_lowering, tensor_power
from core.states import StateVector
from utils.cache import get_operator_cache
from utils.validation import Validator

from .circuits import Circuit, GateOp

logger = logging.getLogger(__name__)

QECC_TOLERANCE = 1e-12
SYNDROME_VARIANTS = ('standard', 'transversal')


@dataclass(frozen=True)
class CodeSpec:
    """Code on n logical and n+1 physical qubits; qubit n+1 is the parity qubit."""

    n: int

    def __post_init__(self):
        Validator.require(Validator.validate_code_size(self.n), 'n')

    @property
    def num_physical(self) -> int:
        return self.n + 1

    @property
    def parity_qubit(self) -> int:
        return self.n + 1

    @property
    def logical_dim(self) -> int:
        return 2 ** self.n

    def codeword_indices(self, x: int) -> Tuple[int, int]:
        """Physical basis indices of |x, 0⟩ and |x̄, 1⟩."""
        mask = self.logical_dim - 1
        return x << 1, ((~x & mask) << 1) | 1

    def basis_matrix(self) -> np.ndarray:
        """Isometry B with columns |x⟩_L, shape (2^{n+1}, 2^n)."""
        def build():
            basis = np.zeros((2 ** self.num_physical, self.logical_dim), dtype=complex)
            for x in range(self.logical_dim):
                low, high = self.codeword_indices(x)
                basis[low, x] = basis[high, x] = 1.0 / np.sqrt(2.0)
            basis.flags.writeable = False
            return basis
        return get_operator_cache().code_artifact('basis', self.n, build)

    def projector(self) -> np.ndarray:
        def build():
            basis = self.basis_matrix()
            proj = basis @ basis.conj().T
            proj.flags.writeable = False
            return proj
        return get_operator_cache().code_artifact('projector', self.n, build)

    def gram_matrix(self) -> np.ndarray:
        basis = self.basis_matrix()
        return basis.conj().T @ basis

    def stabilizer(self) -> DenseOperator:
        return tensor_power(PAULI_X, self.num_physical)

    def to_dict(self) -> Dict:
        """JSON export: codewords as basis-index -> [re, im] maps."""
        return {
            'n': self.n,
            'num_physical': self.num_physical,
            'codewords': {
                format(x, f'0{self.n}b'): codeword(self.n, x).to_dict(cutoff=0.0)
                for x in range(self.logical_dim)
            },
        }


def _logical_index(n: int, x: Union[str, int, Sequence[int]]) -> int:
    if isinstance(x, str):
        Validator.require(Validator.validate_bitstring(x, n), 'x')
        return int(x, 2)
    if isinstance(x, (int, np.integer)):
        if not 0 <= x < 2 ** n:
            raise DimensionMismatchError(f"logical index {x} outside 0..{2 ** n - 1}")
        return int(x)
    bits = ''.join(str(int(b)) for b in x)
    return _logical_index(n, bits)


def codeword(n: int, x: Union[str, int, Sequence[int]]) -> StateVector:
    """
    Normalized codeword |x⟩_L.

    Args:
        n: Number of logical qubits
        x: Bitstring of length n, its integer value, or a bit sequence

    Returns:
        (|x, 0⟩ + |x̄, 1⟩)/√2 on n+1 qubits
    """
    code = CodeSpec(n)
    return StateVector(code.num_physical, code.basis_matrix()[:, _logical_index(n, x)])


def preparation_circuit(n: int) -> Circuit:
    """H on qubit n+1, then CNOT from n+1 onto every qubit 1..n."""
    ops = [GateOp('H', (n + 1,))]
    ops.extend(GateOp('CNOT', (n + 1, k)) for k in range(1, n + 1))
    return Circuit(n + 1, tuple(ops), 'prepare')


def readout_circuit(n: int) -> Circuit:
    """Collective CNOT from n+1 onto 1..n; maps |x⟩_L to |x⟩ ⊗ |+⟩."""
    return Circuit(n + 1, tuple(GateOp('CNOT', (n + 1, k)) for k in range(1, n + 1)), 'readout')


def _circuit_matrix(kind: str, n: int, builder) -> np.ndarray:
    return get_operator_cache().code_artifact(kind, n, lambda: builder(n).unitary().entries)


def encode(logical: StateVector) -> StateVector:
    """
    Encode an n-qubit state by running the preparation circuit on logical ⊗ |0⟩.

    Raises:
        NormalizationError: if the input is not normalized
    """
    logical.require_normalized()
    n = logical.num_qubits
    padded = np.kron(logical.amplitudes, np.array([1.0, 0.0], dtype=complex))
    prepared = _circuit_matrix('prepare', n, preparation_circuit) @ padded
    return StateVector(n + 1, prepared)


def encode_direct(logical: StateVector) -> StateVector:
    """Σ_x c_x |x⟩_L by direct codeword expansion."""
    code = CodeSpec(logical.num_qubits)
    return StateVector(code.num_physical, code.basis_matrix() @ logical.amplitudes)


def readout(physical: StateVector) -> Dict[str, float]:
    """Born distribution of the first n qubits after the readout circuit."""
    physical.require_normalized()
    n = physical.num_qubits - 1
    if n < 1:
        raise DimensionMismatchError("readout needs at least two physical qubits")
    rotated = _circuit_matrix('readout', n, readout_circuit) @ physical.amplitudes
    marginal = (np.abs(rotated) ** 2).reshape(2 ** n, 2).sum(axis=1)
    return {format(x, f'0{n}b'): float(p) for x, p in enumerate(marginal)}


def qecc_matrix_element(n: int, x: int, y: int, position: int) -> complex:
    """⟨y|_L σ_i⁺σ_i⁻ |x⟩_L."""
    code = CodeSpec(n)
    basis = code.basis_matrix()
    excited = _excitation_mask(code.num_physical, position)
    return complex(np.vdot(basis[:, y], excited * basis[:, x]))


def _excitation_mask(num_qubits: int, position: int) -> np.ndarray:
    if not 1 <= position <= num_qubits:
        raise QubitIndexError(f"position {position} outside 1..{num_qubits}")
    indices = np.arange(2 ** num_qubits)
    return ((indices >> (num_qubits - position)) & 1).astype(float)


@dataclass(frozen=True)
class QeccReport:
    """Outcome of the exhaustive error-correction condition check."""

    n: int
    max_deviation: float
    num_elements: int
    tolerance: float = QECC_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def to_dict(self) -> Dict:
        return {
            'n': self.n,
            'max_deviation': self.max_deviation,
            'num_elements': self.num_elements,
            'tolerance': self.tolerance,
            'passed': self.passed,
        }


def verify_qecc_condition(n: int) -> QeccReport:
    """
    Check ⟨y|_L σ_i⁺σ_i⁻ |x⟩_L against δ_xy/2 when y_i = x_i and 0 otherwise.

    Positions 1..n compare bit i of x and y. The parity qubit n+1 carries
    x_{n+1} = 0 and x̄ on the other branch, so its expected value is δ_xy/2.
    """
    if n > Validator.MAX_CODE_SIZE:
        raise ValueError(f"exhaustive check limited to n <= {Validator.MAX_CODE_SIZE}")
    code = CodeSpec(n)
    basis = code.basis_matrix()
    logical = np.arange(code.logical_dim)
    identity = np.eye(code.logical_dim)

    max_deviation = 0.0
    for position in range(1, code.num_physical + 1):
        mask = _excitation_mask(code.num_physical, position)
        elements = basis.conj().T @ (mask[:, None] * basis)
        if position <= n:
            bits = (logical >> (n - position)) & 1
            same = (bits[:, None] == bits[None, :]).astype(float)
        else:
            same = np.ones_like(identity)
        expected = 0.5 * identity * same
        max_deviation = max(max_deviation, float(np.max(np.abs(elements - expected))))

    report = QeccReport(n, max_deviation, code.num_physical * code.logical_dim ** 2)
    logger.debug(f"QECC condition n={n}: max deviation {max_deviation:.3e}")
    return report


@dataclass(frozen=True)
class RecoveryCircuit:
    """Recovery after a detected jump at one position."""

    n: int
    position: int

    def __post_init__(self):
        Validator.require(Validator.validate_qubit_index(self.position, self.n + 1), 'position')

    def gates(self) -> Tuple[GateOp, ...]:
        others = [k for k in range(1, self.n + 2) if k != self.position]
        ops = [GateOp('H', (self.position,))]
        ops.extend(GateOp('CNOT', (self.position, k)) for k in others)
        ops.extend(GateOp('X', (k,)) for k in others)
        return tuple(ops)

    def circuit(self) -> Circuit:
        return Circuit(self.n + 1, self.gates(), f'recover_{self.position}')

    def unitary(self, frame_flip: bool = False) -> np.ndarray:
        """Recovery matrix; frame_flip appends a collective X applied first."""
        def build():
            matrix = self.circuit().unitary().entries
            if frame_flip:
                matrix = matrix[:, ::-1]
            matrix = np.ascontiguousarray(matrix)
            matrix.flags.writeable = False
            return matrix
        return get_operator_cache().recovery(self.n, self.position, bool(frame_flip), build)


def recover(state: StateVector, position: int, frame_flip: bool = False) -> StateVector:
    """
    Apply the recovery circuit for a jump reported at position.

    Args:
        state: Post-jump state on n+1 qubits
        position: Reported qubit (1-based, may be the parity qubit)
        frame_flip: True when an odd number of collective pulses
            separates the jump from this recovery

    Returns:
        The recovered state (a codeword superposition when the report is right)
    """
    n = state.num_qubits - 1
    circuit = RecoveryCircuit(n, position)
    return StateVector(state.num_qubits, circuit.unitary(frame_flip) @ state.amplitudes)


def apply_jump(state: StateVector, position: int) -> StateVector:
    """Renormalized σ_position⁻·state."""
    return apply_lowering(state, position).normalized()


def syndrome_circuit(n: int, variant: str = 'standard') -> Circuit:
    """
    Stabilizer measurement circuit on n+1 data qubits plus ancilla n+2.

    'standard' is H_a, CNOT a→j for every data qubit, H_a. 'transversal'
    is the product of H_i CNOT_{i→a} H_i over data qubits. Both leave the
    ancilla in |0⟩ on the +1 eigenspace of ⊗X_j and in |1⟩ on the -1 one.
    """
    if variant not in SYNDROME_VARIANTS:
        raise ValueError(f"variant must be one of {SYNDROME_VARIANTS}, got {variant!r}")
    data = range(1, n + 2)
    ancilla = n + 2
    if variant == 'standard':
        ops = [GateOp('H', (ancilla,))]
        ops.extend(GateOp('CNOT', (ancilla, j)) for j in data)
        ops.append(GateOp('H', (ancilla,)))
    else:
        ops = []
        for j in data:
            ops.extend([GateOp('H', (j,)), GateOp('CNOT', (j, ancilla)), GateOp('H', (j,))])
    return Circuit(n + 2, tuple(ops), f'syndrome_{variant}')


def measure_stabilizer(
    state: StateVector,
    rng: Union[np.random.Generator, int, None],
    variant: str = 'standard',
) -> Tuple[int, StateVector]:
    """
    Projectively measure ⊗X_j through an ancilla prepared in |0⟩.

    Args:
        state: Normalized state on n+1 qubits
        rng: Randomness source for the outcome (generator or seed)
        variant: Syndrome circuit variant

    Returns:
        (outcome ±1, post-measurement data state with the ancilla discarded)
    """
    state.require_normalized(1e-8)
    n = state.num_qubits - 1
    rng = np.random.default_rng(rng)
    unitary = get_operator_cache().code_artifact(
        f'syndrome_{variant}', n, lambda: syndrome_circuit(n, variant).unitary().entries
    )
    extended = np.kron(state.amplitudes, np.array([1.0, 0.0], dtype=complex))
    branches = (unitary @ extended).reshape(state.dim, 2)
    p_plus = float(np.vdot(branches[:, 0], branches[:, 0]).real)
    outcome = 1 if rng.random() < p_plus else -1
    post = branches[:, 0] if outcome == 1 else branches[:, 1]
    norm = np.linalg.norm(post)
    if norm == 0.0:
        raise NormalizationError("measurement outcome has zero probability")
    return outcome, StateVector(state.num_qubits, post / norm)


def unwind_parity_projection(state: StateVector, position: int, outcome: int) -> StateVector:
    """
    Undo a stabilizer projection on a post-jump state |0⟩_i ⊗ φ.

    The projected state is |0⟩_i φ ± |1⟩_i X_rest φ. CNOT_{i→k} for k ≠ i,
    then H_i, then X_i on outcome -1 returns |0⟩_i φ, after which the
    ordinary recovery for position applies.
    """
    if outcome not in (1, -1):
        raise ValueError("outcome must be +1 or -1")
    num_qubits = state.num_qubits
    ops = [GateOp('CNOT', (position, k)) for k in range(1, num_qubits + 1) if k != position]
    ops.append(GateOp('H', (position,)))
    if outcome == -1:
        ops.append(GateOp('X', (position,)))
    return Circuit(num_qubits, tuple(ops), 'unwind').apply(state)


def logical_fidelity(state: StateVector, reference_logical: StateVector) -> float:
    """|⟨encode(reference)|state⟩|²."""
    if state.num_qubits != reference_logical.num_qubits + 1:
        raise DimensionMismatchError(
            f"state on {state.num_qubits} qubits does not match a {reference_logical.num_qubits}-qubit reference"
        )
    code = CodeSpec(reference_logical.num_qubits)
    overlap = np.vdot(code.basis_matrix() @ reference_logical.amplitudes, state.amplitudes)
    return float(abs(overlap) ** 2)


def logical_restriction(operator: Union[DenseOperator, np.ndarray], n: int) -> np.ndarray:
    """B†·U·B: the action of a physical operator on codeword coordinates."""
    matrix = operator.entries if isinstance(operator, DenseOperator) else np.asarray(operator, dtype=complex)
    basis = CodeSpec(n).basis_matrix()
    return basis.conj().T @ matrix @ basis


def stabilizer_expectation(state: StateVector) -> float:
    """⟨⊗X_j⟩; collective X reverses the amplitude vector."""
    amps = state.amplitudes
    return float(np.vdot(amps, amps[::-1]).real)


def post_jump_states(n: int, position: int) -> List[StateVector]:
    """Renormalized σ_i⁻|x⟩_L for every logical x."""
    return [apply_jump(codeword(n, x), position) for x in range(2 ** n)]


def code_projector_distance(state: StateVector, n: Optional[int] = None) -> float:
    """‖(I − P)·state‖, the weight outside the code space."""
    n = state.num_qubits - 1 if n is None else n
    amps = state.amplitudes
    return float(np.linalg.norm(amps - CodeSpec(n).projector() @ amps))
