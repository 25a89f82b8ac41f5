"""
Encoded universality on the jump code from natural two-body Hamiltonians.

Logical Paulis are Z̄_i = Z_i Z_{n+1} and X̄_i = X_i. Three control cases are
supported, each with its own native set:

    Case 1: Z_i, X_i, X_iX_j (Ising-like)
    Case 2: Z_i, X_i, XY coupling, plus instantaneous X_iX_j pulses
    Case 3: Z_i, X_i, Heisenberg coupling, plus X_iX_j pulses

lower_to_case() rewrites abstract sequences into a case's native set.
"""

import logging
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import CaseError, DimensionMismatchError, QubitIndexError
from core.operators import (
    CNOT_MATRIX,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DenseOperator,
    commutator,
    embed_operator,
    embed_single_qubit,
    evolution,
    expm,
    operator_distance,
)
from dynamics.decoupling import collective_x
from utils.validation import Validator

from .circuits import HEISENBERG_GENERATOR, XX, XY_GENERATOR, YY, ZZ, Circuit, GateOp
from .jump_code import CodeSpec, logical_restriction

logger = logging.getLogger(__name__)

CODE_PRESERVATION_TOLERANCE = 1e-10
COMMUTATION_TOLERANCE = 1e-13

QUARTER_PI = np.pi / 4


class ControlCase(IntEnum):
    ISING = 1
    XY = 2
    HEISENBERG = 3

    @property
    def native_gates(self) -> FrozenSet[str]:
        return NATIVE_GATES[self]


NATIVE_GATES: Dict[ControlCase, FrozenSet[str]] = {
    ControlCase.ISING: frozenset({'evolve_Z', 'evolve_X', 'evolve_XX'}),
    ControlCase.XY: frozenset({'evolve_Z', 'evolve_X', 'evolve_XY', 'pulse_XX'}),
    ControlCase.HEISENBERG: frozenset({'evolve_Z', 'evolve_X', 'evolve_HEIS', 'pulse_XX'}),
}


class TermKind(str, Enum):
    SINGLE_Z = 'single_Z'
    SINGLE_X = 'single_X'
    ZZ = 'ZZ'
    XX = 'XX'
    XY = 'XY'
    HEISENBERG = 'Heisenberg'

    @property
    def arity(self) -> int:
        return 1 if self in (TermKind.SINGLE_Z, TermKind.SINGLE_X) else 2


_TERM_MATRICES = {
    TermKind.SINGLE_Z: PAULI_Z,
    TermKind.SINGLE_X: PAULI_X,
    TermKind.ZZ: ZZ,
    TermKind.XX: XX,
    TermKind.XY: XX + YY,
    TermKind.HEISENBERG: HEISENBERG_GENERATOR,
}


@dataclass(frozen=True)
class HamiltonianTerm:
    """coupling × one of Z_i, X_i, Z_iZ_j, X_iX_j, (XX+YY)_ij, (XX+YY+ZZ)_ij."""

    kind: TermKind
    qubits: Tuple[int, ...]
    coupling: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', TermKind(self.kind))
        object.__setattr__(self, 'qubits', tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.kind.arity:
            raise QubitIndexError(f"{self.kind.value} term needs {self.kind.arity} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits) or min(self.qubits) < 1:
            raise QubitIndexError(f"qubits must be distinct and >= 1, got {self.qubits}")
        Validator.require(Validator.validate_finite(self.coupling, 'coupling'), 'coupling')

    def local_matrix(self) -> np.ndarray:
        return self.coupling * _TERM_MATRICES[self.kind]

    def matrix(self, num_qubits: int) -> DenseOperator:
        return embed_operator(self.local_matrix(), self.qubits, num_qubits)

    def evolution(self, duration: float) -> GateOp:
        """exp(-i·duration·term) as a gate record."""
        c = self.coupling * duration
        if self.kind is TermKind.SINGLE_Z:
            return GateOp('evolve_Z', self.qubits, c)
        if self.kind is TermKind.SINGLE_X:
            return GateOp('evolve_X', self.qubits, c)
        if self.kind is TermKind.ZZ:
            return GateOp('evolve_ZZ', self.qubits, c)
        if self.kind is TermKind.XX:
            return GateOp('evolve_XX', self.qubits, c)
        if self.kind is TermKind.XY:
            # J(XX+YY) = 2J·T
            return GateOp('evolve_XY', self.qubits, 2.0 * c)
        return GateOp('evolve_HEIS', self.qubits, c)


@dataclass(frozen=True)
class GateSequence(Circuit):
    """A circuit tagged with the control case it is realizable in.

    With case set, every gate must belong to that case's native set.
    """

    case: Optional[ControlCase] = None

    def __post_init__(self):
        super().__post_init__()
        if self.case is not None:
            object.__setattr__(self, 'case', ControlCase(self.case))
            foreign = sorted({op.gate for op in self.ops} - self.case.native_gates)
            if foreign:
                raise CaseError(f"gates {foreign} are not native to case {int(self.case)}")

    def natively_realizable(self, case: ControlCase) -> bool:
        return all(op.gate in ControlCase(case).native_gates for op in self.ops)

    def to_dict(self) -> Dict:
        data = super().to_dict()
        data['case'] = None if self.case is None else int(self.case)
        return data


def _sequence(ops: Sequence[GateOp], num_qubits: Optional[int], case: Optional[ControlCase],
              name: str) -> GateSequence:
    if num_qubits is None:
        num_qubits = max(max(op.qubits) for op in ops)
    return GateSequence(num_qubits, tuple(ops), name, case)


def _require_distinct(*qubits: int) -> None:
    if len(set(qubits)) != len(qubits):
        raise QubitIndexError(f"qubits {qubits} must be distinct")


def encoded_pauli(n: int, which: str, i: int) -> DenseOperator:
    """
    Physical operator for a logical Pauli on logical qubit i.

    Args:
        n: Logical qubits
        which: 'Z' for Z̄_i = Z_i Z_{n+1}, 'X' for X̄_i = X_i
        i: Logical qubit, 1..n
    """
    Validator.require(Validator.validate_qubit_index(i, n), 'i')
    if which == 'Z':
        return embed_operator(ZZ, (i, n + 1), n + 1)
    if which == 'X':
        return embed_single_qubit(PAULI_X, i, n + 1)
    raise ValueError(f"which must be 'Z' or 'X', got {which!r}")


def encoded_generator_op(n: int, which: str, i: int, angle: float) -> GateOp:
    """exp(-i·angle·P̄_i) as a native gate record."""
    Validator.require(Validator.validate_qubit_index(i, n), 'i')
    if which == 'Z':
        return GateOp('evolve_ZZ', (i, n + 1), angle)
    if which == 'X':
        return GateOp('evolve_X', (i,), angle)
    raise ValueError(f"which must be 'Z' or 'X', got {which!r}")


def conjugate_generator(a: Union[DenseOperator, np.ndarray], b: Union[DenseOperator, np.ndarray],
                        phi: float) -> DenseOperator:
    """e^{-iφB} A e^{iφB}.

    For spin generators J = σ/2 this rotates J_x into J_x cos φ + J_y sin φ
    when B = J_z.
    """
    a = a.entries if isinstance(a, DenseOperator) else np.asarray(a, dtype=complex)
    b = b.entries if isinstance(b, DenseOperator) else np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    u = evolution(b, phi).entries
    return DenseOperator.from_matrix(u @ a @ u.conj().T)


def euler_angles(axis: Sequence[float], omega: float) -> Tuple[float, float, float]:
    """
    (α, θ, β) with e^{-iω n̂·σ} = e^{-iβZ} e^{-iθX} e^{-iαZ} up to global phase.

    θ is taken in [0, π/2]. When θ is 0 or π/2 one combination of α and β is
    free and α is set to 0.
    """
    Validator.require(Validator.validate_unit_axis(axis), 'axis')
    nx, ny, nz = (float(c) for c in axis)
    target = evolution(nx * PAULI_X + ny * PAULI_Y + nz * PAULI_Z, omega).entries
    target = target / np.sqrt(np.linalg.det(target))
    a, b = target[0, 0], target[0, 1]
    theta = float(np.arctan2(abs(b), abs(a)))
    degenerate = 1e-12
    if abs(b) <= degenerate:
        return 0.0, 0.0, float(-np.angle(a))
    if abs(a) <= degenerate:
        return 0.0, theta, float(-(np.angle(b) + np.pi / 2))
    total = -np.angle(a)
    difference = np.angle(b) + np.pi / 2
    alpha = 0.5 * (total + difference)
    beta = 0.5 * (total - difference)
    return float(alpha), theta, float(beta)


def euler_rotation(axis: Sequence[float], omega: float, qubit: int = 1,
                   num_qubits: Optional[int] = None) -> GateSequence:
    """Z-X-Z evolutions realizing e^{-iω n̂·σ} on one qubit."""
    alpha, theta, beta = euler_angles(axis, omega)
    ops = [
        GateOp('evolve_Z', (qubit,), alpha),
        GateOp('evolve_X', (qubit,), theta),
        GateOp('evolve_Z', (qubit,), beta),
    ]
    return _sequence(ops, num_qubits or qubit, None, 'euler_rotation')


def encoded_rotation(n: int, i: int, axis: Sequence[float], omega: float) -> GateSequence:
    """Euler rotation of logical qubit i through Z̄_i and X̄_i."""
    alpha, theta, beta = euler_angles(axis, omega)
    ops = [
        encoded_generator_op(n, 'Z', i, alpha),
        encoded_generator_op(n, 'X', i, theta),
        encoded_generator_op(n, 'Z', i, beta),
    ]
    return _sequence(ops, n + 1, None, f'encoded_rotation_{i}')


def encoded_hadamard_ops(n: int, i: int) -> List[GateOp]:
    """e^{-iπ/4 Z̄} e^{-iπ/4 X̄} e^{-iπ/4 Z̄} = -i·H̄ on logical qubit i."""
    return [
        encoded_generator_op(n, 'Z', i, QUARTER_PI),
        encoded_generator_op(n, 'X', i, QUARTER_PI),
        encoded_generator_op(n, 'Z', i, QUARTER_PI),
    ]


def controlled_phase_sequence(i: int, j: int, num_qubits: Optional[int] = None) -> GateSequence:
    """CP_ij = e^{-iπ/4(Z_i+Z_j)} e^{-i3π/4 Z_iZ_j} up to global phase."""
    _require_distinct(i, j)
    ops = [
        GateOp('evolve_ZZ', (i, j), 3 * QUARTER_PI),
        GateOp('evolve_Z', (i,), QUARTER_PI),
        GateOp('evolve_Z', (j,), QUARTER_PI),
    ]
    return _sequence(ops, num_qubits, None, 'controlled_phase')


def encoded_controlled_phase(n: int, i: int, j: int) -> GateSequence:
    """Logical CP between logical qubits i and j using Z̄_iZ̄_j = Z_iZ_j."""
    _require_distinct(i, j)
    for q in (i, j):
        Validator.require(Validator.validate_qubit_index(q, n), 'qubits')
    ops = [
        GateOp('evolve_ZZ', (i, j), 3 * QUARTER_PI),
        encoded_generator_op(n, 'Z', i, QUARTER_PI),
        encoded_generator_op(n, 'Z', j, QUARTER_PI),
    ]
    return _sequence(ops, n + 1, None, 'encoded_controlled_phase')


def xy_to_xx(i: int, j: int, k: int, theta: float, num_qubits: Optional[int] = None) -> GateSequence:
    """X_iX_j e^{-iθT_jk} X_iX_j e^{-iθT_jk} = e^{-iθX_jX_k}."""
    _require_distinct(i, j, k)
    ops = [
        GateOp('evolve_XY', (j, k), theta),
        GateOp('pulse_XX', (i, j)),
        GateOp('evolve_XY', (j, k), theta),
        GateOp('pulse_XX', (i, j)),
    ]
    return _sequence(ops, num_qubits, ControlCase.XY, 'xy_to_xx')


def heisenberg_to_xx(i: int, j: int, k: int, t: float, coupling: float = 1.0,
                     num_qubits: Optional[int] = None) -> GateSequence:
    """X_iX_j e^{-itH_jk} X_iX_j e^{-itH_jk} = e^{-2itJ X_jX_k}."""
    _require_distinct(i, j, k)
    step = HamiltonianTerm(TermKind.HEISENBERG, (j, k), coupling).evolution(t)
    ops = [step, GateOp('pulse_XX', (i, j)), step, GateOp('pulse_XX', (i, j))]
    return _sequence(ops, num_qubits, ControlCase.HEISENBERG, 'heisenberg_to_xx')


def heisenberg_to_zz(i: int, j: int, t: float, coupling: float = 1.0,
                     num_qubits: Optional[int] = None) -> GateSequence:
    """e^{-itH} e^{-iπ/2 Z_i} e^{-itH} e^{-iπ/2 Z_i} = e^{-2itJ Z_iZ_j} up to phase."""
    _require_distinct(i, j)
    step = HamiltonianTerm(TermKind.HEISENBERG, (i, j), coupling).evolution(t)
    flip = GateOp('evolve_Z', (i,), np.pi / 2)
    ops = [flip, step, flip, step]
    return _sequence(ops, num_qubits, ControlCase.HEISENBERG, 'heisenberg_to_zz')


def _spare_qubit(num_qubits: int, busy: Sequence[int]) -> int:
    for q in range(1, num_qubits + 1):
        if q not in busy:
            return q
    raise CaseError(f"no auxiliary qubit available on a {num_qubits}-qubit register")


def _hadamard_like(qubit: int) -> List[GateOp]:
    # e^{-iπ/4 Z} e^{-iπ/4 X} e^{-iπ/4 Z} = -i·H
    return [
        GateOp('evolve_Z', (qubit,), QUARTER_PI),
        GateOp('evolve_X', (qubit,), QUARTER_PI),
        GateOp('evolve_Z', (qubit,), QUARTER_PI),
    ]


def _lower_xx(j: int, k: int, angle: float, case: ControlCase, num_qubits: int) -> List[GateOp]:
    if case is ControlCase.ISING:
        return [GateOp('evolve_XX', (j, k), angle)]
    spare = _spare_qubit(num_qubits, (j, k))
    if case is ControlCase.XY:
        return list(xy_to_xx(spare, j, k, angle, num_qubits).ops)
    return list(heisenberg_to_xx(spare, j, k, angle / 2.0, 1.0, num_qubits).ops)


def _lower_op(op: GateOp, case: ControlCase, num_qubits: int) -> List[GateOp]:
    if op.gate in case.native_gates:
        return [op]
    if op.gate == 'evolve_XX':
        return _lower_xx(op.qubits[0], op.qubits[1], op.angle, case, num_qubits)
    if op.gate == 'evolve_ZZ':
        j, k = op.qubits
        if case is ControlCase.HEISENBERG:
            return list(heisenberg_to_zz(j, k, op.angle / 2.0, 1.0, num_qubits).ops)
        # Z_jZ_k = (H⊗H) X_jX_k (H⊗H), H from native Z and X rotations
        frame = _hadamard_like(j) + _hadamard_like(k)
        return frame + _lower_xx(j, k, op.angle, case, num_qubits) + frame
    if op.gate == 'pulse_XX' and case is ControlCase.ISING:
        # X⊗X = i·e^{-iπ/2 XX}
        return [GateOp('evolve_XX', op.qubits, np.pi / 2)]
    raise CaseError(f"gate {op.gate} cannot be realized in case {int(case)}")


def lower_to_case(sequence: Circuit, case: Union[ControlCase, int],
                  num_qubits: Optional[int] = None) -> GateSequence:
    """
    Rewrite a sequence into the native set of a control case.

    The result equals the input up to global phase.

    Raises:
        CaseError: if a gate has no rewrite in the case, or an auxiliary
            qubit is needed on a register of fewer than three qubits
    """
    case = ControlCase(case)
    num_qubits = num_qubits or sequence.num_qubits
    ops: List[GateOp] = []
    for op in sequence.ops:
        ops.extend(_lower_op(op, case, num_qubits))
    name = f"{sequence.name}_case{int(case)}" if sequence.name else f"case{int(case)}"
    return GateSequence(num_qubits, tuple(ops), name, case)


def logical_cnot_sequence(i: int, j: int, case: Union[ControlCase, int],
                          n: Optional[int] = None) -> GateSequence:
    """
    Logical CNOT (control i, target j) on the code as H̄_j · CP̄_ij · H̄_j,
    lowered to a control case.
    """
    _require_distinct(i, j)
    n = n or max(i, j)
    ops = encoded_hadamard_ops(n, j) + list(encoded_controlled_phase(n, i, j).ops) + encoded_hadamard_ops(n, j)
    abstract = GateSequence(n + 1, tuple(ops), f'logical_cnot_{i}_{j}')
    return lower_to_case(abstract, case, n + 1)


def logical_cnot_target(n: int, i: int, j: int) -> np.ndarray:
    """CNOT_{i→j} on n bare logical qubits."""
    return embed_operator(CNOT_MATRIX, (i, j), n).entries


def check_code_preservation(op: Union[DenseOperator, np.ndarray], n: int) -> bool:
    """True iff ‖P·op·(I − P)‖_max ≤ 1e-10 for the code projector P."""
    matrix = op.entries if isinstance(op, DenseOperator) else np.asarray(op, dtype=complex)
    proj = CodeSpec(n).projector()
    if matrix.shape != proj.shape:
        raise DimensionMismatchError(f"operator shape {matrix.shape} does not match n={n}")
    leak = proj @ matrix @ (np.eye(proj.shape[0]) - proj)
    return float(np.max(np.abs(leak))) <= CODE_PRESERVATION_TOLERANCE


def bb_compatibility_check(term: HamiltonianTerm, num_qubits: int) -> bool:
    """True iff the term commutes with the collective X pulse."""
    comm = commutator(term.matrix(num_qubits), collective_x(num_qubits))
    return float(np.max(np.abs(comm))) <= COMMUTATION_TOLERANCE


def op_bb_compatible(op: GateOp, num_qubits: int) -> bool:
    """Gate-record form of bb_compatibility_check."""
    if op.is_parametric:
        matrix = embed_operator(op.generator(), op.qubits, num_qubits)
    else:
        matrix = op.unitary(num_qubits)
    comm = commutator(matrix, collective_x(num_qubits))
    return float(np.max(np.abs(comm))) <= COMMUTATION_TOLERANCE


def hamming_weight_preserved(op: Union[DenseOperator, np.ndarray]) -> bool:
    """True iff op has no matrix element between basis states of different weight."""
    matrix = op.entries if isinstance(op, DenseOperator) else np.asarray(op, dtype=complex)
    weights = np.array([bin(b).count('1') for b in range(matrix.shape[0])])
    mixed = weights[:, None] != weights[None, :]
    return not np.any(matrix[mixed])


def lie_closure(generators: Sequence[np.ndarray], max_rounds: int = 8, tol: float = 1e-10) -> List[np.ndarray]:
    """Orthonormal basis of the real Lie algebra generated by anti-Hermitian iG."""
    basis: List[np.ndarray] = []

    def add(matrix: np.ndarray) -> bool:
        vec = matrix.reshape(-1).copy()
        for b in basis:
            vec = vec - np.vdot(b.reshape(-1), vec) * b.reshape(-1)
        norm = np.linalg.norm(vec)
        if norm <= tol:
            return False
        basis.append((vec / norm).reshape(matrix.shape))
        return True

    for g in generators:
        add(1j * np.asarray(g, dtype=complex))
    for _ in range(max_rounds):
        grew = False
        current = list(basis)
        for a in current:
            for b in current:
                grew |= add(a @ b - b @ a)
        if not grew:
            break
    return basis


def su2_closure_preserves_weight() -> bool:
    """The algebra generated by T_12, T_13 and -Z_1Z_2T_23 preserves excitation number."""
    t12 = embed_operator(XY_GENERATOR, (1, 2), 3).entries
    t13 = embed_operator(XY_GENERATOR, (1, 3), 3).entries
    t23 = embed_operator(XY_GENERATOR, (2, 3), 3).entries
    z1z2 = embed_operator(ZZ, (1, 2), 3).entries
    closure = lie_closure([t12, t13, -z1z2 @ t23])
    return all(hamming_weight_preserved(element) for element in closure)


def logical_action_distance(sequence: Circuit, target_logical: np.ndarray, n: int) -> float:
    """Phase-insensitive distance between B†UB and a logical target."""
    return operator_distance(logical_restriction(sequence.unitary(), n), target_logical)


def similarity_identity_deviation(u: np.ndarray, a: np.ndarray) -> float:
    """‖U e^A U† − e^{UAU†}‖_max."""
    left = u @ expm(a).entries @ u.conj().T
    right = expm(u @ a @ u.conj().T).entries
    return float(np.max(np.abs(left - right)))
