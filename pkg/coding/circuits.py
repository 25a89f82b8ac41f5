"""
Gate records and circuits with a JSON gate-list format.

A circuit is an ordered list of {gate, qubits, angle} records applied in
list order. Evolutions evolve_K with angle θ mean exp(-iθ·G_K).
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from core.operators import (
    CNOT_MATRIX,
    CZ_MATRIX,
    HADAMARD,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DenseOperator,
    apply,
    embed_operator,
    evolution,
)
from core.states import StateVector
from utils.validation import ValidationError, Validator

logger = logging.getLogger(__name__)

XX = np.kron(PAULI_X, PAULI_X)
YY = np.kron(PAULI_Y, PAULI_Y)
ZZ = np.kron(PAULI_Z, PAULI_Z)

# T = ½(XX + YY)
XY_GENERATOR = 0.5 * (XX + YY)
HEISENBERG_GENERATOR = XX + YY + ZZ

# Fixed gates: name -> matrix
FIXED_GATES: Dict[str, np.ndarray] = {
    'H': HADAMARD,
    'X': PAULI_X,
    'Y': PAULI_Y,
    'Z': PAULI_Z,
    'CNOT': CNOT_MATRIX,
    'CZ': CZ_MATRIX,
    'pulse_XX': XX,
}

# Parametric evolutions: name -> generator
GENERATORS: Dict[str, np.ndarray] = {
    'evolve_Z': PAULI_Z,
    'evolve_X': PAULI_X,
    'evolve_Y': PAULI_Y,
    'evolve_ZZ': ZZ,
    'evolve_XX': XX,
    'evolve_XY': XY_GENERATOR,
    'evolve_HEIS': HEISENBERG_GENERATOR,
}


def gate_arity(name: str) -> int:
    matrix = FIXED_GATES.get(name)
    if matrix is None:
        matrix = GENERATORS.get(name)
    if matrix is None:
        raise ValidationError(f"unknown gate {name!r}", 'gate')
    return int(np.log2(matrix.shape[0]))


@dataclass(frozen=True)
class GateOp:
    """One gate record: a fixed gate or an evolution by angle."""

    gate: str
    qubits: Tuple[int, ...]
    angle: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'qubits', tuple(int(q) for q in self.qubits))
        arity = gate_arity(self.gate)
        if len(self.qubits) != arity:
            raise ValidationError(f"{self.gate} acts on {arity} qubit(s), got {self.qubits}", 'qubits')
        if len(set(self.qubits)) != arity or min(self.qubits) < 1:
            raise ValidationError(f"qubits must be distinct and >= 1, got {self.qubits}", 'qubits')
        if self.is_parametric:
            if self.angle is None:
                raise ValidationError(f"{self.gate} needs an angle", 'angle')
            Validator.require(Validator.validate_finite(self.angle, 'angle'), 'angle')
            object.__setattr__(self, 'angle', float(self.angle))
        elif self.angle is not None:
            raise ValidationError(f"{self.gate} takes no angle", 'angle')

    @property
    def is_parametric(self) -> bool:
        return self.gate in GENERATORS

    @property
    def is_pulse(self) -> bool:
        return self.gate.startswith('pulse_')

    def generator(self) -> np.ndarray:
        if not self.is_parametric:
            raise ValueError(f"{self.gate} is not an evolution")
        return GENERATORS[self.gate]

    def local_matrix(self) -> np.ndarray:
        if self.is_parametric:
            return evolution(self.generator(), self.angle).entries
        return FIXED_GATES[self.gate]

    def unitary(self, num_qubits: int) -> DenseOperator:
        return embed_operator(self.local_matrix(), self.qubits, num_qubits)

    def to_dict(self) -> Dict[str, Any]:
        return {'gate': self.gate, 'qubits': list(self.qubits), 'angle': self.angle}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'GateOp':
        return cls(data['gate'], tuple(data['qubits']), data.get('angle'))


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on a fixed register; the first gate acts first."""

    num_qubits: int
    ops: Tuple[GateOp, ...] = field(default_factory=tuple)
    name: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'ops', tuple(self.ops))
        for index, op in enumerate(self.ops):
            if max(op.qubits) > self.num_qubits:
                raise ValidationError(
                    f"gate {op.gate} on {op.qubits} exceeds {self.num_qubits} qubits", f"gates.{index}.qubits"
                )

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self) -> Iterator[GateOp]:
        return iter(self.ops)

    def unitary(self) -> DenseOperator:
        result = np.eye(2 ** self.num_qubits, dtype=complex)
        for op in self.ops:
            result = op.unitary(self.num_qubits).entries @ result
        return DenseOperator(self.num_qubits, result)

    def apply(self, state: StateVector) -> StateVector:
        for op in self.ops:
            state = apply(op.unitary(self.num_qubits), state)
        return state

    def gate_names(self) -> List[str]:
        return [op.gate for op in self.ops]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'num_qubits': self.num_qubits,
            'gates': [op.to_dict() for op in self.ops],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Circuit':
        ops = tuple(GateOp.from_dict(g) for g in data.get('gates', []))
        return cls(int(data['num_qubits']), ops, data.get('name', ''))

    @classmethod
    def from_json(cls, text: str) -> 'Circuit':
        return cls.from_dict(json.loads(text))
