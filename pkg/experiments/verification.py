"""
Exact identity and property checks behind the verify command.

Each check returns a CheckResult with the largest deviation it saw; a
check passes when that deviation is within its tolerance.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from coding.circuits import XX, ZZ
from coding.encoded_gates import (
    ControlCase,
    HamiltonianTerm,
    TermKind,
    bb_compatibility_check,
    check_code_preservation,
    controlled_phase_sequence,
    encoded_controlled_phase,
    encoded_rotation,
    euler_rotation,
    heisenberg_to_xx,
    heisenberg_to_zz,
    logical_action_distance,
    logical_cnot_sequence,
    logical_cnot_target,
    similarity_identity_deviation,
    su2_closure_preserves_weight,
    xy_to_xx,
)
from coding.jump_code import (
    QECC_TOLERANCE,
    apply_jump,
    encode,
    encode_direct,
    logical_fidelity,
    recover,
    syndrome_circuit,
    verify_qecc_condition,
)
from core.operators import (
    CNOT_MATRIX,
    CZ_MATRIX,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    embed_operator,
    evolution,
    operator_distance,
)
from core.states import StateVector, haar_random_state
from dynamics.decoupling import bb_period_factor, bb_period_operator
from dynamics.noise import NoiseModel

logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE = 1e-12
GATE_TOLERANCE = 1e-10
RANDOM_DRAWS = 50


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one verification check."""

    name: str
    max_deviation: float
    tolerance: float
    passed: bool
    detail: str = ''

    def to_dict(self) -> Dict:
        return asdict(self)


def _result(name: str, deviation: float, tolerance: float, detail: str = '') -> CheckResult:
    deviation = float(deviation)
    return CheckResult(name, deviation, tolerance, bool(deviation <= tolerance), detail)


def check_bb_period_identity(rng: np.random.Generator) -> CheckResult:
    """One BB period equals exp(-(T_c/4)·Σκ)·I for random rates and periods."""
    worst = 0.0
    for num_qubits in range(1, 5):
        for _ in range(20):
            noise = NoiseModel(tuple(rng.uniform(0.0, 5.0, num_qubits)))
            period = float(rng.uniform(0.01, 0.5))
            u = bb_period_operator(noise, period).entries
            expected = bb_period_factor(noise, period) * np.eye(2 ** num_qubits)
            worst = max(worst, float(np.max(np.abs(u - expected))))
    return _result('bb_period_identity', worst, IDENTITY_TOLERANCE, 'N=1..4, 20 rate draws each')


def check_qecc_condition() -> CheckResult:
    worst = 0.0
    elements = 0
    for n in range(1, 5):
        report = verify_qecc_condition(n)
        worst = max(worst, report.max_deviation)
        elements += report.num_elements
    return _result('qecc_condition', worst, QECC_TOLERANCE, f'{elements} matrix elements, n=1..4')


def check_recovery_exactness(rng: np.random.Generator) -> CheckResult:
    """Jump then recover returns the encoded state for n=2, every position."""
    n = 2
    worst = 0.0
    # a|00⟩ + b|01⟩ + c|10⟩ + d|11⟩ with distinct amplitudes
    worked = StateVector(n, np.array([1.0, 2.0, 3.0, 4.0], dtype=complex) / np.sqrt(30.0))
    states = [worked] + [haar_random_state(n, rng) for _ in range(100)]
    for logical in states:
        encoded = encode(logical)
        for position in range(1, n + 2):
            restored = recover(apply_jump(encoded, position), position)
            worst = max(worst, 1.0 - logical_fidelity(restored, logical))
    return _result('recovery_exactness', worst, IDENTITY_TOLERANCE, f'{len(states)} logical states')


def check_encoder_agreement(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for n in range(1, 4):
        for _ in range(10):
            logical = haar_random_state(n, rng)
            diff = encode(logical).amplitudes - encode_direct(logical).amplitudes
            worst = max(worst, float(np.max(np.abs(diff))))
    return _result('encoder_agreement', worst, IDENTITY_TOLERANCE)


def check_controlled_phase() -> CheckResult:
    deviation = operator_distance(controlled_phase_sequence(1, 2, 2).unitary(), CZ_MATRIX)
    n = 2
    encoded = logical_action_distance(encoded_controlled_phase(n, 1, 2), CZ_MATRIX, n)
    return _result('controlled_phase', max(deviation, encoded), GATE_TOLERANCE, 'bare and encoded')


def check_xy_to_xx(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for _ in range(RANDOM_DRAWS):
        theta = float(rng.uniform(-np.pi, np.pi))
        target = embed_operator(evolution(XX, theta).entries, (2, 3), 3)
        worst = max(worst, operator_distance(xy_to_xx(1, 2, 3, theta, 3).unitary(), target))
    return _result('xy_to_xx', worst, GATE_TOLERANCE, f'{RANDOM_DRAWS} angles')


def check_heisenberg_to_xx(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for _ in range(RANDOM_DRAWS):
        t = float(rng.uniform(-2.0, 2.0))
        coupling = float(rng.uniform(0.1, 2.0))
        target = embed_operator(evolution(XX, 2.0 * t * coupling).entries, (2, 3), 3)
        worst = max(worst, operator_distance(heisenberg_to_xx(1, 2, 3, t, coupling, 3).unitary(), target))
    return _result('heisenberg_to_xx', worst, GATE_TOLERANCE, f'{RANDOM_DRAWS} draws')


def check_heisenberg_to_zz(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for _ in range(RANDOM_DRAWS):
        t = float(rng.uniform(-2.0, 2.0))
        coupling = float(rng.uniform(0.1, 2.0))
        target = evolution(ZZ, 2.0 * t * coupling)
        worst = max(worst, operator_distance(heisenberg_to_zz(1, 2, t, coupling, 2).unitary(), target))
    return _result('heisenberg_to_zz', worst, GATE_TOLERANCE, f'{RANDOM_DRAWS} draws')


def _random_axis(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def check_euler_reconstruction(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for _ in range(RANDOM_DRAWS):
        axis = _random_axis(rng)
        omega = float(rng.uniform(-np.pi, np.pi))
        target = evolution(axis[0] * PAULI_X + axis[1] * PAULI_Y + axis[2] * PAULI_Z, omega)
        worst = max(worst, operator_distance(euler_rotation(axis, omega).unitary(), target))
    return _result('euler_reconstruction', worst, GATE_TOLERANCE, f'{RANDOM_DRAWS} axes')


def check_encoded_rotation(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    n = 2
    for _ in range(RANDOM_DRAWS):
        axis = _random_axis(rng)
        omega = float(rng.uniform(-np.pi, np.pi))
        i = int(rng.integers(1, n + 1))
        single = evolution(axis[0] * PAULI_X + axis[1] * PAULI_Y + axis[2] * PAULI_Z, omega).entries
        target = embed_operator(single, (i,), n).entries
        worst = max(worst, logical_action_distance(encoded_rotation(n, i, axis, omega), target, n))
    return _result('encoded_rotation', worst, GATE_TOLERANCE, f'{RANDOM_DRAWS} draws, n=2')


def check_logical_cnot() -> CheckResult:
    """Logical CNOT in every control case, on n=2 and n=3."""
    worst = 0.0
    for n in (2, 3):
        target = logical_cnot_target(n, 1, 2)
        for case in ControlCase:
            worst = max(worst, logical_action_distance(logical_cnot_sequence(1, 2, case, n), target, n))
    return _result('logical_cnot', worst, GATE_TOLERANCE, 'cases 1-3')


def check_code_preservation_of_sequences(rng: np.random.Generator) -> CheckResult:
    """Every emitted encoded sequence keeps the code space invariant."""
    n = 2
    sequences = [encoded_controlled_phase(n, 1, 2)]
    sequences += [logical_cnot_sequence(1, 2, case, n) for case in ControlCase]
    sequences += [encoded_rotation(n, 1, _random_axis(rng), float(rng.uniform(-np.pi, np.pi)))
                  for _ in range(5)]
    failures = [s.name for s in sequences if not check_code_preservation(s.unitary(), n)]
    return _result('code_preservation', float(len(failures)), 0.0,
                   'failing: ' + ', '.join(failures) if failures else f'{len(sequences)} sequences')


def check_bb_commutation() -> CheckResult:
    """ZZ, XX, XY and Heisenberg couplings commute with the collective pulse."""
    kinds = (TermKind.ZZ, TermKind.XX, TermKind.XY, TermKind.HEISENBERG)
    failures = [k.value for k in kinds if not bb_compatibility_check(HamiltonianTerm(k, (1, 2)), 3)]
    return _result('bb_commutation', float(len(failures)), 0.0,
                   'failing: ' + ', '.join(failures) if failures else 'all interaction terms')


def check_similarity_identity(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for _ in range(10):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        a = 0.5j * (a + a.conj().T)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        worst = max(worst, similarity_identity_deviation(q, a))
    return _result('similarity_identity', worst, GATE_TOLERANCE)


def check_su2_closure() -> CheckResult:
    passed = su2_closure_preserves_weight()
    return _result('su2_closure_weight', 0.0 if passed else 1.0, 0.0, 'XY closure on three qubits')


def check_syndrome_variants() -> CheckResult:
    worst = 0.0
    for n in range(1, 4):
        standard = syndrome_circuit(n, 'standard').unitary()
        transversal = syndrome_circuit(n, 'transversal').unitary()
        worst = max(worst, float(np.max(np.abs(standard.entries - transversal.entries))))
    return _result('syndrome_variants', worst, IDENTITY_TOLERANCE)


def check_cnot_embedding() -> CheckResult:
    # CNOT_{2→1} on two qubits is SWAP·CNOT·SWAP
    swap = np.eye(4)[[0, 2, 1, 3]]
    deviation = float(np.max(np.abs(embed_operator(CNOT_MATRIX, (2, 1), 2).entries - swap @ CNOT_MATRIX @ swap)))
    return _result('cnot_embedding', deviation, IDENTITY_TOLERANCE)


_RANDOMIZED: List[Tuple[str, Callable[[np.random.Generator], CheckResult]]] = [
    ('bb_period_identity', check_bb_period_identity),
    ('recovery_exactness', check_recovery_exactness),
    ('encoder_agreement', check_encoder_agreement),
    ('xy_to_xx', check_xy_to_xx),
    ('heisenberg_to_xx', check_heisenberg_to_xx),
    ('heisenberg_to_zz', check_heisenberg_to_zz),
    ('euler_reconstruction', check_euler_reconstruction),
    ('encoded_rotation', check_encoded_rotation),
    ('code_preservation', check_code_preservation_of_sequences),
    ('similarity_identity', check_similarity_identity),
]

_FIXED: List[Tuple[str, Callable[[], CheckResult]]] = [
    ('qecc_condition', check_qecc_condition),
    ('controlled_phase', check_controlled_phase),
    ('logical_cnot', check_logical_cnot),
    ('bb_commutation', check_bb_commutation),
    ('su2_closure_weight', check_su2_closure),
    ('syndrome_variants', check_syndrome_variants),
    ('cnot_embedding', check_cnot_embedding),
]

CHECK_NAMES = tuple(name for name, _ in _RANDOMIZED + _FIXED)


def run_verification(seed: int = 0, only: Optional[List[str]] = None) -> List[CheckResult]:
    """
    Run the identity suite.

    Args:
        seed: Seed of the random parameter draws; each check gets its own
            generator so results do not depend on which checks run
        only: Restrict to these check names

    Returns:
        CheckResult per check, in suite order
    """
    results = []
    for index, (name, check) in enumerate(_RANDOMIZED):
        if only is None or name in only:
            results.append(check(np.random.default_rng([seed, index])))
    for name, check in _FIXED:
        if only is None or name in only:
            results.append(check())
    for result in results:
        level = logging.DEBUG if result.passed else logging.WARNING
        logger.log(level, f"check {result.name}: deviation {result.max_deviation:.3e} "
                          f"(tolerance {result.tolerance:.0e}) {'ok' if result.passed else 'FAILED'}")
    return results
