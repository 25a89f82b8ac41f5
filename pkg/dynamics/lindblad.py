"""
Fixed-step RK4 integration of the spontaneous-emission master equation

    dρ/dt = Σ_i κ_i (σ_i⁻ ρ σ_i⁺ − ½{σ_i⁺σ_i⁻, ρ})

with instantaneous pulses and unitaries applied as conjugations. This is the
ensemble-average oracle for the trajectory engine.
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import DimensionMismatchError, StepSizeError
from core.operators import DenseOperator, excitation_bits
from core.states import DensityMatrix

from .decoupling import PulseSchedule
from .noise import NoiseModel

logger = logging.getLogger(__name__)

# dt·max κ bound for the fixed-step integrator
MAX_RATE_STEP = 0.01

OperatorLike = Union[DenseOperator, np.ndarray]
JumpFeedback = Mapping[int, Sequence[Tuple[float, OperatorLike]]]

_PULSE, _UNITARY = 0, 1


def _matrix(op: OperatorLike) -> np.ndarray:
    return op.entries if isinstance(op, DenseOperator) else np.asarray(op, dtype=complex)


class Dissipator:
    """Right-hand side of the master equation on arrays of shape (..., d, d).

    With jump_feedback, the jump term of qubit i becomes
    w_0·σ_iρσ_i† + Σ_j p_j R_j σ_iρσ_i† R_j†, where w_0 = 1 − Σ_j p_j. This
    models recovery applied immediately after each emission.
    """

    def __init__(self, noise: NoiseModel, num_qubits: int, jump_feedback: Optional[JumpFeedback] = None):
        noise.check_register(num_qubits)
        self.num_qubits = num_qubits
        self.dim = 2 ** num_qubits
        self.rates = noise.rate_array()
        self.decay = excitation_bits(num_qubits) @ self.rates
        self.feedback = self._prepare_feedback(jump_feedback or {})

    def _prepare_feedback(self, jump_feedback: JumpFeedback) -> Dict[int, Tuple[float, List[Tuple[float, np.ndarray]]]]:
        prepared = {}
        for qubit, branches in jump_feedback.items():
            if not 1 <= int(qubit) <= self.num_qubits:
                raise DimensionMismatchError(f"feedback for qubit {qubit} outside 1..{self.num_qubits}")
            entries = []
            for p, op in branches:
                matrix = _matrix(op)
                if matrix.shape != (self.dim, self.dim):
                    raise DimensionMismatchError(f"feedback operator shape {matrix.shape} for dimension {self.dim}")
                if p < 0:
                    raise ValueError("feedback probabilities must be nonnegative")
                entries.append((float(p), matrix))
            total = sum(p for p, _ in entries)
            if total > 1.0 + 1e-12:
                raise ValueError(f"feedback probabilities for qubit {qubit} sum to {total} > 1")
            prepared[int(qubit)] = (max(0.0, 1.0 - total), entries)
        return prepared

    def lower(self, rho: np.ndarray, qubit: int) -> np.ndarray:
        """σ_q⁻ ρ σ_q⁺ via index reshaping."""
        a, b = 2 ** (qubit - 1), 2 ** (self.num_qubits - qubit)
        lead = rho.shape[:-2]
        view = rho.reshape(lead + (a, 2, b, a, 2, b))
        out = np.zeros_like(view)
        out[..., :, 0, :, :, 0, :] = view[..., :, 1, :, :, 1, :]
        return out.reshape(rho.shape)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = -0.5 * (self.decay[:, None] * rho + rho * self.decay[None, :])
        for qubit, rate in enumerate(self.rates, start=1):
            if rate == 0.0:
                continue
            jumped = self.lower(rho, qubit)
            if qubit in self.feedback:
                weight, branches = self.feedback[qubit]
                term = weight * jumped
                for p, unitary in branches:
                    term = term + p * (unitary @ jumped @ unitary.conj().T)
                jumped = term
            out = out + rate * jumped
        return out


def _rk4_step(rhs: Dissipator, rho: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(rho)
    k2 = rhs(rho + 0.5 * h * k1)
    k3 = rhs(rho + 0.5 * h * k2)
    k4 = rhs(rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _resolve_step(noise: NoiseModel, duration: float, dt: Optional[float]) -> float:
    max_rate = noise.max_rate
    if dt is None:
        return MAX_RATE_STEP / max_rate if max_rate > 0 else max(duration, 1.0)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt * max_rate > MAX_RATE_STEP * (1.0 + 1e-9):
        raise StepSizeError(
            f"dt·max(rate) = {dt * max_rate:.4g} exceeds {MAX_RATE_STEP}; reduce dt"
        )
    return dt


def _timeline(duration: float, pulses: Optional[PulseSchedule],
              unitaries: Sequence[Tuple[float, OperatorLike]]) -> List[Tuple[float, int, int, Optional[np.ndarray]]]:
    events = []
    if pulses is not None:
        for m, t in enumerate(pulses.pulse_times(duration)):
            events.append((float(t), _PULSE, m, None))
    for k, (t, op) in enumerate(unitaries):
        if t < 0 or t > duration * (1.0 + 1e-12):
            raise ValueError(f"unitary time {t} outside [0, {duration}]")
        events.append((float(t), _UNITARY, k, _matrix(op)))
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    return events


def lindblad_integrate_batch(
    rhos: np.ndarray,
    num_qubits: int,
    duration: float,
    noise: NoiseModel,
    pulses: Optional[PulseSchedule] = None,
    dt: Optional[float] = None,
    unitaries: Sequence[Tuple[float, OperatorLike]] = (),
    jump_feedback: Optional[JumpFeedback] = None,
) -> np.ndarray:
    """
    Propagate a stack of density matrices of shape (K, d, d) together.

    Segments between event instants are split into equal substeps no longer
    than dt. At a shared instant the pulse is applied before unitaries.

    Raises:
        StepSizeError: if dt·max κ exceeds the bound
    """
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    rho = np.array(rhos, dtype=complex)
    dim = 2 ** num_qubits
    if rho.shape[-2:] != (dim, dim):
        raise DimensionMismatchError(f"density matrices of shape {rho.shape[-2:]} for {num_qubits} qubits")
    step = _resolve_step(noise, duration, dt)
    rhs = Dissipator(noise, num_qubits, jump_feedback)

    def evolve(state: np.ndarray, span: float) -> np.ndarray:
        nsteps = max(1, int(np.ceil(span / step - 1e-9)))
        h = span / nsteps
        for _ in range(nsteps):
            state = _rk4_step(rhs, state, h)
        return state

    t = 0.0
    for time, kind, _, matrix in _timeline(duration, pulses, unitaries):
        if time > t:
            rho = evolve(rho, time - t)
            t = time
        if kind == _PULSE:
            rho = np.ascontiguousarray(rho[..., ::-1, ::-1])
        else:
            rho = matrix @ rho @ matrix.conj().T
    if duration > t:
        rho = evolve(rho, duration - t)
    return rho


def lindblad_integrate(
    initial: DensityMatrix,
    duration: float,
    noise: NoiseModel,
    pulses: Optional[PulseSchedule] = None,
    dt: Optional[float] = None,
    unitaries: Sequence[Tuple[float, OperatorLike]] = (),
    jump_feedback: Optional[JumpFeedback] = None,
) -> DensityMatrix:
    """
    Integrate one density matrix over [0, duration].

    Args:
        initial: Starting state
        duration: Total time
        noise: Emission rates (the detector enters only through jump_feedback)
        pulses: Optional collective-X schedule
        dt: Maximum RK4 step; defaults to 0.01/max κ
        unitaries: (time, operator) pairs applied instantaneously
        jump_feedback: Per-qubit recovery mixture applied after each emission

    Returns:
        Final density matrix (not renormalized)
    """
    out = lindblad_integrate_batch(
        initial.entries[None, :, :], initial.num_qubits, duration, noise,
        pulses=pulses, dt=dt, unitaries=unitaries, jump_feedback=jump_feedback,
    )
    return DensityMatrix(initial.num_qubits, out[0])


def lindblad_channel(
    num_qubits: int,
    duration: float,
    noise: NoiseModel,
    pulses: Optional[PulseSchedule] = None,
    dt: Optional[float] = None,
    jump_feedback: Optional[JumpFeedback] = None,
) -> np.ndarray:
    """Superoperator S with vec(Φ(ρ)) = S·vec(ρ), row-major vectorization."""
    dim = 2 ** num_qubits
    basis = np.eye(dim * dim, dtype=complex).reshape(dim * dim, dim, dim)
    images = lindblad_integrate_batch(basis, num_qubits, duration, noise,
                                      pulses=pulses, dt=dt, jump_feedback=jump_feedback)
    return images.reshape(dim * dim, dim * dim).T


def apply_channel(superoperator: np.ndarray, rho: DensityMatrix) -> DensityMatrix:
    vec = superoperator @ rho.entries.reshape(-1)
    return DensityMatrix(rho.num_qubits, vec.reshape(rho.dim, rho.dim))
