"""
Spontaneous-emission noise model and the quantum-jump unravelling primitives.

The conditional Hamiltonian H_c = -(i/2) Σ κ_i σ_i⁺σ_i⁻ is diagonal in the
computational basis, so no-jump evolution is an exact entrywise damping.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np

from core.errors import DimensionMismatchError, StepSizeError
from core.operators import DenseOperator, excitation_bits, lower_amplitudes
from core.states import StateVector
from utils.validation import Validator

logger = logging.getLogger(__name__)

# Per-step cap on the total jump probability
MAX_JUMP_PROBABILITY = 0.1


@dataclass(frozen=True)
class DetectorModel:
    """Imperfect emission detector.

    A jump goes undetected with probability p_undetected and is attributed to
    a uniformly chosen other qubit with probability p_misidentify. On a single
    qubit register misidentification is impossible and the true qubit is
    reported instead.
    """

    p_undetected: float = 0.0
    p_misidentify: float = 0.0

    def __post_init__(self):
        Validator.require(Validator.validate_detector(self.p_undetected, self.p_misidentify), 'detector')

    @property
    def is_perfect(self) -> bool:
        return self.p_undetected == 0.0 and self.p_misidentify == 0.0

    def report(self, true_qubit: int, num_qubits: int, rng: np.random.Generator) -> Optional[int]:
        """Draw the reported qubit for a jump on true_qubit; None means undetected."""
        u = rng.random()
        if u < self.p_undetected:
            return None
        if u < self.p_undetected + self.p_misidentify and num_qubits > 1:
            others = [q for q in range(1, num_qubits + 1) if q != true_qubit]
            return others[int(rng.integers(len(others)))]
        return true_qubit

    def report_distribution(self, true_qubit: int, num_qubits: int) -> Dict[Optional[int], float]:
        """Exact distribution of report() outcomes."""
        dist: Dict[Optional[int], float] = {}
        if self.p_undetected > 0:
            dist[None] = self.p_undetected
        correct = 1.0 - self.p_undetected
        if num_qubits > 1 and self.p_misidentify > 0:
            share = self.p_misidentify / (num_qubits - 1)
            for q in range(1, num_qubits + 1):
                if q != true_qubit:
                    dist[q] = share
            correct -= self.p_misidentify
        dist[true_qubit] = correct
        return dist


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit emission rates κ_i (1/time) plus a detector model."""

    rates: Tuple[float, ...]
    detector: DetectorModel = field(default_factory=DetectorModel)

    def __post_init__(self):
        rates = tuple(float(r) for r in np.atleast_1d(np.asarray(self.rates, dtype=float)))
        Validator.require(Validator.validate_rates(rates), 'noise.rates')
        object.__setattr__(self, 'rates', rates)

    @classmethod
    def uniform(cls, gamma: float, num_qubits: int, detector: Optional[DetectorModel] = None) -> 'NoiseModel':
        return cls((float(gamma),) * num_qubits, detector or DetectorModel())

    @property
    def num_qubits(self) -> int:
        return len(self.rates)

    @property
    def max_rate(self) -> float:
        return max(self.rates)

    @property
    def total_rate(self) -> float:
        return float(sum(self.rates))

    def rate_array(self) -> np.ndarray:
        return np.asarray(self.rates, dtype=float)

    def check_register(self, num_qubits: int) -> None:
        if num_qubits != self.num_qubits:
            raise DimensionMismatchError(
                f"noise model has {self.num_qubits} rates but the register has {num_qubits} qubits"
            )


@dataclass(frozen=True)
class EmissionEvent:
    """One emission: when, where, and what the detector said."""

    time: float
    true_qubit: int
    reported_qubit: Optional[int]

    @property
    def detected(self) -> bool:
        return self.reported_qubit is not None

    @property
    def misidentified(self) -> bool:
        return self.detected and self.reported_qubit != self.true_qubit

    def to_dict(self) -> Dict:
        return {'time': self.time, 'true_qubit': self.true_qubit, 'reported_qubit': self.reported_qubit}


def decay_exponents(noise: NoiseModel, num_qubits: int) -> np.ndarray:
    """Σ_{i: b_i=1} κ_i for every basis index b."""
    noise.check_register(num_qubits)
    return excitation_bits(num_qubits) @ noise.rate_array()


def conditional_hamiltonian(noise: NoiseModel, num_qubits: int) -> DenseOperator:
    """H_c = -(i/2) Σ κ_i σ_i⁺σ_i⁻ as a diagonal matrix."""
    return DenseOperator(num_qubits, np.diag(-0.5j * decay_exponents(noise, num_qubits)))


def conditional_step(state: StateVector, dt: float, noise: NoiseModel) -> StateVector:
    """
    Exact no-jump evolution exp(-i·dt·H_c)·state.

    The result is not renormalized; its norm is the no-jump amplitude.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    damping = np.exp(-0.5 * dt * decay_exponents(noise, state.num_qubits))
    return StateVector(state.num_qubits, state.amplitudes * damping)


class JumpSampler:
    """First-order jump sampling on raw amplitude vectors.

    Holds the per-register tables so repeated steps only do vector arithmetic.
    """

    def __init__(self, noise: NoiseModel, num_qubits: int):
        noise.check_register(num_qubits)
        self.noise = noise
        self.num_qubits = num_qubits
        self.rates = noise.rate_array()
        self.bits = excitation_bits(num_qubits)
        self.decay = self.bits @ self.rates

    def jump_probabilities(self, amplitudes: np.ndarray, dt: float) -> np.ndarray:
        """δp_i = κ_i ⟨σ_i⁺σ_i⁻⟩ dt for a normalized amplitude vector."""
        populations = (np.abs(amplitudes) ** 2) @ self.bits
        return self.rates * populations * dt

    def step(
        self,
        amplitudes: np.ndarray,
        dt: float,
        rng: np.random.Generator,
        time: float = 0.0,
    ) -> Tuple[np.ndarray, Optional[EmissionEvent]]:
        """
        Advance one interval of length dt.

        Args:
            amplitudes: Normalized amplitude vector
            dt: Interval length
            rng: Randomness source
            time: Interval start, recorded as the event time

        Returns:
            (new normalized amplitudes, event or None)

        Raises:
            StepSizeError: if the total jump probability exceeds the cap
        """
        dp = self.jump_probabilities(amplitudes, dt)
        total = float(dp.sum())
        if total > MAX_JUMP_PROBABILITY + 1e-12:
            raise StepSizeError(
                f"jump probability {total:.4f} in one step exceeds {MAX_JUMP_PROBABILITY}; reduce dt"
            )

        u = rng.random()
        if u < total:
            index = int(np.searchsorted(np.cumsum(dp), u, side='right'))
            qubit = min(index, self.num_qubits - 1) + 1
            lowered = lower_amplitudes(amplitudes, qubit, self.num_qubits)
            reported = self.noise.detector.report(qubit, self.num_qubits, rng)
            return lowered / np.linalg.norm(lowered), EmissionEvent(time, qubit, reported)

        damped = amplitudes * np.exp(-0.5 * dt * self.decay)
        return damped / np.linalg.norm(damped), None


def sample_and_apply_jump(
    state: StateVector,
    dt: float,
    noise: NoiseModel,
    rng: Union[np.random.Generator, int],
    time: float = 0.0,
) -> Tuple[StateVector, Optional[EmissionEvent]]:
    """Sample whether a jump occurs within dt and update the state.

    With probability δp_i a jump on qubit i replaces the state by the
    renormalized σ_i⁻·state; otherwise the renormalized conditional step is
    taken.
    """
    state.require_normalized()
    rng = np.random.default_rng(rng)
    sampler = JumpSampler(noise, state.num_qubits)
    amplitudes, event = sampler.step(state.amplitudes, dt, rng, time)
    return StateVector(state.num_qubits, amplitudes), event


def default_step(noise: NoiseModel, target_probability: float = 0.05) -> float:
    """Largest step keeping the worst-case jump probability at target_probability."""
    total = noise.total_rate
    return target_probability / total if total > 0 else float('inf')
