"""
Collective bang-bang X pulses.

A pulse X = ⊗_j X_j every T_c/2 turns the conditional Hamiltonian's
state-dependent damping into a uniform norm factor over each full period.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.operators import DenseOperator, PAULI_X, expm, tensor_power
from utils.cache import get_operator_cache
from utils.validation import Validator

from .noise import NoiseModel, conditional_hamiltonian

logger = logging.getLogger(__name__)

# T_c·max κ above this is outside the fast-pulse regime
PULSE_ADVISORY_LIMIT = 0.2

# Absolute slack when matching floating-point instants
TIME_EPSILON = 1e-12


@dataclass(frozen=True)
class PulseSchedule:
    """Collective X pulses at m·T_c/2, m = 1, 2, ...

    After an even number of pulses the frame is back to the identity, so
    full periods end in the lab frame.
    """

    period: float
    enabled: bool = True

    def __post_init__(self):
        Validator.require(Validator.validate_nonnegative(self.period, 'period', allow_zero=False), 'T_c')

    @property
    def half_period(self) -> float:
        return 0.5 * self.period

    def pulse_times(self, duration: float) -> np.ndarray:
        """Pulse instants in (0, duration], computed as integer multiples of T_c/2."""
        if not self.enabled or duration <= 0:
            return np.empty(0)
        count = int(np.floor(duration / self.half_period + 1e-9))
        return self.half_period * np.arange(1, count + 1)

    def pulses_before(self, time: float) -> int:
        """Number of pulses applied at instants ≤ time."""
        if not self.enabled or time <= 0:
            return 0
        return int(np.floor(time / self.half_period + 1e-9))

    def period_boundaries(self, duration: float) -> np.ndarray:
        """Full-period instants k·T_c in (0, duration]."""
        count = int(np.floor(duration / self.period + 1e-9))
        return self.period * np.arange(1, count + 1)

    def check_rates(self, noise: NoiseModel) -> bool:
        """Warn when the pulse interval is not short against the fastest decay."""
        product = self.period * noise.max_rate
        if self.enabled and product > PULSE_ADVISORY_LIMIT:
            logger.warning(
                f"T_c·max(rate) = {product:.3f} exceeds {PULSE_ADVISORY_LIMIT}; "
                f"decoupling is outside its fast-pulse regime"
            )
            return False
        return True

    def operator(self, num_qubits: int) -> DenseOperator:
        return collective_x(num_qubits)

    def to_dict(self) -> dict:
        return {'period': self.period, 'enabled': self.enabled}


def collective_x(num_qubits: int) -> DenseOperator:
    """⊗_{j=1}^{N} X_j. Maps basis index b to its bit complement."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    return get_operator_cache().collective_pulse(
        num_qubits, lambda: tensor_power(PAULI_X, num_qubits)
    )


def flip_amplitudes(amplitudes: np.ndarray) -> np.ndarray:
    """Collective X on a raw amplitude vector: the complement of b is dim-1-b."""
    return np.ascontiguousarray(amplitudes[::-1])


def bb_period_operator(noise: NoiseModel, period: float, num_qubits: Optional[int] = None) -> DenseOperator:
    """
    One decoupling period U = e^{-i(T_c/2)H_c} X e^{-i(T_c/2)H_c} X.

    Args:
        noise: Emission rates
        period: T_c
        num_qubits: Register size (defaults to the number of rates)

    Returns:
        The composed operator, equal to e^{-(T_c/4)Σκ_i}·I
    """
    Validator.require(Validator.validate_nonnegative(period, 'period', allow_zero=False), 'T_c')
    num_qubits = noise.num_qubits if num_qubits is None else num_qubits
    half = expm(-1j * (0.5 * period) * conditional_hamiltonian(noise, num_qubits).entries)
    pulse = collective_x(num_qubits)
    return half @ pulse @ half @ pulse


def bb_period_factor(noise: NoiseModel, period: float) -> float:
    """Closed form e^{-(T_c/4)Σκ_i} of the per-period norm factor."""
    return float(np.exp(-0.25 * period * noise.total_rate))
