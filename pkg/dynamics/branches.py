"""
Deterministic few-jump expansion of a protected memory window.

The no-jump branch and every single-jump branch are integrated exactly
between pulses; jump times are integrated with Gauss-Legendre quadrature on
each inter-pulse segment. What is left over is the probability of two or
more emissions in the window, the uncorrectable part for the jump code.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from coding.jump_code import CodeSpec, RecoveryCircuit
from core.errors import DimensionMismatchError
from core.operators import lower_amplitudes
from core.states import StateVector

from .decoupling import TIME_EPSILON, PulseSchedule, flip_amplitudes
from .noise import NoiseModel, decay_exponents

logger = logging.getLogger(__name__)

DEFAULT_QUADRATURE_ORDER = 8


@dataclass(frozen=True)
class BranchExpansion:
    """Probabilities and post-recovery fidelities of the 0- and 1-jump branches."""

    p_no_jump: float
    p_one_jump: float
    fidelity_no_jump: float
    fidelity_one_jump: float

    @property
    def p_two_or_more(self) -> float:
        return max(0.0, 1.0 - self.p_no_jump - self.p_one_jump)

    @property
    def fidelity_lower_bound(self) -> float:
        """Mean fidelity with every ≥2-jump branch scored as a total loss."""
        return self.p_no_jump * self.fidelity_no_jump + self.p_one_jump * self.fidelity_one_jump

    @property
    def infidelity_upper_bound(self) -> float:
        return 1.0 - self.fidelity_lower_bound

    def to_dict(self) -> Dict[str, float]:
        data = asdict(self)
        data['p_two_or_more'] = self.p_two_or_more
        data['infidelity_upper_bound'] = self.infidelity_upper_bound
        return data


class _Window:
    """Segments between pulses and the exact propagation across them."""

    def __init__(self, duration: float, decay: np.ndarray, pulses: Optional[PulseSchedule]):
        tol = TIME_EPSILON * max(1.0, duration)
        times = pulses.pulse_times(duration) if pulses is not None else np.empty(0)
        inner = [float(t) for t in times if t < duration - tol]
        self.final_pulse = len(times) > len(inner)
        self.bounds = [0.0] + inner + [float(duration)]
        self.decay = decay

    @property
    def num_segments(self) -> int:
        return len(self.bounds) - 1

    def damp(self, amps: np.ndarray, span: float) -> np.ndarray:
        return amps * np.exp(-0.5 * span * self.decay)

    def propagate(self, amps: np.ndarray, segment: int, start: float) -> Tuple[np.ndarray, int]:
        """Evolve from time start inside segment to the window end.

        Returns the vector and the number of pulses applied on the way.
        """
        amps = self.damp(amps, self.bounds[segment + 1] - start)
        pulses = 0
        for a in range(segment + 1, self.num_segments):
            amps = flip_amplitudes(amps)
            pulses += 1
            amps = self.damp(amps, self.bounds[a + 1] - self.bounds[a])
        if self.final_pulse:
            amps = flip_amplitudes(amps)
            pulses += 1
        return amps, pulses

    def segment_starts(self, initial: np.ndarray) -> List[np.ndarray]:
        starts = [initial]
        amps = initial
        for a in range(self.num_segments - 1):
            amps = flip_amplitudes(self.damp(amps, self.bounds[a + 1] - self.bounds[a]))
            starts.append(amps)
        return starts


def few_jump_expansion(
    initial: StateVector,
    reference: StateVector,
    duration: float,
    noise: NoiseModel,
    pulses: Optional[PulseSchedule] = None,
    code: Optional[CodeSpec] = None,
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER,
) -> BranchExpansion:
    """
    Expand a storage window of length duration to first order in jumps.

    Args:
        initial: Normalized state at the window start
        reference: State the window end is scored against
        duration: Window length; recovery happens at its end
        noise: Emission rates (the detector is taken as perfect)
        pulses: Collective-X schedule, or None
        code: Code used for recovery of single-jump branches, or None
        quadrature_order: Gauss-Legendre nodes per segment

    Returns:
        BranchExpansion with P0, P1 and their fidelities
    """
    initial.require_normalized()
    num_qubits = initial.num_qubits
    if reference.num_qubits != num_qubits:
        raise DimensionMismatchError("reference and initial state sizes differ")
    if code is not None and code.num_physical != num_qubits:
        raise DimensionMismatchError(f"code on {code.num_physical} qubits for a {num_qubits}-qubit register")

    window = _Window(float(duration), decay_exponents(noise, num_qubits), pulses)
    ref = reference.amplitudes

    def score(amps: np.ndarray) -> float:
        norm2 = float(np.vdot(amps, amps).real)
        return float(abs(np.vdot(ref, amps)) ** 2 / norm2) if norm2 > 0 else 0.0

    starts = window.segment_starts(np.array(initial.amplitudes))
    final_no_jump, _ = window.propagate(starts[0], 0, 0.0)
    p0 = float(np.vdot(final_no_jump, final_no_jump).real)
    f0 = score(final_no_jump)

    nodes, weights = np.polynomial.legendre.leggauss(quadrature_order)
    rates = noise.rate_array()
    p1 = 0.0
    weighted_fidelity = 0.0
    for a in range(window.num_segments):
        lo, hi = window.bounds[a], window.bounds[a + 1]
        if hi <= lo:
            continue
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        for x, w in zip(nodes, weights):
            s = mid + half * x
            before = window.damp(starts[a], s - lo)
            for qubit, rate in enumerate(rates, start=1):
                if rate == 0.0:
                    continue
                jumped = np.sqrt(rate) * lower_amplitudes(before, qubit, num_qubits)
                chi, k = window.propagate(jumped, a, s)
                density = float(np.vdot(chi, chi).real)
                if density == 0.0:
                    continue
                if code is not None:
                    chi = RecoveryCircuit(code.n, qubit).unitary(k % 2 == 1) @ chi
                p1 += w * half * density
                weighted_fidelity += w * half * density * score(chi)

    f1 = weighted_fidelity / p1 if p1 > 0 else 1.0
    expansion = BranchExpansion(p0, p1, f0, f1)
    logger.debug(f"branch expansion over {duration:.4g}: P0={p0:.6g} P1={p1:.6g} "
                 f"P>=2={expansion.p_two_or_more:.3e}")
    return expansion


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> Dict[str, float]:
    """
    Least-squares slope of log y against log x.

    Returns:
        Dict with slope, intercept, r_squared and std_err
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need at least two matching points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive values")
    slope, intercept, r_value, p_value, std_err = stats.linregress(np.log(x), np.log(y))
    return {
        'slope': float(slope),
        'intercept': float(intercept),
        'r_squared': float(r_value ** 2),
        'std_err': float(std_err),
    }
