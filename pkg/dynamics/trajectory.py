"""
Quantum-trajectory engine for spontaneous emission under a protocol schedule.

A trajectory alternates first-order jump sampling with exact conditional
steps, and applies instantaneous operations at scheduled instants. At one
instant the order is: collective pulse, program gates, due recoveries,
parity check. A jump sampled in an interval is timestamped with the
interval start.
"""

import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from coding.jump_code import CodeSpec, RecoveryCircuit, measure_stabilizer
from core.errors import DimensionMismatchError
from core.operators import DenseOperator
from core.states import DensityMatrix, StateVector
from utils.validation import Validator

from .decoupling import TIME_EPSILON, PulseSchedule, flip_amplitudes
from .noise import DetectorModel, EmissionEvent, JumpSampler, NoiseModel, default_step

logger = logging.getLogger(__name__)

_PULSE, _GATE, _PARITY = 0, 1, 2


@dataclass(frozen=True)
class ScheduledGate:
    """Instantaneous unitary applied at a fixed time."""

    time: float
    operator: DenseOperator
    label: str = ''
    bb_compatible: bool = True

    def __post_init__(self):
        Validator.require(Validator.validate_nonnegative(self.time, 'time'), 'time')


@dataclass(frozen=True)
class RecoveryPolicy:
    """When and how reported emissions are corrected.

    Attributes:
        code: Code the register is encoded in
        delay: Time between a jump and its recovery
        detection_window: When set, recoveries run at the next multiple
            of the window after jump time + delay
        parity_check: Measure the stabilizer when no recovery is pending
        parity_interval: Spacing of parity checks; defaults to the pulse
            period, or a single check at the end without pulses
        enabled: Apply recoveries at all
        syndrome_variant: Syndrome circuit used by parity checks
    """

    code: CodeSpec
    delay: float = 0.0
    detection_window: Optional[float] = None
    parity_check: bool = False
    parity_interval: Optional[float] = None
    enabled: bool = True
    syndrome_variant: str = 'standard'

    def __post_init__(self):
        Validator.require(Validator.validate_nonnegative(self.delay, 'delay'), 'protocol.recovery_delay')
        if self.detection_window is not None:
            Validator.require(
                Validator.validate_nonnegative(self.detection_window, 'detection_window', allow_zero=False),
                'protocol.detection_window',
            )
        if self.parity_interval is not None:
            Validator.require(
                Validator.validate_nonnegative(self.parity_interval, 'parity_interval', allow_zero=False),
                'protocol.parity_interval',
            )

    def due_time(self, jump_time: float) -> float:
        due = jump_time + self.delay
        if self.detection_window is not None:
            due = math.ceil(due / self.detection_window - 1e-9) * self.detection_window
        return due


@dataclass(frozen=True)
class ProtocolSchedule:
    """Pulses, timed gates and the recovery policy of one run.

    Attributes:
        pulses: Collective-X schedule, or None
        gates: Program gates, kept sorted by time
        recovery: Recovery policy, or None for no error correction
        dt: Maximum trajectory step; defaults to 0.05/Σκ
    """

    pulses: Optional[PulseSchedule] = None
    gates: Tuple[ScheduledGate, ...] = field(default_factory=tuple)
    recovery: Optional[RecoveryPolicy] = None
    dt: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'gates', tuple(sorted(self.gates, key=lambda g: g.time)))
        if self.dt is not None:
            Validator.require(Validator.validate_nonnegative(self.dt, 'dt', allow_zero=False), 'dt')

    @property
    def bb_enabled(self) -> bool:
        return self.pulses is not None and self.pulses.enabled

    def pulse_times(self, duration: float) -> np.ndarray:
        return self.pulses.pulse_times(duration) if self.bb_enabled else np.empty(0)

    def max_step(self, noise: NoiseModel, duration: float) -> float:
        """Longest trajectory step: dt or the default, no longer than the pulse spacing."""
        dt = self.dt if self.dt is not None else default_step(noise)
        if self.bb_enabled:
            dt = min(dt, self.pulses.half_period)
        return dt if math.isfinite(dt) else max(duration, 1.0)

    def parity_times(self, duration: float) -> np.ndarray:
        policy = self.recovery
        if policy is None or not policy.parity_check:
            return np.empty(0)
        interval = policy.parity_interval
        if interval is None and self.bb_enabled:
            interval = self.pulses.period
        if interval is None:
            return np.array([duration])
        count = int(np.floor(duration / interval + 1e-9))
        return interval * np.arange(1, count + 1)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Outcome of one trajectory."""

    seed: int
    events: Tuple[EmissionEvent, ...]
    final_state: StateVector
    applied_recoveries: Tuple[Tuple[float, int], ...] = ()
    restarts: Tuple[float, ...] = ()
    double_jump: bool = False

    def to_dict(self) -> Dict:
        return {
            'seed': self.seed,
            'events': [e.to_dict() for e in self.events],
            'final_state': self.final_state.to_dict(cutoff=1e-15),
            'applied_recoveries': [list(r) for r in self.applied_recoveries],
            'restarts': list(self.restarts),
            'double_jump': self.double_jump,
        }


@dataclass
class _PendingRecovery:
    due: float
    qubit: int
    pulses_at_jump: int


class _TrajectoryRun:
    """Mutable state of a single trajectory."""

    def __init__(self, engine: 'TrajectoryEngine', initial: np.ndarray, rng: np.random.Generator):
        self.engine = engine
        self.amps = initial.copy()
        # noiseless state of the schedule so far; restarts resume from it
        self.ideal = initial.copy()
        self.rng = rng
        self.t = 0.0
        self.pulse_count = 0
        self.fixed_index = 0
        self.pending: List[_PendingRecovery] = []
        self.events: List[EmissionEvent] = []
        self.recoveries: List[Tuple[float, int]] = []
        self.restarts: List[float] = []
        self.unresolved = 0
        self.double_jump = False

    def next_target(self) -> float:
        engine = self.engine
        target = engine.duration
        if self.fixed_index < len(engine.fixed):
            target = min(target, engine.fixed[self.fixed_index][0])
        if self.pending:
            target = min(target, min(p.due for p in self.pending))
        return target

    def on_event(self, event: EmissionEvent) -> None:
        self.events.append(event)
        if self.unresolved > 0:
            self.double_jump = True
        self.unresolved += 1
        policy = self.engine.schedule.recovery
        if policy is not None and policy.enabled and event.detected:
            self.pending.append(_PendingRecovery(policy.due_time(event.time), event.reported_qubit, self.pulse_count))

    def process_instant(self, final: bool = False) -> None:
        engine = self.engine
        tol = engine.tolerance
        parity_due = False
        while self.fixed_index < len(engine.fixed) and engine.fixed[self.fixed_index][0] <= self.t + tol:
            _, kind, _, payload = engine.fixed[self.fixed_index]
            self.fixed_index += 1
            if kind == _PULSE:
                self.amps = flip_amplitudes(self.amps)
                self.ideal = flip_amplitudes(self.ideal)
                self.pulse_count += 1
            elif kind == _GATE:
                self.amps = payload @ self.amps
                self.amps /= np.linalg.norm(self.amps)
                self.ideal = payload @ self.ideal
            else:
                parity_due = True

        due, waiting = [], []
        for p in self.pending:
            (due if final or p.due <= self.t + tol else waiting).append(p)
        self.pending = waiting
        for p in sorted(due, key=lambda p: p.due):
            self.apply_recovery(p)

        if parity_due and not self.pending:
            self.parity_check()

    def apply_recovery(self, pending: _PendingRecovery) -> None:
        flip = (self.pulse_count - pending.pulses_at_jump) % 2 == 1
        self.amps = self.engine.recovery_matrix(pending.qubit, flip) @ self.amps
        self.recoveries.append((self.t, pending.qubit))
        self.unresolved = max(0, self.unresolved - 1)

    def parity_check(self) -> None:
        policy = self.engine.schedule.recovery
        state = StateVector(self.engine.num_qubits, self.amps)
        outcome, post = measure_stabilizer(state, self.rng, policy.syndrome_variant)
        if outcome == 1:
            self.amps = np.array(post.amplitudes)
            return
        logger.debug(f"parity -1 at t={self.t:.6g}; restarting")
        self.amps = self.ideal / np.linalg.norm(self.ideal)
        self.restarts.append(self.t)
        self.unresolved = 0

    def advance(self) -> None:
        engine = self.engine
        tol = engine.tolerance
        target = self.next_target()
        span = target - self.t
        h = min(engine.dt, span)
        if span - h <= tol:
            h, t_next = span, target
        else:
            t_next = self.t + h
        self.amps, event = engine.sampler.step(self.amps, h, self.rng, self.t)
        if event is not None:
            self.on_event(event)
        self.t = t_next
        self.process_instant(final=self.t >= engine.duration - tol)


class TrajectoryEngine:
    """
    Runs trajectories of one (schedule, duration, noise) configuration.

    Per-configuration tables are built once so ensembles only pay for the
    per-trajectory arithmetic.
    """

    def __init__(self, schedule: ProtocolSchedule, duration: float, noise: NoiseModel, num_qubits: int):
        Validator.require(Validator.validate_nonnegative(duration, 'duration'), 'duration')
        noise.check_register(num_qubits)
        self.schedule = schedule
        self.duration = float(duration)
        self.noise = noise
        self.num_qubits = num_qubits
        self.sampler = JumpSampler(noise, num_qubits)
        self.tolerance = TIME_EPSILON * max(1.0, self.duration)

        dt = schedule.dt if schedule.dt is not None else default_step(noise)
        self.dt = dt if math.isfinite(dt) else max(self.duration, 1.0)

        if schedule.bb_enabled:
            schedule.pulses.check_rates(noise)
        policy = schedule.recovery
        if policy is not None and policy.code.num_physical != num_qubits:
            raise DimensionMismatchError(
                f"code on {policy.code.num_physical} qubits used on a {num_qubits}-qubit register"
            )
        self.fixed = self._timeline()

    def _timeline(self) -> List[Tuple[float, int, int, Optional[np.ndarray]]]:
        fixed = []
        for m, t in enumerate(self.schedule.pulse_times(self.duration)):
            fixed.append((float(t), _PULSE, m, None))
        for k, gate in enumerate(self.schedule.gates):
            if gate.operator.num_qubits != self.num_qubits:
                raise DimensionMismatchError(
                    f"gate {gate.label or k} acts on {gate.operator.num_qubits} qubits, register has {self.num_qubits}"
                )
            if gate.time <= self.duration + self.tolerance:
                fixed.append((float(gate.time), _GATE, k, gate.operator.entries))
        for k, t in enumerate(self.schedule.parity_times(self.duration)):
            fixed.append((float(t), _PARITY, k, None))
        fixed.sort(key=lambda e: (e[0], e[1], e[2]))
        return fixed

    def recovery_matrix(self, qubit: int, frame_flip: bool) -> np.ndarray:
        return RecoveryCircuit(self.schedule.recovery.code.n, qubit).unitary(frame_flip)

    def run(self, initial: StateVector, seed: int) -> TrajectoryRecord:
        """
        Run one trajectory.

        Args:
            initial: Normalized starting state
            seed: Seed of this trajectory's random generator

        Returns:
            TrajectoryRecord with a normalized final state
        """
        initial.require_normalized()
        if initial.num_qubits != self.num_qubits:
            raise DimensionMismatchError(
                f"initial state on {initial.num_qubits} qubits for a {self.num_qubits}-qubit engine"
            )
        run = _TrajectoryRun(self, np.array(initial.amplitudes), np.random.default_rng(seed))
        run.process_instant(final=self.duration <= self.tolerance)
        while run.t < self.duration - self.tolerance:
            run.advance()

        amps = run.amps / np.linalg.norm(run.amps)
        return TrajectoryRecord(
            seed=int(seed),
            events=tuple(run.events),
            final_state=StateVector(self.num_qubits, amps),
            applied_recoveries=tuple(run.recoveries),
            restarts=tuple(run.restarts),
            double_jump=run.double_jump,
        )


def run_trajectory(
    initial: StateVector,
    schedule: ProtocolSchedule,
    duration: float,
    noise: NoiseModel,
    seed: int,
) -> TrajectoryRecord:
    """Single trajectory; a deterministic function of its inputs and seed."""
    return TrajectoryEngine(schedule, duration, noise, initial.num_qubits).run(initial, seed)


def derive_seed(base_seed: int, index: Union[int, str]) -> int:
    """64-bit per-trajectory seed from sha256(base_seed:index)."""
    digest = hashlib.sha256(f"{base_seed}:{index}".encode()).hexdigest()
    return int(digest[:16], 16)


def _run_chunk(args) -> List[TrajectoryRecord]:
    initial, schedule, duration, noise, seeds = args
    engine = TrajectoryEngine(schedule, duration, noise, initial.num_qubits)
    return [engine.run(initial, seed) for seed in seeds]


def _contiguous_chunks(items: Sequence[int], parts: int) -> List[List[int]]:
    size = math.ceil(len(items) / parts)
    return [list(items[i:i + size]) for i in range(0, len(items), size)]


def run_ensemble(
    initial: StateVector,
    schedule: ProtocolSchedule,
    duration: float,
    noise: NoiseModel,
    num_trajectories: int,
    base_seed: int,
    workers: int = 1,
) -> List[TrajectoryRecord]:
    """
    Run num_trajectories trajectories with seeds derived from base_seed.

    With workers > 1 contiguous index ranges run in worker processes; the
    records come back in index order either way.
    """
    if num_trajectories < 1:
        raise ValueError("num_trajectories must be >= 1")
    Validator.require(Validator.validate_seed(base_seed), 'base_seed')
    seeds = [derive_seed(base_seed, k) for k in range(num_trajectories)]
    if workers <= 1 or num_trajectories < 2:
        return _run_chunk((initial, schedule, duration, noise, seeds))

    chunks = _contiguous_chunks(seeds, workers)
    logger.debug(f"running {num_trajectories} trajectories in {len(chunks)} chunks")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = pool.map(_run_chunk, [(initial, schedule, duration, noise, chunk) for chunk in chunks])
        return [record for chunk in results for record in chunk]


def density_from_records(records: Sequence[TrajectoryRecord]) -> DensityMatrix:
    """Average of final-state projectors, summed in record order."""
    if not records:
        raise ValueError("need at least one record")
    num_qubits = records[0].final_state.num_qubits
    dim = 2 ** num_qubits
    rho = np.zeros((dim, dim), dtype=complex)
    for record in records:
        amps = record.final_state.amplitudes
        rho += np.outer(amps, amps.conj())
    return DensityMatrix(num_qubits, rho / len(records))


def ensemble_density(
    initial: StateVector,
    schedule: ProtocolSchedule,
    duration: float,
    noise: NoiseModel,
    num_trajectories: int,
    base_seed: int,
    workers: int = 1,
) -> DensityMatrix:
    """Trajectory-averaged density matrix; identical for any worker count."""
    records = run_ensemble(initial, schedule, duration, noise, num_trajectories, base_seed, workers)
    return density_from_records(records)


def recovery_feedback(detector: DetectorModel, code: CodeSpec) -> Dict[int, List[Tuple[float, np.ndarray]]]:
    """
    Per-qubit recovery mixture for the master-equation oracle.

    A jump on qubit i is followed by R_j with the probability that the
    detector reports j; the undetected share gets no recovery.
    """
    num_qubits = code.num_physical
    feedback: Dict[int, List[Tuple[float, np.ndarray]]] = {}
    for true_qubit in range(1, num_qubits + 1):
        branches = []
        for reported, p in detector.report_distribution(true_qubit, num_qubits).items():
            if reported is not None and p > 0:
                branches.append((p, RecoveryCircuit(code.n, reported).unitary()))
        feedback[true_qubit] = branches
    return feedback
