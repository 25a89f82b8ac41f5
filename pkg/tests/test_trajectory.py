"""
Tests for the trajectory engine and ensemble averaging.
"""

import hashlib
import math

import numpy as np
import pytest

from coding.jump_code import CodeSpec, codeword, encode, logical_fidelity
from core.errors import DimensionMismatchError, NormalizationError
from core.operators import PAULI_X, embed_single_qubit
from core.states import DensityMatrix, StateVector, haar_random_state, purity, trace_distance
from dynamics.decoupling import PulseSchedule
from dynamics.lindblad import lindblad_integrate
from dynamics.noise import DetectorModel, NoiseModel
from dynamics.trajectory import (
    ProtocolSchedule,
    RecoveryPolicy,
    ScheduledGate,
    TrajectoryEngine,
    derive_seed,
    density_from_records,
    ensemble_density,
    recovery_feedback,
    run_ensemble,
    run_trajectory,
)
from utils.validation import ValidationError


@pytest.fixture
def excited():
    return StateVector.from_bitstring('1')


@pytest.fixture
def encoded_state():
    return encode(haar_random_state(1, 17))


class TestSchedules:
    """Test schedule and policy containers."""

    def test_gates_sorted(self):
        """Test gates are kept in time order."""
        x = embed_single_qubit(PAULI_X, 1, 1)
        schedule = ProtocolSchedule(gates=(ScheduledGate(0.5, x, 'late'), ScheduledGate(0.1, x, 'early')))
        assert [g.label for g in schedule.gates] == ['early', 'late']

    def test_negative_gate_time(self):
        """Test gate times must be nonnegative."""
        with pytest.raises(ValidationError):
            ScheduledGate(-1.0, embed_single_qubit(PAULI_X, 1, 1))

    def test_due_time_immediate(self):
        """Test zero delay recovers at the jump time."""
        assert RecoveryPolicy(CodeSpec(1)).due_time(0.37) == pytest.approx(0.37)

    def test_due_time_window(self):
        """Test recoveries wait for the next window boundary."""
        policy = RecoveryPolicy(CodeSpec(1), delay=0.05, detection_window=0.2)
        assert policy.due_time(0.1) == pytest.approx(0.2)
        assert policy.due_time(0.15) == pytest.approx(0.2)
        assert policy.due_time(0.16) == pytest.approx(0.4)

    def test_invalid_policy(self):
        """Test negative delay and zero window are rejected."""
        with pytest.raises(ValidationError):
            RecoveryPolicy(CodeSpec(1), delay=-0.1)
        with pytest.raises(ValidationError):
            RecoveryPolicy(CodeSpec(1), detection_window=0.0)

    def test_parity_times(self):
        """Test parity checks follow the pulse period."""
        schedule = ProtocolSchedule(
            pulses=PulseSchedule(0.25),
            recovery=RecoveryPolicy(CodeSpec(1), parity_check=True),
        )
        assert np.allclose(schedule.parity_times(1.0), [0.25, 0.5, 0.75, 1.0])
        single = ProtocolSchedule(recovery=RecoveryPolicy(CodeSpec(1), parity_check=True))
        assert np.allclose(single.parity_times(2.0), [2.0])

    def test_max_step(self):
        """Test the step bound reported with each memory row."""
        noise = NoiseModel.uniform(1.0, 2)
        assert ProtocolSchedule().max_step(noise, 1.0) == pytest.approx(0.025)
        assert ProtocolSchedule(pulses=PulseSchedule(0.02)).max_step(noise, 1.0) == pytest.approx(0.01)
        assert ProtocolSchedule(dt=0.001, pulses=PulseSchedule(0.02)).max_step(noise, 1.0) == pytest.approx(0.001)
        assert ProtocolSchedule().max_step(NoiseModel.uniform(0.0, 2), 3.0) == 3.0


class TestRunTrajectory:
    """Test single trajectories."""

    def test_noiseless(self):
        """Test zero rates leave the state untouched."""
        psi = haar_random_state(3, 5)
        record = run_trajectory(psi, ProtocolSchedule(), 2.0, NoiseModel.uniform(0.0, 3), seed=1)
        assert record.events == ()
        assert np.allclose(record.final_state.amplitudes, psi.amplitudes)

    def test_deterministic(self):
        """Test the same seed reproduces the record exactly."""
        psi = haar_random_state(2, 3)
        schedule = ProtocolSchedule(pulses=PulseSchedule(0.1))
        noise = NoiseModel((1.0, 2.0), DetectorModel(0.1, 0.2))
        a = run_trajectory(psi, schedule, 1.5, noise, seed=42)
        b = run_trajectory(psi, schedule, 1.5, noise, seed=42)
        assert a.events == b.events
        assert np.array_equal(a.final_state.amplitudes, b.final_state.amplitudes)
        assert a.to_dict() == b.to_dict()

    def test_final_state_normalized(self, excited):
        """Test the final state is normalized and events are time-ordered."""
        record = run_trajectory(excited, ProtocolSchedule(), 3.0, NoiseModel.uniform(1.0, 1), seed=9)
        assert record.final_state.is_normalized()
        times = [e.time for e in record.events]
        assert times == sorted(times)
        assert all(0.0 <= t <= 3.0 for t in times)

    def test_requires_normalized(self):
        """Test unnormalized input is rejected."""
        with pytest.raises(NormalizationError):
            run_trajectory(StateVector(1, [1.0, 1.0]), ProtocolSchedule(), 1.0, NoiseModel.uniform(1.0, 1), 0)

    def test_register_mismatch(self):
        """Test the noise model must match the register."""
        with pytest.raises(DimensionMismatchError):
            run_trajectory(StateVector.from_bitstring('00'), ProtocolSchedule(), 1.0, NoiseModel.uniform(1.0, 3), 0)

    def test_scheduled_gate(self):
        """Test a timed X flips a noiseless qubit."""
        gate = ScheduledGate(0.5, embed_single_qubit(PAULI_X, 1, 1), 'flip')
        record = run_trajectory(
            StateVector.from_bitstring('0'), ProtocolSchedule(gates=(gate,)), 1.0, NoiseModel.uniform(0.0, 1), 0
        )
        assert np.allclose(np.abs(record.final_state.amplitudes), [0, 1])

    def test_odd_pulse_count_flips(self):
        """Test an odd number of pulses leaves the register flipped."""
        record = run_trajectory(
            StateVector.from_bitstring('00'), ProtocolSchedule(pulses=PulseSchedule(1.0)), 1.5,
            NoiseModel.uniform(0.0, 2), 0,
        )
        assert np.allclose(np.abs(record.final_state.amplitudes), [0, 0, 0, 1])

    def test_double_jump_flag(self):
        """Test two unresolved jumps mark the trajectory."""
        noise = NoiseModel.uniform(1.0, 2)
        start = StateVector.from_bitstring('11')
        flagged = [run_trajectory(start, ProtocolSchedule(dt=0.01), 5.0, noise, seed=s) for s in range(40)]
        for record in flagged:
            assert record.double_jump == (len(record.events) >= 2)
        assert any(r.double_jump for r in flagged)


class TestEnsemble:
    """Test ensembles and their density matrices."""

    def test_derive_seed(self):
        """Test derived seeds are sha256 based and distinct."""
        expected = int(hashlib.sha256(b"7:3").hexdigest()[:16], 16)
        assert derive_seed(7, 3) == expected
        assert derive_seed(7, 3) != derive_seed(7, 4)
        assert 0 <= derive_seed(2 ** 64 - 1, 'initial_state') < 2 ** 64

    def test_single_trajectory_is_pure(self):
        """Test one trajectory gives a projector."""
        rho = ensemble_density(haar_random_state(2, 1), ProtocolSchedule(), 1.0, NoiseModel.uniform(0.5, 2), 1, 3)
        assert purity(rho) == pytest.approx(1.0)

    def test_unit_trace(self):
        """Test the averaged state has unit trace."""
        rho = ensemble_density(haar_random_state(2, 2), ProtocolSchedule(), 1.0, NoiseModel.uniform(1.0, 2), 50, 3)
        assert abs(rho.trace() - 1.0) <= 1e-10
        assert rho.is_valid()[0]

    def test_rejects_empty(self):
        """Test at least one trajectory is required."""
        with pytest.raises(ValueError):
            run_ensemble(StateVector.from_bitstring('0'), ProtocolSchedule(), 1.0, NoiseModel.uniform(1.0, 1), 0, 1)
        with pytest.raises(ValueError):
            density_from_records([])

    def test_worker_count_independent(self):
        """Test the result does not depend on the worker count."""
        psi = haar_random_state(2, 6)
        args = (psi, ProtocolSchedule(pulses=PulseSchedule(0.2)), 1.0, NoiseModel.uniform(1.0, 2), 12, 99)
        serial = ensemble_density(*args, workers=1)
        parallel = ensemble_density(*args, workers=3)
        assert np.array_equal(serial.entries, parallel.entries)

    def test_survival_probability(self, excited):
        """Test P(at least one jump) = 1 - e^{-1} at gamma t = 1."""
        k = 4000
        records = run_ensemble(excited, ProtocolSchedule(dt=0.01), 1.0, NoiseModel.uniform(1.0, 1), k, 5)
        fraction = sum(1 for r in records if r.events) / k
        p = 1.0 - math.exp(-1.0)
        assert abs(fraction - p) <= 3 * math.sqrt(p * (1 - p) / k) + 0.005

    def test_excited_population(self, excited):
        """Test rho_11 = e^{-1} at gamma t = 1."""
        rho = ensemble_density(excited, ProtocolSchedule(dt=0.02), 1.0, NoiseModel.uniform(1.0, 1), 10000, 11)
        assert rho.entries[1, 1].real == pytest.approx(math.exp(-1.0), abs=0.02)

    def test_matches_master_equation(self):
        """Test trajectories average to the master-equation state under pulses."""
        psi = haar_random_state(2, 21)
        noise = NoiseModel((1.0, 0.5))
        pulses = PulseSchedule(0.3)
        rho = ensemble_density(psi, ProtocolSchedule(pulses=pulses, dt=0.01), 1.0, noise, 3000, 8)
        oracle = lindblad_integrate(DensityMatrix.from_state(psi), 1.0, noise, pulses=pulses)
        assert trace_distance(rho, oracle) <= 0.05

    @pytest.mark.parametrize('initial', ['excited', 'haar'])
    def test_single_qubit_master_equation(self, initial):
        """Test 10^4 one-qubit trajectories are within 0.03 of the master equation."""
        psi = StateVector.from_bitstring('1') if initial == 'excited' else haar_random_state(1, 41)
        noise = NoiseModel.uniform(1.0, 1)
        rho = ensemble_density(psi, ProtocolSchedule(dt=0.02), 1.0, noise, 10000, 12)
        oracle = lindblad_integrate(DensityMatrix.from_state(psi), 1.0, noise)
        assert trace_distance(rho, oracle) <= 0.03


class TestRecovery:
    """Test detected-jump recovery inside trajectories."""

    def test_engine_checks_code_size(self):
        """Test the code must match the register."""
        schedule = ProtocolSchedule(recovery=RecoveryPolicy(CodeSpec(2)))
        with pytest.raises(DimensionMismatchError):
            TrajectoryEngine(schedule, 1.0, NoiseModel.uniform(1.0, 2), 2)

    def test_recoveries_follow_detections(self, encoded_state):
        """Test each detected event gets exactly one recovery."""
        schedule = ProtocolSchedule(recovery=RecoveryPolicy(CodeSpec(1)))
        records = run_ensemble(encoded_state, schedule, 1.0, NoiseModel.uniform(1.0, 2), 50, 4)
        for record in records:
            detected = [e for e in record.events if e.detected]
            assert len(record.applied_recoveries) == len(detected)
            assert [q for _, q in record.applied_recoveries] == [e.reported_qubit for e in detected]

    def test_undetected_not_recovered(self, encoded_state):
        """Test a blind detector triggers no recoveries."""
        schedule = ProtocolSchedule(recovery=RecoveryPolicy(CodeSpec(1)))
        noise = NoiseModel.uniform(1.0, 2, DetectorModel(1.0, 0.0))
        records = run_ensemble(encoded_state, schedule, 1.0, noise, 30, 4)
        assert all(not r.applied_recoveries for r in records)
        assert any(r.events for r in records)

    def test_protected_memory(self):
        """Test pulses plus immediate recovery keep the logical state."""
        logical = haar_random_state(1, 33)
        physical = encode(logical)
        noise = NoiseModel.uniform(1.0, 2)
        protected = ProtocolSchedule(pulses=PulseSchedule(0.01), recovery=RecoveryPolicy(CodeSpec(1)))
        bare = ProtocolSchedule(pulses=PulseSchedule(0.01))
        kept = run_ensemble(physical, protected, 0.1, noise, 200, 1)
        lost = run_ensemble(physical, bare, 0.1, noise, 200, 1)
        kept_fidelity = np.mean([logical_fidelity(r.final_state, logical) for r in kept])
        lost_fidelity = np.mean([logical_fidelity(r.final_state, logical) for r in lost])
        assert kept_fidelity > 0.99
        assert kept_fidelity >= lost_fidelity

    def test_feedback_oracle(self, encoded_state):
        """Test immediate recovery averages to the feedback master equation."""
        code = CodeSpec(1)
        detector = DetectorModel(0.1, 0.1)
        noise = NoiseModel.uniform(1.0, 2, detector)
        schedule = ProtocolSchedule(recovery=RecoveryPolicy(code), dt=0.01)
        rho = ensemble_density(encoded_state, schedule, 0.3, noise, 2000, 6)
        oracle = lindblad_integrate(
            DensityMatrix.from_state(encoded_state), 0.3, noise,
            jump_feedback=recovery_feedback(detector, code),
        )
        assert trace_distance(rho, oracle) <= 0.05

    def test_parity_check_restarts(self, encoded_state):
        """Test failed parity checks restart the run."""
        schedule = ProtocolSchedule(
            pulses=PulseSchedule(0.1),
            recovery=RecoveryPolicy(CodeSpec(1), parity_check=True, enabled=False),
        )
        noise = NoiseModel.uniform(2.0, 2, DetectorModel(1.0, 0.0))
        records = run_ensemble(encoded_state, schedule, 1.0, noise, 60, 2)
        assert any(r.restarts for r in records)
        for record in records:
            assert all(0.0 < t <= 1.0 + 1e-9 for t in record.restarts)
            assert record.final_state.is_normalized()

    def test_restart_replays_gates(self):
        """Test a restart resumes from the noiseless state after the program gates."""
        logical_x = ScheduledGate(0.0, embed_single_qubit(PAULI_X, 1, 2), 'logical_x')
        schedule = ProtocolSchedule(
            gates=(logical_x,),
            recovery=RecoveryPolicy(CodeSpec(1), parity_check=True, enabled=False),
        )
        noise = NoiseModel.uniform(2.0, 2, DetectorModel(1.0, 0.0))
        records = run_ensemble(codeword(1, '0'), schedule, 1.0, noise, 60, 5)
        restarted = [r for r in records if r.restarts]
        assert restarted
        target = codeword(1, '1').amplitudes
        for record in restarted:
            assert len(record.restarts) == 1
            assert record.restarts[0] == pytest.approx(1.0)
            assert abs(np.vdot(target, record.final_state.amplitudes)) ** 2 == pytest.approx(1.0, abs=1e-12)
