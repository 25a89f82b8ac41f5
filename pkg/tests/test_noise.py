"""
Tests for the emission noise model and jump sampling.
"""

import math

import numpy as np
import pytest
from scipy import stats

from core.errors import DimensionMismatchError, StepSizeError
from core.states import StateVector, haar_random_state
from dynamics.noise import (
    MAX_JUMP_PROBABILITY,
    DetectorModel,
    EmissionEvent,
    JumpSampler,
    NoiseModel,
    conditional_hamiltonian,
    conditional_step,
    default_step,
    sample_and_apply_jump,
)
from utils.validation import ValidationError


class TestDetectorModel:
    """Test DetectorModel."""

    def test_perfect_default(self):
        """Test the default detector is perfect."""
        detector = DetectorModel()
        assert detector.is_perfect
        rng = np.random.default_rng(0)
        assert all(detector.report(2, 3, rng) == 2 for _ in range(20))

    def test_invalid_probabilities(self):
        """Test probabilities must sum to at most one."""
        with pytest.raises(ValidationError):
            DetectorModel(0.7, 0.5)
        with pytest.raises(ValidationError):
            DetectorModel(-0.1, 0.0)

    def test_single_qubit_reports_true_qubit(self):
        """Test misidentification is impossible on one qubit."""
        detector = DetectorModel(0.0, 1.0)
        rng = np.random.default_rng(1)
        assert detector.report(1, 1, rng) == 1
        assert detector.report_distribution(1, 1) == {1: 1.0}

    def test_report_distribution(self):
        """Test exact outcome probabilities."""
        dist = DetectorModel(0.2, 0.3).report_distribution(1, 4)
        assert dist[None] == pytest.approx(0.2)
        assert dist[1] == pytest.approx(0.5)
        assert dist[2] == dist[3] == dist[4] == pytest.approx(0.1)
        assert sum(dist.values()) == pytest.approx(1.0)

    def test_empirical_fractions(self):
        """Test sampled fractions match the probabilities within 3 sigma."""
        detector = DetectorModel(0.2, 0.1)
        rng = np.random.default_rng(7)
        draws = 20000
        reports = [detector.report(2, 3, rng) for _ in range(draws)]
        undetected = sum(r is None for r in reports) / draws
        wrong = sum(r is not None and r != 2 for r in reports) / draws
        assert abs(undetected - 0.2) <= 3 * math.sqrt(0.2 * 0.8 / draws)
        assert abs(wrong - 0.1) <= 3 * math.sqrt(0.1 * 0.9 / draws)
        assert all(r in (None, 1, 2, 3) for r in reports)


class TestNoiseModel:
    """Test NoiseModel."""

    def test_uniform(self):
        """Test a common rate on every qubit."""
        noise = NoiseModel.uniform(0.5, 3)
        assert noise.rates == (0.5, 0.5, 0.5)
        assert noise.total_rate == pytest.approx(1.5)
        assert noise.max_rate == 0.5

    def test_unequal_rates_allowed(self):
        """Test per-qubit rates may differ."""
        noise = NoiseModel((1.0, 0.0, 2.5))
        assert noise.max_rate == 2.5

    def test_negative_rate_rejected(self):
        """Test negative rates are rejected."""
        with pytest.raises(ValidationError):
            NoiseModel((1.0, -0.5))

    def test_register_mismatch(self):
        """Test rates length must match the register."""
        with pytest.raises(DimensionMismatchError):
            NoiseModel.uniform(1.0, 2).check_register(3)

    def test_default_step(self):
        """Test the default step and the noiseless case."""
        assert default_step(NoiseModel.uniform(1.0, 2)) == pytest.approx(0.025)
        assert math.isinf(default_step(NoiseModel.uniform(0.0, 2)))

    def test_event_flags(self):
        """Test detected and misidentified flags."""
        assert not EmissionEvent(0.0, 1, None).detected
        assert EmissionEvent(0.0, 1, 2).misidentified
        assert not EmissionEvent(0.0, 1, 1).misidentified


class TestConditionalEvolution:
    """Test the conditional Hamiltonian and the no-jump step."""

    def test_single_qubit_hamiltonian(self):
        """Test H_c = diag(0, -i gamma/2)."""
        h = conditional_hamiltonian(NoiseModel.uniform(0.8, 1), 1).entries
        assert np.allclose(h, np.diag([0, -0.4j]))

    def test_two_qubit_hamiltonian(self):
        """Test the damping adds over excited qubits."""
        h = conditional_hamiltonian(NoiseModel.uniform(1.0, 2), 2).entries
        assert np.allclose(np.diag(h), [0, -0.5j, -0.5j, -1.0j])

    def test_zero_rates(self):
        """Test no decay gives the zero matrix."""
        assert not np.any(conditional_hamiltonian(NoiseModel.uniform(0.0, 3), 3).entries)

    def test_excited_damping(self):
        """Test |1> picks up e^{-gamma dt/2}."""
        out = conditional_step(StateVector.from_bitstring('1'), 0.3, NoiseModel.uniform(2.0, 1))
        assert out.amplitudes[1] == pytest.approx(math.exp(-0.3))

    def test_ground_unchanged(self):
        """Test |0> is decay-free."""
        out = conditional_step(StateVector.from_bitstring('0'), 5.0, NoiseModel.uniform(2.0, 1))
        assert np.allclose(out.amplitudes, [1, 0])

    def test_superposition_norm(self):
        """Test (|0>+|1>)/sqrt2 with gamma dt = 2 ln 2 has squared norm 5/8."""
        plus = StateVector(1, np.array([1, 1]) / np.sqrt(2))
        out = conditional_step(plus, 2 * math.log(2.0), NoiseModel.uniform(1.0, 1))
        assert out.norm() ** 2 == pytest.approx(5 / 8)
        assert np.allclose(out.amplitudes, np.array([1, 0.5]) / np.sqrt(2))

    def test_nonpositive_dt(self):
        """Test dt must be positive."""
        with pytest.raises(ValueError):
            conditional_step(StateVector.from_bitstring('1'), 0.0, NoiseModel.uniform(1.0, 1))

    def test_norm_monotone(self):
        """Test the norm shrinks strictly iff an excited amplitude is nonzero."""
        noise = NoiseModel.uniform(1.0, 2)
        psi = haar_random_state(2, 3)
        assert conditional_step(psi, 0.1, noise).norm() < psi.norm()
        ground = StateVector.from_bitstring('00')
        assert conditional_step(ground, 0.1, noise).norm() == pytest.approx(1.0)


class TestJumpSampling:
    """Test first-order jump sampling."""

    def test_ground_never_jumps(self):
        """Test |0...0> has zero jump probability."""
        sampler = JumpSampler(NoiseModel.uniform(1.0, 3), 3)
        assert not np.any(sampler.jump_probabilities(StateVector.from_bitstring('000').amplitudes, 0.05))

    def test_probability_cap(self):
        """Test oversized steps are rejected."""
        with pytest.raises(StepSizeError):
            sample_and_apply_jump(StateVector.from_bitstring('1'), 0.5, NoiseModel.uniform(1.0, 1), 0)

    def test_cap_boundary(self):
        """Test a step exactly at the cap is accepted."""
        state, _ = sample_and_apply_jump(
            StateVector.from_bitstring('1'), MAX_JUMP_PROBABILITY, NoiseModel.uniform(1.0, 1), 0
        )
        assert state.is_normalized()

    def test_jump_lowers_state(self):
        """Test a jump on (|0>+|1>)/sqrt2 leaves |0>."""
        plus = StateVector(1, np.array([1, 1]) / np.sqrt(2))
        noise = NoiseModel.uniform(1.0, 1)
        rng = np.random.default_rng(0)
        for _ in range(2000):
            state, event = sample_and_apply_jump(plus, 0.1, noise, rng, time=0.25)
            if event is not None:
                break
        assert event is not None
        assert event.time == 0.25
        assert event.true_qubit == event.reported_qubit == 1
        assert np.allclose(state.amplitudes, [1, 0])

    def test_no_jump_renormalizes(self):
        """Test the no-jump branch is normalized."""
        psi = haar_random_state(2, 8)
        sampler = JumpSampler(NoiseModel.uniform(1.0, 2), 2)
        amps, event = sampler.step(np.array(psi.amplitudes), 0.01, np.random.default_rng(123))
        assert np.linalg.norm(amps) == pytest.approx(1.0)

    def test_seeded_reproducible(self):
        """Test identical seeds give identical draws."""
        psi = haar_random_state(3, 2)
        noise = NoiseModel.uniform(1.0, 3)
        a = sample_and_apply_jump(psi, 0.02, noise, 99)
        b = sample_and_apply_jump(psi, 0.02, noise, 99)
        assert np.array_equal(a[0].amplitudes, b[0].amplitudes)
        assert a[1] == b[1]

    def test_waiting_time_exponential(self):
        """Test jump times from |1> follow Exp(gamma)."""
        gamma, dt = 1.0, 0.01
        sampler = JumpSampler(NoiseModel.uniform(gamma, 1), 1)
        rng = np.random.default_rng(2024)
        excited = np.array([0, 1], dtype=complex)
        times = []
        for _ in range(2000):
            t = 0.0
            while True:
                _, event = sampler.step(excited, dt, rng, t)
                if event is not None:
                    times.append(event.time + 0.5 * dt)
                    break
                t += dt
        statistic = stats.kstest(times, 'expon', args=(0, 1 / gamma)).statistic
        assert statistic <= 0.05

    @pytest.mark.slow
    def test_waiting_time_full_scale(self):
        """Test 10^5 jump times from |1> are within KS distance 0.01 of Exp(gamma)."""
        gamma, dt = 1.0, 0.02
        sampler = JumpSampler(NoiseModel.uniform(gamma, 1), 1)
        rng = np.random.default_rng(2025)
        # jumps are uniform inside the interval that sampled them
        offsets = np.random.default_rng(7).random(100000)
        excited = np.array([0, 1], dtype=complex)
        times = np.empty(offsets.size)
        for i, offset in enumerate(offsets):
            t = 0.0
            while True:
                _, event = sampler.step(excited, dt, rng, t)
                if event is not None:
                    times[i] = event.time + offset * dt
                    break
                t += dt
        statistic = stats.kstest(times, 'expon', args=(0, 1 / gamma)).statistic
        assert statistic <= 0.01
