"""
Tests for the master-equation integrator.
"""

import math

import numpy as np
import pytest

from core.errors import StepSizeError
from core.operators import PAULI_X, embed_single_qubit
from core.states import DensityMatrix, StateVector, haar_random_state
from dynamics.decoupling import PulseSchedule
from dynamics.lindblad import (
    Dissipator,
    apply_channel,
    lindblad_channel,
    lindblad_integrate,
    lindblad_integrate_batch,
)
from dynamics.noise import NoiseModel


def _projector(bits):
    return DensityMatrix.from_state(StateVector.from_bitstring(bits))


class TestLindbladIntegrate:
    """Test lindblad_integrate."""

    def test_zero_rates(self):
        """Test no dissipation leaves the state unchanged."""
        rho = DensityMatrix.from_state(haar_random_state(2, 4))
        out = lindblad_integrate(rho, 3.0, NoiseModel.uniform(0.0, 2))
        assert np.allclose(out.entries, rho.entries)

    def test_excited_decay(self):
        """Test rho_11 = e^{-1} at gamma t = 1."""
        out = lindblad_integrate(_projector('1'), 1.0, NoiseModel.uniform(1.0, 1))
        assert out.entries[1, 1].real == pytest.approx(math.exp(-1.0), abs=1e-6)
        assert out.entries[0, 0].real == pytest.approx(1 - math.exp(-1.0), abs=1e-6)

    def test_coherence_decay(self):
        """Test rho_01 decays as e^{-gamma t/2}."""
        plus = DensityMatrix.from_state(StateVector(1, np.array([1, 1]) / np.sqrt(2)))
        gamma, t = 0.7, 2.0
        out = lindblad_integrate(plus, t, NoiseModel.uniform(gamma, 1))
        assert out.entries[0, 1] == pytest.approx(0.5 * math.exp(-0.5 * gamma * t), abs=1e-6)

    def test_trace_preserved(self):
        """Test unit trace through pulses and unequal rates."""
        rho = DensityMatrix.from_state(haar_random_state(3, 12))
        out = lindblad_integrate(rho, 2.0, NoiseModel((1.0, 0.3, 2.0)), pulses=PulseSchedule(0.05))
        assert abs(out.trace() - 1.0) <= 1e-8
        assert out.is_valid(tol=1e-8)[0]

    def test_pulsed_single_qubit(self):
        """Test two pulses per period against the closed form."""
        a = math.exp(-0.5)
        out = lindblad_integrate(_projector('1'), 1.0, NoiseModel.uniform(1.0, 1), pulses=PulseSchedule(1.0))
        assert out.entries[1, 1].real == pytest.approx(1 - (1 - a) * a, abs=1e-6)

    def test_step_size_bound(self):
        """Test oversized steps are rejected."""
        with pytest.raises(StepSizeError):
            lindblad_integrate(_projector('1'), 1.0, NoiseModel.uniform(1.0, 1), dt=0.1)
        with pytest.raises(ValueError):
            lindblad_integrate(_projector('1'), 1.0, NoiseModel.uniform(1.0, 1), dt=0.0)

    def test_unitary_at_time(self):
        """Test a timed flip before decay."""
        flip = embed_single_qubit(PAULI_X, 1, 1)
        out = lindblad_integrate(_projector('0'), 1.0, NoiseModel.uniform(1.0, 1), unitaries=[(0.0, flip)])
        assert out.entries[1, 1].real == pytest.approx(math.exp(-1.0), abs=1e-6)

    def test_unitary_outside_window(self):
        """Test unitaries must fall inside the run."""
        flip = embed_single_qubit(PAULI_X, 1, 1)
        with pytest.raises(ValueError):
            lindblad_integrate(_projector('0'), 1.0, NoiseModel.uniform(1.0, 1), unitaries=[(2.0, flip)])


class TestFeedback:
    """Test the recovery feedback term."""

    def test_probabilities_bounded(self):
        """Test feedback weights may not exceed one."""
        eye = np.eye(2)
        with pytest.raises(ValueError):
            Dissipator(NoiseModel.uniform(1.0, 1), 1, {1: [(0.7, eye), (0.6, eye)]})

    def test_feedback_reexcites(self):
        """Test an X after every emission keeps the qubit excited."""
        flip = embed_single_qubit(PAULI_X, 1, 1)
        out = lindblad_integrate(_projector('1'), 1.0, NoiseModel.uniform(1.0, 1), jump_feedback={1: [(1.0, flip)]})
        assert out.entries[1, 1].real == pytest.approx(1.0, abs=1e-8)


class TestChannel:
    """Test the superoperator form."""

    def test_channel_matches_integration(self):
        """Test S·vec(rho) equals direct integration."""
        noise = NoiseModel((1.0, 0.5))
        pulses = PulseSchedule(0.2)
        channel = lindblad_channel(2, 0.6, noise, pulses=pulses)
        rho = DensityMatrix.from_state(haar_random_state(2, 1))
        direct = lindblad_integrate(rho, 0.6, noise, pulses=pulses)
        assert np.allclose(apply_channel(channel, rho).entries, direct.entries, atol=1e-12)

    def test_batch_shape(self):
        """Test a stack propagates element by element."""
        noise = NoiseModel.uniform(1.0, 1)
        stack = np.stack([_projector('0').entries, _projector('1').entries])
        out = lindblad_integrate_batch(stack, 1, 1.0, noise)
        assert out.shape == (2, 2, 2)
        assert out[0, 0, 0].real == pytest.approx(1.0)
        assert out[1, 1, 1].real == pytest.approx(math.exp(-1.0), abs=1e-6)
