"""
Tests for bang-bang decoupling and the coherence comparison.
"""

import logging
import math

import numpy as np
import pytest

from core.errors import NormalizationError
from core.operators import DenseOperator, pauli_string
from dynamics.coherence import (
    averaged_coherence_gap,
    coherence_comparison,
    coherence_statistics,
    extrapolated_slopes,
    first_order_coefficients,
    haar_average_slopes,
    purity_loss_slope,
    richardson_extrapolate,
    sample_bloch_states,
)
from dynamics.decoupling import (
    PulseSchedule,
    bb_period_factor,
    bb_period_operator,
    collective_x,
    flip_amplitudes,
)
from dynamics.noise import NoiseModel
from utils.validation import ValidationError

GAMMA_TC_VALUES = (1e-2, 1e-3)


class TestPulseSchedule:
    """Test pulse timing."""

    def test_pulse_times(self):
        """Test pulses at multiples of T_c/2 including the end."""
        assert np.allclose(PulseSchedule(1.0).pulse_times(2.0), [0.5, 1.0, 1.5, 2.0])

    def test_float_accumulation(self):
        """Test many short periods land exactly on the end time."""
        times = PulseSchedule(0.1).pulse_times(1.0)
        assert len(times) == 20
        assert times[-1] == pytest.approx(1.0)

    def test_pulses_before(self):
        """Test pulse counting is inclusive."""
        schedule = PulseSchedule(1.0)
        assert schedule.pulses_before(0.0) == 0
        assert schedule.pulses_before(0.49) == 0
        assert schedule.pulses_before(0.5) == 1
        assert schedule.pulses_before(1.2) == 2

    def test_disabled(self):
        """Test a disabled schedule has no pulses."""
        schedule = PulseSchedule(1.0, enabled=False)
        assert schedule.pulse_times(5.0).size == 0
        assert schedule.pulses_before(5.0) == 0

    def test_invalid_period(self):
        """Test T_c must be positive."""
        with pytest.raises(ValidationError):
            PulseSchedule(0.0)

    def test_rate_advisory(self, caplog):
        """Test slow pulses are reported."""
        with caplog.at_level(logging.WARNING, logger='dynamics.decoupling'):
            assert not PulseSchedule(1.0).check_rates(NoiseModel.uniform(1.0, 2))
        assert 'fast-pulse' in caplog.text
        assert PulseSchedule(0.01).check_rates(NoiseModel.uniform(1.0, 2))


class TestCollectivePulse:
    """Test the collective X operator."""

    def test_matches_pauli_string(self):
        """Test X⊗X⊗X."""
        assert np.array_equal(collective_x(3).entries, pauli_string('XXX').entries)

    def test_flip_reverses(self):
        """Test the amplitude shortcut equals the matrix."""
        amps = np.arange(8, dtype=complex)
        assert np.array_equal(flip_amplitudes(amps), collective_x(3).entries @ amps)

    def test_involution(self):
        """Test X^2 = I."""
        x = collective_x(2)
        assert np.allclose((x @ x).entries, np.eye(4))


class TestPeriodOperator:
    """Test one decoupling period."""

    @pytest.mark.parametrize('rates', [(1.0,), (0.3, 1.7), (1.0, 0.0, 2.0), (0.5, 0.1, 0.9, 1.3)])
    def test_uniform_norm_factor(self, rates):
        """Test the period operator is e^{-(T_c/4)sum kappa} I."""
        noise = NoiseModel(rates)
        period = 0.05
        u = bb_period_operator(noise, period)
        expected = bb_period_factor(noise, period) * np.eye(2 ** len(rates))
        assert np.max(np.abs(u.entries - expected)) <= 1e-12

    def test_factor_closed_form(self):
        """Test the closed form."""
        assert bb_period_factor(NoiseModel.uniform(1.0, 3), 0.4) == pytest.approx(math.exp(-0.3))

    def test_operator_type(self):
        """Test the period operator is a DenseOperator on the register."""
        u = bb_period_operator(NoiseModel.uniform(1.0, 2), 0.1)
        assert isinstance(u, DenseOperator)
        assert u.num_qubits == 2


class TestCoherence:
    """Test coherence comparison."""

    def test_requires_normalized(self):
        """Test alpha and beta must be normalized."""
        with pytest.raises(NormalizationError):
            coherence_comparison(1.0, 1.0, 1.0, 0.1)

    def test_invalid_mode(self):
        """Test mode names."""
        with pytest.raises(ValueError):
            coherence_comparison(1.0, 0.0, 1.0, 0.1, mode='other')

    def test_free_closed_form(self):
        """Test C = p^2 + (1-p)^2 for an excited qubit."""
        c = coherence_comparison(0.0, 1.0, 1.0, math.log(2.0), 'free')
        assert c == pytest.approx(0.5, abs=1e-6)

    def test_ground_state_unaffected(self):
        """Test |0> stays pure without pulses."""
        assert coherence_comparison(1.0, 0.0, 1.0, 0.1, 'free') == pytest.approx(1.0)

    def test_first_order_coefficients(self):
        """Test analytic coefficients."""
        c = first_order_coefficients(math.sqrt(0.5), math.sqrt(0.5))
        assert c['free_derived'] == pytest.approx(0.5)
        assert c['free_printed'] == pytest.approx(0.5)
        assert c['pulsed'] == pytest.approx(0.5)

    def test_richardson_linear(self):
        """Test linear data extrapolates exactly."""
        assert richardson_extrapolate({0.1: 3.1, 0.01: 3.01}) == pytest.approx(3.0)
        with pytest.raises(ValueError):
            richardson_extrapolate({0.1: 1.0})

    def test_finite_slope(self):
        """Test (1 - C)/(gamma T_c) for |1> at one point is 2 - O(gamma T_c)."""
        x = 0.01
        slopes = purity_loss_slope(0.0, 1.0, [x], 'free')
        expected = 2 * math.exp(-x) * (1 - math.exp(-x)) / x
        assert slopes[x] == pytest.approx(expected, rel=1e-6)
        assert purity_loss_slope(1.0, 0.0, [x], 'free')[x] == pytest.approx(0.0, abs=1e-9)

    def test_excited_slopes(self):
        """Test slopes for |1>: 2 free, 1 pulsed."""
        slopes = extrapolated_slopes(0.0, 1.0, GAMMA_TC_VALUES)
        assert slopes['free'] == pytest.approx(2.0, abs=1e-3)
        assert slopes['pulsed'] == pytest.approx(1.0, abs=1e-3)

    def test_balanced_slopes(self):
        """Test both modes agree at first order for alpha = beta."""
        a = math.sqrt(0.5)
        slopes = extrapolated_slopes(a, a, GAMMA_TC_VALUES)
        coefficients = first_order_coefficients(a, a)
        assert slopes['free'] == pytest.approx(coefficients['free_derived'], abs=1e-3)
        assert slopes['pulsed'] == pytest.approx(coefficients['pulsed'], abs=1e-3)


class TestCoherenceStatistics:
    """Test Haar-averaged coherence."""

    def test_bloch_samples(self):
        """Test sampled states are normalized and reproducible."""
        states = sample_bloch_states(500, 3)
        assert np.allclose(np.sum(np.abs(states) ** 2, axis=1), 1.0)
        assert np.array_equal(states, sample_bloch_states(500, 3))

    def test_minimum_samples(self):
        """Test small samples are rejected."""
        with pytest.raises(ValueError):
            coherence_statistics(1.0, 0.01, 10, 0)

    def test_shared_sample(self):
        """Test both means come from one sample."""
        stats = coherence_statistics(1.0, 0.01, 200, 5)
        assert stats.num_samples == 200
        assert stats.gamma_tc == pytest.approx(0.01)
        assert stats.gap == pytest.approx(abs(stats.mean_free - stats.mean_pulsed))
        assert 0.5 <= stats.mean_pulsed <= 1.0
        assert stats.to_dict()['normalized_gap'] == pytest.approx(stats.gap / 0.01)

    def test_averaged_gap(self):
        """Test the gap helper matches the statistics record."""
        gap = averaged_coherence_gap(1.0, 0.01, 300, 4)
        assert gap == pytest.approx(coherence_statistics(1.0, 0.01, 300, 4).gap)
        assert gap <= 0.01

    def test_haar_slopes_near_two_thirds(self):
        """Test both averaged slopes approach 2/3."""
        slopes = haar_average_slopes(GAMMA_TC_VALUES, 2000, 8)
        for mode in ('free', 'pulsed'):
            assert richardson_extrapolate(slopes[mode]) == pytest.approx(2 / 3, abs=0.05)
