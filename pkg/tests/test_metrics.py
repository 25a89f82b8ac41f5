"""
Tests for metrics collection module.
"""

import json
from types import SimpleNamespace

import pytest

from dynamics.noise import EmissionEvent
from utils.metrics import EventMetrics, MetricsCollector


def _record(events, recoveries=0, restarts=0, double_jump=False):
    return SimpleNamespace(
        events=tuple(events),
        applied_recoveries=tuple((0.0, 1) for _ in range(recoveries)),
        restarts=tuple(0.0 for _ in range(restarts)),
        double_jump=double_jump,
    )


class TestEventMetrics:
    """Test EventMetrics dataclass."""

    def test_metrics_initialization(self):
        """Test metrics initialization."""
        metrics = EventMetrics()
        assert metrics.trajectories == 0
        assert metrics.total_jumps == 0
        assert metrics.is_consistent()

    def test_metrics_to_dict(self):
        """Test metrics to dictionary conversion."""
        metrics_dict = EventMetrics().to_dict()
        assert 'total_jumps' in metrics_dict
        assert 'detected' in metrics_dict
        assert metrics_dict['elapsed_seconds'] >= 0


class TestMetricsCollector:
    """Test MetricsCollector class."""

    def test_record_trajectory_categories(self):
        """Test every event lands in one detection category."""
        collector = MetricsCollector()
        collector.record_trajectory(_record([
            EmissionEvent(0.1, 1, 1),
            EmissionEvent(0.2, 2, None),
            EmissionEvent(0.3, 3, 1),
        ], recoveries=2, double_jump=True))

        m = collector.metrics
        assert m.trajectories == 1
        assert m.total_jumps == 3
        assert m.correctly_identified == 1
        assert m.undetected == 1
        assert m.misidentified == 1
        assert m.detected == 2
        assert m.recoveries_applied == 2
        assert m.double_jump_trajectories == 1
        assert m.is_consistent()

    def test_record_multiple_trajectories(self):
        """Test counts accumulate over trajectories."""
        collector = MetricsCollector()
        for _ in range(5):
            collector.record_trajectory(_record([], restarts=1))
        assert collector.metrics.trajectories == 5
        assert collector.metrics.restarts == 5

    def test_get_summary(self):
        """Test summary string."""
        collector = MetricsCollector()
        collector.record_trajectory(_record([EmissionEvent(0.0, 1, 1)], recoveries=1))
        summary = collector.get_summary()
        assert 'trajectories=1' in summary
        assert 'jumps=1' in summary

    def test_export_metrics(self, tmp_path):
        """Test JSON export."""
        collector = MetricsCollector()
        collector.record_trajectory(_record([EmissionEvent(0.0, 2, None)]))
        path = tmp_path / 'metrics.json'
        collector.export_metrics(str(path))
        data = json.loads(path.read_text())
        assert data['undetected'] == 1
        assert data['detected'] == 0

    def test_reset(self):
        """Test reset clears counters."""
        collector = MetricsCollector()
        collector.record_trajectory(_record([EmissionEvent(0.0, 1, 1)]))
        collector.reset()
        assert collector.metrics.total_jumps == 0
