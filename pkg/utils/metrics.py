"""
Event statistics for trajectory ensembles.
Aggregates emission, detection and recovery counts across trajectories.
"""

import json
import threading
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Dict


@dataclass
class EventMetrics:
    """Counters accumulated over a batch of trajectories."""

    start_time: float = field(default_factory=time.time)
    elapsed_seconds: float = 0.0

    trajectories: int = 0
    total_jumps: int = 0
    undetected: int = 0
    misidentified: int = 0
    correctly_identified: int = 0
    recoveries_applied: int = 0
    restarts: int = 0
    double_jump_trajectories: int = 0

    @property
    def detected(self) -> int:
        return self.total_jumps - self.undetected

    def is_consistent(self) -> bool:
        """Every jump falls into exactly one detection category."""
        return (self.undetected + self.misidentified + self.correctly_identified
                == self.total_jumps)

    def to_dict(self) -> Dict[str, Any]:
        self.elapsed_seconds = time.time() - self.start_time
        data = asdict(self)
        data['detected'] = self.detected
        return data


class MetricsCollector:
    """Thread-safe accumulator of EventMetrics."""

    def __init__(self):
        self.metrics = EventMetrics()
        self.lock = threading.Lock()

    def record_trajectory(self, record) -> None:
        """
        Fold one TrajectoryRecord into the counters.

        Args:
            record: Object exposing events, applied_recoveries, restarts
                and double_jump like dynamics.trajectory.TrajectoryRecord
        """
        with self.lock:
            m = self.metrics
            m.trajectories += 1
            for event in record.events:
                m.total_jumps += 1
                if event.reported_qubit is None:
                    m.undetected += 1
                elif event.reported_qubit != event.true_qubit:
                    m.misidentified += 1
                else:
                    m.correctly_identified += 1
            m.recoveries_applied += len(record.applied_recoveries)
            m.restarts += len(record.restarts)
            if record.double_jump:
                m.double_jump_trajectories += 1

    def get_metrics(self) -> Dict[str, Any]:
        with self.lock:
            return self.metrics.to_dict()

    def get_summary(self) -> str:
        metrics = self.get_metrics()
        return (
            f"trajectories={metrics['trajectories']} jumps={metrics['total_jumps']} "
            f"detected={metrics['detected']} undetected={metrics['undetected']} "
            f"misidentified={metrics['misidentified']} "
            f"recoveries={metrics['recoveries_applied']} restarts={metrics['restarts']} "
            f"double_jump={metrics['double_jump_trajectories']} "
            f"elapsed={metrics['elapsed_seconds']:.2f}s"
        )

    def export_metrics(self, filepath: str) -> None:
        with open(filepath, 'w', encoding='utf-8') as f:
            json.dump(self.get_metrics(), f, indent=2)

    def reset(self) -> None:
        with self.lock:
            self.metrics = EventMetrics()
