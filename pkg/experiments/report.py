"""
Experiment reports and their CSV/JSON files.

The JSON file is one object: schema_version, tool_version, scenario, seed,
timestamp, config, rows and summary. The CSV file has one row per sweep
point with the columns of REPORT_COLUMNS; cells that do not apply to a
scenario are left empty. Only the timestamp varies between runs of the
same config.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

logger = logging.getLogger(__name__)

SCHEMA_VERSION = '1.0'
TOOL_VERSION = '1.0.0'

FORMATS = ('csv', 'json', 'both')

REPORT_COLUMNS = (
    'point',
    'label',
    'sweep_parameter',
    'sweep_value',
    'n',
    'seed',
    'num_trajectories',
    'gamma',
    'T_c',
    'duration',
    'dt',
    'bb_enabled',
    'qecc_enabled',
    'parity_check_enabled',
    'recovery_delay',
    'detection_window',
    'p_undetected',
    'p_misidentify',
    'fidelity_mean',
    'fidelity_stderr',
    'oracle_fidelity',
    'total_jumps',
    'detected',
    'undetected',
    'misidentified',
    'correctly_identified',
    'recoveries',
    'restarts',
    'double_jump_probability',
    'failure_rate',
    'branch_p_two_or_more',
    'gamma_tc',
    'slope_free',
    'slope_pulsed',
    'coherence_gap',
    'check',
    'max_deviation',
    'tolerance',
    'passed',
)


def _plain(value: Any) -> Any:
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


@dataclass
class ExperimentReport:
    """Rows and summary of one scenario run, with the config that produced them."""

    scenario: str
    seed: int
    config: Dict[str, Any]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    schema_version: str = SCHEMA_VERSION
    tool_version: str = TOOL_VERSION

    def __post_init__(self):
        unknown = {key for row in self.rows for key in row} - set(REPORT_COLUMNS)
        if unknown:
            raise ValueError(f"report rows carry unknown columns: {sorted(unknown)}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': self.schema_version,
            'tool_version': self.tool_version,
            'scenario': self.scenario,
            'seed': self.seed,
            'timestamp': self.timestamp,
            'config': _plain(self.config),
            'rows': [_plain(row) for row in self.rows],
            'summary': _plain(self.summary),
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentReport':
        return cls(
            scenario=data['scenario'],
            seed=data['seed'],
            config=data['config'],
            rows=list(data.get('rows', [])),
            summary=dict(data.get('summary', {})),
            timestamp=data.get('timestamp', ''),
            schema_version=data.get('schema_version', SCHEMA_VERSION),
            tool_version=data.get('tool_version', TOOL_VERSION),
        )

    def csv_rows(self) -> List[List[str]]:
        table = []
        for row in self.rows:
            plain = _plain(row)
            table.append(['' if plain.get(col) is None else _cell(plain[col]) for col in REPORT_COLUMNS])
        return table


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_report(report: ExperimentReport, directory: str, basename: Optional[str] = None,
                fmt: str = 'both') -> List[Path]:
    """
    Write the report as CSV and/or JSON.

    Args:
        report: Report to write
        directory: Output directory, created when missing
        basename: File stem; defaults to the scenario name
        fmt: 'csv', 'json' or 'both'

    Returns:
        Paths written

    Raises:
        OSError: if the directory or a file cannot be written
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = basename or report.scenario
    written = []

    if fmt in ('json', 'both'):
        path = out_dir / f"{stem}.json"
        with open(path, 'w', encoding='utf-8') as f:
            f.write(report.to_json())
            f.write('\n')
        written.append(path)

    if fmt in ('csv', 'both'):
        path = out_dir / f"{stem}.csv"
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(REPORT_COLUMNS)
            writer.writerows(report.csv_rows())
        written.append(path)

    for path in written:
        logger.info(f"wrote {path}")
    return written


def load_report(path: str) -> ExperimentReport:
    with open(path, 'r', encoding='utf-8') as f:
        return ExperimentReport.from_dict(json.load(f))
