"""
Tests for the command-line interface.
"""

import csv
import io
import json

import pytest

from api import cli
from api.cli import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_VERIFICATION_FAILED, ExperimentCLI
from experiments.report import load_report
from experiments.verification import CHECK_NAMES, CheckResult
from main import main


@pytest.fixture
def runner():
    return ExperimentCLI(stdout=io.StringIO(), stderr=io.StringIO())


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / 'exp.json'
    path.write_text(json.dumps({
        'scenario': 'memory_fidelity',
        'n': 1,
        'base_seed': 11,
        'T_c': 0.02,
        'duration': 0.1,
        'num_trajectories': 50,
        'logging': {'level': 'WARNING'},
    }), encoding='utf-8')
    return str(path)


class TestRun:
    """Test bbjump run."""

    def test_writes_report(self, runner, config_file, tmp_path):
        """Test both files are written and their paths printed."""
        out = tmp_path / 'out'
        code = runner.run(['run', '--config', config_file, '--out', str(out), '--trajectories', '10'])
        assert code == EXIT_OK
        printed = runner.stdout.getvalue().split()
        assert sorted(printed) == sorted([str(out / 'memory_fidelity.csv'), str(out / 'memory_fidelity.json')])
        report = load_report(str(out / 'memory_fidelity.json'))
        assert report.config['num_trajectories'] == 10
        assert report.seed == 11

    def test_seed_override(self, runner, config_file, tmp_path):
        """Test --seed replaces base_seed."""
        code = runner.run(['run', '--config', config_file, '--out', str(tmp_path), '--seed', '5',
                           '--format', 'json'])
        assert code == EXIT_OK
        assert load_report(str(tmp_path / 'memory_fidelity.json')).seed == 5
        assert not (tmp_path / 'memory_fidelity.csv').exists()

    def test_missing_seed(self, runner, tmp_path):
        """Test a run without a seed is a config error."""
        code = runner.run(['run', '--out', str(tmp_path)])
        assert code == EXIT_CONFIG_ERROR
        assert 'config error: base_seed' in runner.stderr.getvalue()

    def test_invalid_config(self, runner, tmp_path):
        """Test validation errors exit 2 with the field path."""
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps({'base_seed': 1, 'noise': {'p_undetected': 2.0}}), encoding='utf-8')
        code = runner.run(['run', '--config', str(path), '--out', str(tmp_path)])
        assert code == EXIT_CONFIG_ERROR
        assert 'noise.p_undetected' in runner.stderr.getvalue()

    def test_missing_file(self, runner, tmp_path):
        """Test an absent config file exits 2."""
        code = runner.run(['run', '--config', str(tmp_path / 'absent.json')])
        assert code == EXIT_CONFIG_ERROR

    def test_program_error(self, runner, tmp_path):
        """Test gate program errors found at run time exit 2."""
        path = tmp_path / 'gates.json'
        path.write_text(json.dumps({
            'base_seed': 1, 'n': 1, 'T_c': 0.02, 'duration': 0.1, 'num_trajectories': 5,
            'gate_program': [{'time': 0.01, 'gate': 'Z', 'qubits': [1]}],
        }), encoding='utf-8')
        code = runner.run(['run', '--config', str(path), '--out', str(tmp_path)])
        assert code == EXIT_CONFIG_ERROR
        assert 'gate_program.0.time' in runner.stderr.getvalue()

    def test_repeat_run_same_bytes(self, runner, config_file, tmp_path):
        """Test two runs of one config write the same JSON apart from the timestamp."""
        path = tmp_path / 'memory_fidelity.json'
        texts = []
        for _ in range(2):
            assert runner.run(['run', '--config', config_file, '--out', str(tmp_path), '--format', 'json']) == EXIT_OK
            text = path.read_text(encoding='utf-8')
            texts.append(text.replace(json.loads(text)['timestamp'], ''))
        assert texts[0] == texts[1]

    def test_sweep_csv_rows(self, runner, tmp_path):
        """Test the CSV has one row per sweep point."""
        path = tmp_path / 'sweep.json'
        path.write_text(json.dumps({
            'base_seed': 4, 'n': 1, 'duration': 0.1, 'num_trajectories': 10,
            'sweep': {'parameter': 'T_c', 'values': [0.01, 0.02, 0.04]},
        }), encoding='utf-8')
        assert runner.run(['run', '--config', str(path), '--out', str(tmp_path), '--format', 'csv']) == EXIT_OK
        with open(tmp_path / 'memory_fidelity.csv', newline='') as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 3
        assert [float(row['sweep_value']) for row in rows] == [0.01, 0.02, 0.04]
        assert all(row['sweep_parameter'] == 'T_c' for row in rows)


class TestVerify:
    """Test bbjump verify."""

    def test_text(self, runner):
        """Test one passing line per check."""
        assert runner.run(['verify', '--seed', '3']) == EXIT_OK
        lines = runner.stdout.getvalue().splitlines()
        assert [line.split()[0] for line in lines] == list(CHECK_NAMES)
        assert all('PASS' in line for line in lines)

    def test_json(self, runner):
        """Test the JSON listing."""
        assert runner.run(['verify', '--format', 'json']) == EXIT_OK
        results = json.loads(runner.stdout.getvalue())
        assert len(results) == len(CHECK_NAMES)
        assert all(r['passed'] for r in results)

    def test_failure_exit_code(self, runner, monkeypatch):
        """Test a failed check exits 1 and is named."""
        failing = [CheckResult('qecc_condition', 0.5, 1e-12, False)]
        monkeypatch.setattr(cli, 'run_verification', lambda seed: failing)
        assert runner.run(['verify']) == EXIT_VERIFICATION_FAILED
        assert 'verification failed: qecc_condition' in runner.stderr.getvalue()


class TestList:
    """Test bbjump list."""

    def test_lists_scenarios(self, runner):
        """Test every scenario is printed."""
        assert runner.run(['list']) == EXIT_OK
        names = [line.split()[0] for line in runner.stdout.getvalue().splitlines()]
        assert names == ['memory_fidelity', 'coherence_compare', 'gate_identities',
                         'detector_sweep', 'double_jump_scaling']

    def test_no_command(self, runner):
        """Test a bare invocation prints help and exits 2."""
        assert runner.run([]) == EXIT_CONFIG_ERROR
        assert 'usage' in runner.stderr.getvalue()

    def test_main_entry(self, capsys):
        """Test the module entry point."""
        assert main(['list']) == EXIT_OK
        assert 'memory_fidelity' in capsys.readouterr().out
