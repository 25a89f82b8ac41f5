"""
Command-line interface for bbjump.

    bbjump run --config exp.json [--seed S] [--out DIR] [--trajectories K] [--format csv|json|both]
    bbjump verify [--seed S] [--format json]
    bbjump list

Exit codes: 0 success, 1 verification failure, 2 configuration error.
Logs go to standard error; data goes to files and standard output.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from experiments.models import ConfigError, load_experiment_config
from experiments.report import emit_report
from experiments.scenarios import list_scenarios, run_scenario
from experiments.verification import run_verification
from utils.logging_config import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_CONFIG_ERROR = 2


class ExperimentCLI:
    """Command-line interface for bbjump experiments."""

    def __init__(self, stdout=None, stderr=None):
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr

    def _print(self, text: str) -> None:
        print(text, file=self.stdout)

    def _overrides(self, args: argparse.Namespace) -> dict:
        return {
            'base_seed': args.seed,
            'num_trajectories': args.trajectories,
            'output.directory': args.out,
            'output.format': args.format,
            'workers': args.workers,
            'logging.level': args.log_level,
            'logging.file': args.log_file,
        }

    def run_experiment(self, args: argparse.Namespace) -> int:
        """Run the configured scenario and write its report."""
        config = load_experiment_config(args.config, self._overrides(args))
        setup_logging(config.logging.level, config.logging.file, json_format=config.logging.json_format)
        report = run_scenario(config)
        paths = emit_report(report, config.output.directory, config.output.basename, config.output.format)
        for path in paths:
            self._print(str(path))
        return EXIT_OK

    def verify(self, args: argparse.Namespace) -> int:
        """Run the identity suite; nonzero exit on any failure."""
        setup_logging(args.log_level or 'WARNING', args.log_file)
        seed = args.seed if args.seed is not None else 0
        if args.seed is None and args.config:
            seed = load_experiment_config(args.config).base_seed
        results = run_verification(seed)

        if args.format == 'json':
            self._print(json.dumps([r.to_dict() for r in results], indent=2))
        else:
            for r in results:
                status = 'PASS' if r.passed else 'FAIL'
                self._print(f"{r.name:<24} {r.max_deviation:>11.3e} {r.tolerance:>8.0e}  {status}  {r.detail}")
        failed = [r.name for r in results if not r.passed]
        if failed:
            print(f"verification failed: {', '.join(failed)}", file=self.stderr)
            return EXIT_VERIFICATION_FAILED
        return EXIT_OK

    def list_scenarios(self, args: argparse.Namespace) -> int:
        for name, description in list_scenarios():
            self._print(f"{name:<22} {description}")
        return EXIT_OK

    def build_parser(self) -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument('--config', help='Path to a JSON experiment config')
        common.add_argument('--seed', type=int, help='Override base_seed')
        common.add_argument('--log-level', help='Log level (DEBUG, INFO, WARNING, ERROR)')
        common.add_argument('--log-file', help='Also log to this rotating file')

        parser = argparse.ArgumentParser(prog='bbjump', description='Protected quantum memory experiments')
        subparsers = parser.add_subparsers(dest='command', help='Command to execute')

        run_parser = subparsers.add_parser('run', parents=[common], help='Run a scenario')
        run_parser.add_argument('--out', help='Output directory')
        run_parser.add_argument('--trajectories', type=int, help='Override num_trajectories')
        run_parser.add_argument('--format', choices=['csv', 'json', 'both'], help='Report format')
        run_parser.add_argument('--workers', type=int, help='Worker processes for trajectory batches')

        verify_parser = subparsers.add_parser('verify', parents=[common], help='Run the identity suite')
        verify_parser.add_argument('--format', choices=['text', 'json'], default='text', help='Output format')

        subparsers.add_parser('list', help='List scenarios')
        return parser

    def run(self, argv: Optional[List[str]] = None) -> int:
        """Parse arguments, dispatch, and map errors to exit codes."""
        parser = self.build_parser()
        args = parser.parse_args(argv)

        handlers = {
            'run': self.run_experiment,
            'verify': self.verify,
            'list': self.list_scenarios,
        }
        handler = handlers.get(args.command)
        if handler is None:
            parser.print_help(self.stderr)
            return EXIT_CONFIG_ERROR

        try:
            return handler(args)
        except ConfigError as e:
            print(f"config error: {e}", file=self.stderr)
            return EXIT_CONFIG_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    return ExperimentCLI().run(argv)


if __name__ == '__main__':
    sys.exit(main())
