#!/usr/bin/env python3
"""
bbjump - Main Entry Point
Protected quantum memory under spontaneous emission: bang-bang pulses,
the detected-jump code and encoded gates.
"""

import sys
from typing import List, Optional

from api.cli import ExperimentCLI


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    try:
        return ExperimentCLI().run(argv)
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130


if __name__ == '__main__':
    sys.exit(main())
