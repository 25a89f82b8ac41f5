"""
Configuration management for bbjump experiments.
"""

import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = 'BBJUMP_OUTPUT_DIR'


class ConfigError(Exception):
    """Configuration could not be loaded or validated.

    Attributes:
        field: Dotted path of the offending key, when known
    """

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class Config:
    """Layered experiment configuration: defaults deep-merged with a JSON file."""

    DEFAULT_CONFIG = {
        'scenario': 'memory_fidelity',
        'n': 2,
        'base_seed': None,  # mandatory, no wall-clock seeding

        # Spontaneous emission and detector imperfections
        'noise': {
            'gamma': 1.0,
            'rates': None,  # per-qubit override of gamma
            'p_undetected': 0.0,
            'p_misidentify': 0.0,
        },

        'T_c': 0.02,
        'duration': 0.5,
        'dt': None,
        'num_trajectories': 1000,
        'workers': 1,

        'protocol': {
            'bb_enabled': True,
            'qecc_enabled': True,
            'parity_check_enabled': False,
            'recovery_delay': 0.0,  # units of 1/max(rate)
            'detection_window': None,  # units of 1/max(rate)
        },

        'initial_state': 'random',
        'gate_program': [],
        'sweep': None,

        'coherence': {
            'gamma_tc_values': [1e-2, 1e-3, 1e-4],
            'num_samples': 10000,
            'alpha': 0.7071067811865476,
            'beta': 0.7071067811865476,
        },

        'output': {
            'directory': 'results',
            'basename': None,  # defaults to the scenario name
            'format': 'both',  # csv, json, both
        },

        'logging': {
            'level': 'INFO',
            'file': None,
            'json_format': False,
        },
    }

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize configuration.

        Args:
            config_path: Path to a JSON config file; None keeps the defaults
        """
        self.config_path = config_path
        self.config = copy.deepcopy(self.DEFAULT_CONFIG)

        if config_path is not None:
            self.load()

        env_dir = os.environ.get(OUTPUT_DIR_ENV)
        if env_dir:
            self.set('output.directory', env_dir)

    def load(self) -> None:
        """Load and merge the JSON file at config_path."""
        path = Path(self.config_path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                loaded = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"line {e.lineno} column {e.colno}: {e.msg}") from e
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e}") from e

        if not isinstance(loaded, dict):
            raise ConfigError("top level of the config file must be an object")
        self._deep_merge(self.config, loaded)
        logger.debug(f"Loaded config from {path}")

    def save(self, path: Optional[str] = None) -> None:
        target = Path(path or self.config_path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'w', encoding='utf-8') as f:
            json.dump(self.config, f, indent=2)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Config':
        config = cls()
        config._deep_merge(config.config, copy.deepcopy(data))
        return config

    def _deep_merge(self, base: Dict, update: Dict) -> None:
        for key, value in update.items():
            if key in base and isinstance(base[key], dict) and isinstance(value, dict):
                self._deep_merge(base[key], value)
            else:
                base[key] = value

    def get(self, key_path: str, default: Any = None) -> Any:
        """
        Get configuration value by dot-separated path.

        Args:
            key_path: Dot-separated key path (e.g., 'noise.gamma')
            default: Value returned when the path is missing
        """
        value = self.config
        for key in key_path.split('.'):
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default
        return value

    def set(self, key_path: str, value: Any) -> None:
        keys = key_path.split('.')
        node = self.config
        for key in keys[:-1]:
            if not isinstance(node.get(key), dict):
                node[key] = {}
            node = node[key]
        node[keys[-1]] = value

    def output_directory(self) -> Path:
        directory = Path(self.get('output.directory') or '.')
        directory.mkdir(parents=True, exist_ok=True)
        return directory

    def to_dict(self) -> Dict:
        return copy.deepcopy(self.config)

    def __repr__(self) -> str:
        return f"Config(path={self.config_path!r}, scenario={self.get('scenario')!r})"
