"""
Validated experiment configuration.

The layered dict from utils.config.Config is checked by pydantic models so
that every error carries the dotted path of the offending key.
"""

import logging
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError
from pydantic import field_validator, model_validator

from utils.config import Config, ConfigError
from utils.validation import ValidationError, Validator

logger = logging.getLogger(__name__)

__all__ = [
    'ConfigError',
    'CoherenceSettings',
    'ExperimentConfig',
    'GateStep',
    'LoggingSettings',
    'NoiseSettings',
    'OutputSettings',
    'ProtocolSettings',
    'SCENARIO_NAMES',
    'SEQUENCE_NAMES',
    'SweepSettings',
    'format_validation_error',
    'load_experiment_config',
    'validate_config_dict',
]

SCENARIO_NAMES = (
    'memory_fidelity',
    'coherence_compare',
    'gate_identities',
    'detector_sweep',
    'double_jump_scaling',
)

SEQUENCE_NAMES = ('logical_cnot', 'encoded_cp', 'encoded_rotation')

MAX_LOGICAL_QUBITS = 6


class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid')


class NoiseSettings(_Section):
    gamma: float = Field(1.0, ge=0)
    rates: Optional[List[float]] = None
    p_undetected: float = Field(0.0, ge=0, le=1)
    p_misidentify: float = Field(0.0, ge=0, le=1)

    @field_validator('rates')
    @classmethod
    def _rates_nonnegative(cls, rates: Optional[List[float]]) -> Optional[List[float]]:
        if rates is not None:
            ok, error = Validator.validate_rates(rates)
            if not ok:
                raise ValueError(error)
        return rates

    @model_validator(mode='after')
    def _detector_total(self) -> 'NoiseSettings':
        ok, error = Validator.validate_detector(self.p_undetected, self.p_misidentify)
        if not ok:
            raise ValueError(error)
        return self


class ProtocolSettings(_Section):
    bb_enabled: bool = True
    qecc_enabled: bool = True
    parity_check_enabled: bool = False
    recovery_delay: float = Field(0.0, ge=0)
    detection_window: Optional[float] = Field(None, gt=0)


class CoherenceSettings(_Section):
    gamma_tc_values: List[float] = Field(default_factory=lambda: [1e-2, 1e-3, 1e-4], min_length=1)
    num_samples: int = Field(10000, ge=100)
    alpha: float = 0.7071067811865476
    beta: float = 0.7071067811865476

    @field_validator('gamma_tc_values')
    @classmethod
    def _positive_values(cls, values: List[float]) -> List[float]:
        if any(v <= 0 for v in values):
            raise ValueError("gamma_tc_values must be positive")
        return values

    @model_validator(mode='after')
    def _normalized(self) -> 'CoherenceSettings':
        if abs(self.alpha ** 2 + self.beta ** 2 - 1.0) > 1e-12:
            raise ValueError("alpha^2 + beta^2 must equal 1")
        return self


class OutputSettings(_Section):
    directory: str = 'results'
    basename: Optional[str] = None
    format: Literal['csv', 'json', 'both'] = 'both'


class LoggingSettings(_Section):
    level: Literal['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'] = 'INFO'
    file: Optional[str] = None
    json_format: bool = False

    @field_validator('level', mode='before')
    @classmethod
    def _upper(cls, value: Any) -> Any:
        return value.upper() if isinstance(value, str) else value


class GateStep(_Section):
    """
    One timed entry of the gate program.

    Either a single physical gate record (gate, qubits on 1..n+1, angle)
    or a named encoded sequence (sequence, qubits on logical 1..n).
    """

    time: float = Field(ge=0)
    gate: Optional[str] = None
    sequence: Optional[Literal['logical_cnot', 'encoded_cp', 'encoded_rotation']] = None
    qubits: List[int] = Field(min_length=1)
    angle: Optional[float] = None
    axis: Optional[List[float]] = None
    case: Optional[Literal[1, 2, 3]] = None

    @model_validator(mode='after')
    def _one_kind(self) -> 'GateStep':
        if (self.gate is None) == (self.sequence is None):
            raise ValueError("exactly one of gate or sequence is required")
        if self.sequence == 'encoded_rotation':
            if len(self.qubits) != 1:
                raise ValueError("encoded_rotation acts on one logical qubit")
            if self.axis is None or self.angle is None:
                raise ValueError("encoded_rotation needs axis and angle")
            ok, error = Validator.validate_unit_axis(self.axis, 1e-9)
            if not ok:
                raise ValueError(error)
        elif self.sequence is not None and len(self.qubits) != 2:
            raise ValueError(f"{self.sequence} acts on two logical qubits")
        return self


class SweepSettings(_Section):
    """A dotted config path and the values it takes, one report row each."""

    parameter: str
    values: List[Any] = Field(min_length=1)

    @property
    def points(self) -> int:
        return len(self.values)

    def expand(self, config: 'ExperimentConfig') -> List[Tuple[Any, 'ExperimentConfig']]:
        expanded = []
        for value in self.values:
            point = config.with_overrides({self.parameter: value, 'sweep': None})
            expanded.append((value, point))
        return expanded


class ExperimentConfig(_Section):
    """Complete, validated description of one experiment run."""

    scenario: str = 'memory_fidelity'
    n: int = Field(2, ge=1, le=MAX_LOGICAL_QUBITS)
    base_seed: int = Field(ge=0, lt=2 ** 64)
    noise: NoiseSettings = Field(default_factory=NoiseSettings)
    T_c: float = Field(0.02, gt=0)
    duration: float = Field(0.5, ge=0)
    dt: Optional[float] = Field(None, gt=0)
    num_trajectories: int = Field(1000, ge=1)
    workers: int = Field(1, ge=1)
    protocol: ProtocolSettings = Field(default_factory=ProtocolSettings)
    initial_state: str = 'random'
    gate_program: List[GateStep] = Field(default_factory=list)
    sweep: Optional[SweepSettings] = None
    coherence: CoherenceSettings = Field(default_factory=CoherenceSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)

    @field_validator('scenario')
    @classmethod
    def _known_scenario(cls, name: str) -> str:
        if name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {name!r}; expected one of {', '.join(SCENARIO_NAMES)}")
        return name

    @model_validator(mode='after')
    def _register_consistency(self) -> 'ExperimentConfig':
        if self.noise.rates is not None and len(self.noise.rates) != self.num_physical:
            raise ValueError(
                f"noise.rates has {len(self.noise.rates)} entries for {self.num_physical} physical qubits"
            )
        if self.initial_state != 'random':
            ok, error = Validator.validate_bitstring(self.initial_state, self.n)
            if not ok:
                raise ValueError(f"initial_state: {error} (or 'random')")
        return self

    @property
    def num_physical(self) -> int:
        return self.n + 1

    def rates(self) -> Tuple[float, ...]:
        if self.noise.rates is not None:
            return tuple(float(r) for r in self.noise.rates)
        return (float(self.noise.gamma),) * self.num_physical

    def time_unit(self) -> float:
        """1/max κ, the unit of recovery_delay and detection_window."""
        top = max(self.rates())
        return 1.0 / top if top > 0 else 1.0

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode='json')

    def with_overrides(self, overrides: Mapping[str, Any]) -> 'ExperimentConfig':
        """Copy with dotted-path overrides applied, re-validated."""
        config = Config.from_dict(self.to_dict())
        for path, value in overrides.items():
            config.set(path, value)
        return validate_config_dict(config.to_dict())


def format_validation_error(error: PydanticValidationError) -> Tuple[str, Optional[str]]:
    """
    Render a pydantic error as "path: reason" lines.

    Returns:
        (message, dotted path of the first error or None)
    """
    lines = []
    first_field = None
    for item in error.errors():
        path = '.'.join(str(part) for part in item.get('loc', ()))
        if first_field is None and path:
            first_field = path
        lines.append(f"{path}: {item.get('msg')}" if path else str(item.get('msg')))
    return '; '.join(lines), first_field


def validate_config_dict(data: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except PydanticValidationError as e:
        message, field = format_validation_error(e)
        error = ConfigError(message)
        error.field = field
        raise error from e
    except ValidationError as e:
        raise ConfigError(str(e), e.field) from e


def load_experiment_config(path: Optional[str] = None,
                           overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Load, merge and validate an experiment config.

    Args:
        path: JSON file merged over the defaults, or None for defaults only
        overrides: Dotted-path values applied before validation (CLI flags)

    Raises:
        ConfigError: with the dotted field path of the first problem
    """
    config = Config(path)
    for key, value in (overrides or {}).items():
        if value is not None:
            config.set(key, value)
    validated = validate_config_dict(config.to_dict())
    logger.debug(f"validated config for scenario {validated.scenario} (seed {validated.base_seed})")
    return validated
