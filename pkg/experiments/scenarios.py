"""
Named experiment scenarios.

A scenario turns a validated ExperimentConfig into report rows and a
summary. Every random draw is seeded from config.base_seed, so a config
reproduces its numbers exactly for any worker count.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from coding.circuits import Circuit, GateOp
from coding.encoded_gates import (
    encoded_controlled_phase,
    encoded_rotation,
    logical_cnot_sequence,
    lower_to_case,
    op_bb_compatible,
)
from coding.jump_code import CodeSpec, encode
from core.errors import QuantumError, StepSizeError
from core.states import DensityMatrix, StateVector, haar_random_state
from dynamics.branches import few_jump_expansion, loglog_slope
from dynamics.coherence import (
    MODES,
    coherence_statistics,
    extrapolated_slopes,
    first_order_coefficients,
    richardson_extrapolate,
)
from dynamics.decoupling import PulseSchedule
from dynamics.lindblad import lindblad_integrate
from dynamics.noise import DetectorModel, NoiseModel
from dynamics.trajectory import (
    ProtocolSchedule,
    RecoveryPolicy,
    ScheduledGate,
    TrajectoryRecord,
    derive_seed,
    recovery_feedback,
    run_ensemble,
    run_trajectory,
)
from utils.logging_config import LoggerAdapter, get_context_logger
from utils.metrics import MetricsCollector
from utils.validation import ValidationError

from .models import SCENARIO_NAMES, ConfigError, ExperimentConfig
from .report import ExperimentReport
from .verification import run_verification

logger = logging.getLogger(__name__)

DEFAULT_DETECTOR_POINTS = (
    (0.0, 0.0),
    (0.05, 0.0),
    (0.1, 0.0),
    (0.2, 0.0),
    (0.0, 0.05),
    (0.0, 0.1),
    (0.0, 0.2),
)

# Detection windows in units of 1/max κ
DEFAULT_WINDOWS = (0.02, 0.04, 0.1, 0.2)

# Haar averages of 2|β|⁴ and |α|⁴ + |β|⁴
HAAR_FIRST_ORDER = {'free': 2.0 / 3.0, 'pulsed': 2.0 / 3.0}

ScenarioRunner = Callable[[ExperimentConfig, LoggerAdapter], Tuple[List[Dict[str, Any]], Dict[str, Any]]]


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    runner: ScenarioRunner


SCENARIOS: Dict[str, Scenario] = {}


def register_scenario(name: str, description: str) -> Callable[[ScenarioRunner], ScenarioRunner]:
    def decorator(runner: ScenarioRunner) -> ScenarioRunner:
        SCENARIOS[name] = Scenario(name, description, runner)
        return runner
    return decorator


def list_scenarios() -> List[Tuple[str, str]]:
    return [(name, SCENARIOS[name].description) for name in SCENARIO_NAMES if name in SCENARIOS]


# Building blocks

def build_noise(config: ExperimentConfig) -> NoiseModel:
    detector = DetectorModel(config.noise.p_undetected, config.noise.p_misidentify)
    return NoiseModel(config.rates(), detector)


def initial_logical_state(config: ExperimentConfig) -> StateVector:
    if config.initial_state == 'random':
        return haar_random_state(config.n, derive_seed(config.base_seed, 'initial_state'))
    return StateVector.from_bitstring(config.initial_state)


def _step_ops(config: ExperimentConfig, index: int) -> Tuple[List[GateOp], str]:
    step = config.gate_program[index]
    n = config.n
    if step.gate is not None:
        return [GateOp(step.gate, tuple(step.qubits), step.angle)], step.gate
    if step.sequence == 'logical_cnot':
        i, j = step.qubits
        sequence = logical_cnot_sequence(i, j, step.case or 1, n)
    elif step.sequence == 'encoded_cp':
        i, j = step.qubits
        sequence = encoded_controlled_phase(n, i, j)
    else:
        sequence = encoded_rotation(n, step.qubits[0], step.axis, step.angle)
    if step.case is not None and step.sequence != 'logical_cnot':
        sequence = lower_to_case(sequence, step.case, config.num_physical)
    return list(sequence.ops), step.sequence


def build_program(config: ExperimentConfig, bb_enabled: bool) -> Tuple[ScheduledGate, ...]:
    """
    Turn the gate program into instantaneous scheduled unitaries.

    Raises:
        ConfigError: for an invalid step, or a step with a generator that
            does not commute with the collective pulse at an instant that
            follows an odd number of pulses
    """
    pulses = PulseSchedule(config.T_c)
    num_physical = config.num_physical
    gates = []
    for index, step in enumerate(config.gate_program):
        prefix = f"gate_program.{index}"
        if step.time > config.duration * (1.0 + 1e-12):
            raise ConfigError(f"time {step.time} is after the end of the run ({config.duration})", f"{prefix}.time")
        try:
            ops, label = _step_ops(config, index)
            circuit = Circuit(num_physical, tuple(ops), label)
        except ValidationError as e:
            field = e.field.split('.')[-1] if e.field else None
            if field == 'i':
                field = 'qubits'
            raise ConfigError(str(e), f"{prefix}.{field}" if field else prefix) from e
        except (QuantumError, ValueError) as e:
            raise ConfigError(str(e), prefix) from e

        compatible = all(op_bb_compatible(op, num_physical) for op in ops)
        if bb_enabled and not compatible and pulses.pulses_before(step.time) % 2 == 1:
            raise ConfigError(
                f"{label} at t={step.time} follows an odd number of pulses; steps that do not commute "
                "with the collective pulse are applied only after an even number of collective BB pulses",
                f"{prefix}.time",
            )
        gates.append(ScheduledGate(step.time, circuit.unitary(), label, compatible))
    return tuple(gates)


def build_schedule(config: ExperimentConfig, bb_enabled: bool, qecc_enabled: bool,
                   parity_check: bool, detection_window: Optional[float] = None) -> ProtocolSchedule:
    """Schedule for one protocol variant; delay and window are converted from 1/max κ units."""
    unit = config.time_unit()
    window = detection_window if detection_window is not None else config.protocol.detection_window
    recovery = None
    if qecc_enabled or parity_check:
        recovery = RecoveryPolicy(
            code=CodeSpec(config.n),
            delay=config.protocol.recovery_delay * unit,
            detection_window=None if window is None else window * unit,
            parity_check=parity_check,
            enabled=qecc_enabled,
        )
    return ProtocolSchedule(
        pulses=PulseSchedule(config.T_c) if bb_enabled else None,
        gates=build_program(config, bb_enabled),
        recovery=recovery,
        dt=config.dt,
    )


def reference_state(encoded: StateVector, schedule: ProtocolSchedule, duration: float) -> StateVector:
    """Noiseless run of the same schedule: the state a perfect memory would hold."""
    silent = NoiseModel((0.0,) * encoded.num_qubits)
    return run_trajectory(encoded, schedule, duration, silent, seed=0).final_state


def _fidelities(records: List[TrajectoryRecord], reference: StateVector) -> np.ndarray:
    ref = reference.amplitudes
    return np.array([abs(np.vdot(ref, r.final_state.amplitudes)) ** 2 for r in records])


def _mean_stderr(samples: np.ndarray) -> Tuple[float, float]:
    mean = float(np.mean(samples))
    if samples.size < 2:
        return mean, 0.0
    return mean, float(np.std(samples, ddof=1) / math.sqrt(samples.size))


def oracle_fidelity(config: ExperimentConfig, encoded: StateVector, reference: StateVector,
                    noise: NoiseModel, schedule: ProtocolSchedule, duration: float) -> Optional[float]:
    """
    Master-equation value of the mean fidelity, when one exists.

    Immediate recovery is folded into the jump term; delayed, windowed or
    parity-checked recovery has no such form and gives None.
    """
    policy = schedule.recovery
    feedback = None
    if policy is not None:
        if policy.parity_check or policy.delay > 0 or policy.detection_window is not None:
            return None
        if policy.enabled:
            feedback = recovery_feedback(noise.detector, policy.code)
    rho = lindblad_integrate(
        DensityMatrix.from_state(encoded), duration, noise,
        pulses=schedule.pulses if schedule.bb_enabled else None,
        unitaries=[(g.time, g.operator) for g in schedule.gates],
        jump_feedback=feedback,
    )
    ref = reference.amplitudes
    return float(np.real(np.vdot(ref, rho.entries @ ref)))


def _protocol_columns(config: ExperimentConfig, bb: bool, qecc: bool, parity: bool,
                      window: Optional[float]) -> Dict[str, Any]:
    return {
        'n': config.n,
        'num_trajectories': config.num_trajectories,
        'gamma': max(config.rates()),
        'T_c': config.T_c,
        'duration': config.duration,
        'bb_enabled': bb,
        'qecc_enabled': qecc,
        'parity_check_enabled': parity,
        'recovery_delay': config.protocol.recovery_delay,
        'detection_window': window,
        'p_undetected': config.noise.p_undetected,
        'p_misidentify': config.noise.p_misidentify,
    }


def _event_columns(records: List[TrajectoryRecord]) -> Dict[str, Any]:
    collector = MetricsCollector()
    for record in records:
        collector.record_trajectory(record)
    m = collector.get_metrics()
    return {
        'total_jumps': m['total_jumps'],
        'detected': m['detected'],
        'undetected': m['undetected'],
        'misidentified': m['misidentified'],
        'correctly_identified': m['correctly_identified'],
        'recoveries': m['recoveries_applied'],
        'restarts': m['restarts'],
        'double_jump_probability': m['double_jump_trajectories'] / max(1, m['trajectories']),
    }


def run_memory_point(config: ExperimentConfig, point: int, label: str, log: LoggerAdapter,
                     bb: Optional[bool] = None, qecc: Optional[bool] = None,
                     parity: Optional[bool] = None, duration: Optional[float] = None,
                     detection_window: Optional[float] = None) -> Dict[str, Any]:
    """
    Run one protected (or unprotected) storage ensemble and summarize it as a row.

    Protocol flags default to the config's; duration defaults to config.duration.
    """
    bb = config.protocol.bb_enabled if bb is None else bb
    qecc = config.protocol.qecc_enabled if qecc is None else qecc
    parity = config.protocol.parity_check_enabled if parity is None else parity
    duration = config.duration if duration is None else duration
    window = detection_window if detection_window is not None else config.protocol.detection_window

    noise = build_noise(config)
    logical = initial_logical_state(config)
    encoded = encode(logical)
    schedule = build_schedule(config, bb, qecc, parity, window)
    reference = reference_state(encoded, schedule, duration)
    seed = derive_seed(config.base_seed, f"point:{point}")

    log.info(f"point {point} ({label}): {config.num_trajectories} trajectories, bb={bb} qecc={qecc} "
             f"parity={parity}")
    records = run_ensemble(encoded, schedule, duration, noise, config.num_trajectories, seed, config.workers)
    mean, stderr = _mean_stderr(_fidelities(records, reference))

    row = {'point': point, 'label': label, 'seed': seed}
    row.update(_protocol_columns(config, bb, qecc, parity, window))
    row['duration'] = duration
    row['dt'] = schedule.max_step(noise, duration)
    row.update(_event_columns(records))
    row['fidelity_mean'] = mean
    row['fidelity_stderr'] = stderr
    row['failure_rate'] = 1.0 - mean
    row['oracle_fidelity'] = oracle_fidelity(config, encoded, reference, noise, schedule, duration)
    log.info(f"point {point} ({label}): fidelity {mean:.6f} ± {stderr:.2e}"
             + (f", oracle {row['oracle_fidelity']:.6f}" if row['oracle_fidelity'] is not None else ""))
    return row


def _sweep_points(config: ExperimentConfig) -> List[Tuple[Any, ExperimentConfig]]:
    try:
        return config.sweep.expand(config)
    except ConfigError as e:
        raise ConfigError(f"sweep {config.sweep.parameter}: {e}", 'sweep.values') from e


def _separation(a: Dict[str, Any], b: Dict[str, Any]) -> Optional[float]:
    spread = math.hypot(a['fidelity_stderr'], b['fidelity_stderr'])
    if spread == 0.0:
        return None
    return (a['fidelity_mean'] - b['fidelity_mean']) / spread


def _oracle_sigma(rows: List[Dict[str, Any]]) -> Dict[str, Optional[float]]:
    result = {}
    for row in rows:
        if row.get('oracle_fidelity') is None or row['fidelity_stderr'] == 0.0:
            continue
        result[row['label']] = (row['fidelity_mean'] - row['oracle_fidelity']) / row['fidelity_stderr']
    return result


# Scenarios

@register_scenario('memory_fidelity', 'Encoded idle storage with and without BB pulses and recovery')
def memory_fidelity(config: ExperimentConfig, log: LoggerAdapter) -> Tuple[List[Dict], Dict]:
    rows = []
    if config.sweep is not None:
        for point, (value, point_config) in enumerate(_sweep_points(config)):
            row = run_memory_point(point_config, point, f"{config.sweep.parameter}={value}", log)
            row['sweep_parameter'] = config.sweep.parameter
            row['sweep_value'] = value
            rows.append(row)
        return rows, {'oracle_deviation_sigma': _oracle_sigma(rows)}

    rows.append(run_memory_point(config, 0, 'configured', log))
    rows.append(run_memory_point(config, 1, 'unprotected', log, bb=False, qecc=False, parity=False))
    summary = {
        'fidelity_gain': rows[0]['fidelity_mean'] - rows[1]['fidelity_mean'],
        'separation_sigma': _separation(rows[0], rows[1]),
        'oracle_deviation_sigma': _oracle_sigma(rows),
    }
    return rows, summary


@register_scenario('detector_sweep', 'Memory fidelity under undetected and misidentified emissions')
def detector_sweep(config: ExperimentConfig, log: LoggerAdapter) -> Tuple[List[Dict], Dict]:
    if config.sweep is not None:
        points = [(config.sweep.parameter, value, cfg) for value, cfg in _sweep_points(config)]
    else:
        points = []
        for p_und, p_mis in DEFAULT_DETECTOR_POINTS:
            cfg = config.with_overrides({'noise.p_undetected': p_und, 'noise.p_misidentify': p_mis})
            points.append(('noise.p_undetected/noise.p_misidentify', f"{p_und}/{p_mis}", cfg))

    rows = []
    for point, (parameter, value, cfg) in enumerate(points):
        row = run_memory_point(cfg, point, f"p_und={cfg.noise.p_undetected},p_mis={cfg.noise.p_misidentify}", log)
        row['sweep_parameter'] = parameter
        row['sweep_value'] = value
        rows.append(row)

    baseline = rows[0]['fidelity_mean']
    summary = {
        'fidelity_drop': {row['label']: baseline - row['fidelity_mean'] for row in rows},
        'oracle_deviation_sigma': _oracle_sigma(rows),
    }
    return rows, summary


@register_scenario('double_jump_scaling', 'Failure probability per detection window against window length')
def double_jump_scaling(config: ExperimentConfig, log: LoggerAdapter) -> Tuple[List[Dict], Dict]:
    if config.sweep is not None and config.sweep.parameter != 'protocol.detection_window':
        raise ConfigError("double_jump_scaling sweeps protocol.detection_window only", 'sweep.parameter')
    windows = [float(w) for w in (config.sweep.values if config.sweep is not None else DEFAULT_WINDOWS)]
    if any(w <= 0 for w in windows):
        raise ConfigError("detection windows must be positive", 'sweep.values')

    unit = config.time_unit()
    noise = build_noise(config)
    code = CodeSpec(config.n)
    bb = config.protocol.bb_enabled
    if not noise.detector.is_perfect:
        log.warning("branch expansion assumes a perfect detector; its column ignores detector errors")

    rows = []
    for point, window in enumerate(windows):
        window_time = window * unit
        if bb and abs(window_time / config.T_c - round(window_time / config.T_c)) > 1e-9:
            log.warning(f"window {window_time:.4g} is not a multiple of T_c; single jumps are not corrected exactly")
        row = run_memory_point(config, point, f"window={window}", log, qecc=True, parity=False,
                               duration=window_time, detection_window=window)
        schedule = build_schedule(config, bb, True, False, window)
        encoded = encode(initial_logical_state(config))
        reference = reference_state(encoded, schedule, window_time)
        expansion = few_jump_expansion(encoded, reference, window_time, noise,
                                       pulses=schedule.pulses if bb else None, code=code)
        row['branch_p_two_or_more'] = expansion.p_two_or_more
        row['oracle_fidelity'] = expansion.fidelity_lower_bound
        row['sweep_parameter'] = 'protocol.detection_window'
        row['sweep_value'] = window
        rows.append(row)

    x = [max(config.rates()) * w * unit for w in windows]
    summary: Dict[str, Any] = {'gamma_window': x}
    if len(windows) >= 2:
        branch = [row['branch_p_two_or_more'] for row in rows]
        if all(p > 0 for p in branch):
            summary['branch_loglog'] = loglog_slope(x, branch)
        mc = [row['double_jump_probability'] for row in rows]
        if all(p > 0 for p in mc):
            summary['monte_carlo_loglog'] = loglog_slope(x, mc)
        else:
            log.warning("some windows saw no double jumps; Monte-Carlo slope omitted")
    return rows, summary


@register_scenario('coherence_compare', 'Single-qubit purity loss with and without BB pulses')
def coherence_compare(config: ExperimentConfig, log: LoggerAdapter) -> Tuple[List[Dict], Dict]:
    if config.sweep is not None:
        raise ConfigError("coherence_compare takes its points from coherence.gamma_tc_values", 'sweep')
    gamma = config.noise.gamma
    if gamma <= 0:
        raise ConfigError("coherence_compare needs a positive emission rate", 'noise.gamma')
    settings = config.coherence
    seed = derive_seed(config.base_seed, 'coherence')

    rows = []
    haar_slopes: Dict[str, Dict[float, float]] = {mode: {} for mode in MODES}
    for point, value in enumerate(settings.gamma_tc_values):
        stats = coherence_statistics(gamma, value / gamma, settings.num_samples, seed)
        slope_free = (1.0 - stats.mean_free) / value
        slope_pulsed = (1.0 - stats.mean_pulsed) / value
        haar_slopes['free'][value] = slope_free
        haar_slopes['pulsed'][value] = slope_pulsed
        rows.append({
            'point': point,
            'label': f"gamma_tc={value:g}",
            'seed': seed,
            'gamma': gamma,
            'T_c': value / gamma,
            'gamma_tc': value,
            'slope_free': slope_free,
            'slope_pulsed': slope_pulsed,
            'coherence_gap': stats.normalized_gap,
        })
        log.info(f"gamma*T_c={value:g}: <C> free {stats.mean_free:.10f} pulsed {stats.mean_pulsed:.10f}")

    alpha, beta = settings.alpha, settings.beta
    analytic = first_order_coefficients(alpha, beta)
    measured = extrapolated_slopes(alpha, beta, settings.gamma_tc_values, gamma)
    summary: Dict[str, Any] = {
        'state': {'alpha': alpha, 'beta': beta, 'measured': measured, 'analytic': analytic},
        'haar_first_order': HAAR_FIRST_ORDER,
    }
    if measured['free'] is not None:
        summary['state']['relative_error'] = {
            'free_derived': _relative(measured['free'], analytic['free_derived']),
            'free_printed': _relative(measured['free'], analytic['free_printed']),
            'pulsed': _relative(measured['pulsed'], analytic['pulsed']),
        }
    if len(settings.gamma_tc_values) >= 2:
        summary['haar_extrapolated'] = {mode: richardson_extrapolate(haar_slopes[mode]) for mode in MODES}
    return rows, summary


def _relative(measured: float, expected: float) -> Optional[float]:
    if expected == 0.0:
        return None if measured != 0.0 else 0.0
    return abs(measured - expected) / abs(expected)


@register_scenario('gate_identities', 'Exact encoded-gate identity and property suite')
def gate_identities(config: ExperimentConfig, log: LoggerAdapter) -> Tuple[List[Dict], Dict]:
    if config.sweep is not None:
        raise ConfigError("gate_identities takes no sweep", 'sweep')
    results = run_verification(config.base_seed)
    rows = []
    for point, result in enumerate(results):
        rows.append({
            'point': point,
            'label': result.name,
            'seed': config.base_seed,
            'check': result.name,
            'max_deviation': result.max_deviation,
            'tolerance': result.tolerance,
            'passed': result.passed,
        })
    failed = [r.name for r in results if not r.passed]
    log.info(f"{len(results) - len(failed)}/{len(results)} identity checks passed")
    summary = {
        'num_checks': len(results),
        'num_failed': len(failed),
        'failed': failed,
        'all_passed': not failed,
        'max_deviation': max(r.max_deviation for r in results),
    }
    return rows, summary


def run_scenario(config: ExperimentConfig) -> ExperimentReport:
    """
    Run the configured scenario.

    Returns:
        ExperimentReport with a config echo that re-validates

    Raises:
        ConfigError: for an unknown scenario or an invalid program
    """
    scenario = SCENARIOS.get(config.scenario)
    if scenario is None:
        raise ConfigError(f"unknown scenario {config.scenario!r}", 'scenario')
    log = get_context_logger(__name__, scenario=config.scenario, seed=config.base_seed)
    log.info(f"running {scenario.name}: {scenario.description}")
    try:
        rows, summary = scenario.runner(config, log)
    except ValidationError as e:
        raise ConfigError(str(e), e.field) from e
    except StepSizeError as e:
        raise ConfigError(str(e), 'dt') from e
    return ExperimentReport(
        scenario=config.scenario,
        seed=config.base_seed,
        config=config.to_dict(),
        rows=rows,
        summary=summary,
    )
