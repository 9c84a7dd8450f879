"""
Controller layer: experiment plans and batch runners.
Coordinates generators, solvers and measures, and writes plot-ready
CSV rows plus a JSON summary.
"""
import enum
import json
import logging
import os
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from baselines import (METHOD_PAIRS, BaselinePreset, ConvergenceError, PresetKind, classic_hits,
                       preset_config_text, preset_configuration, run_method)
from configurations import ShiftedConfiguration, enumerate_configs, format_sequence, parse_config
from engine import NonConvergenceError, SolverSettings, convergence_probe, solve
from generators import GeneratorKind, GeneratorSpec, MultiplexSpec, generate_multiplex
from measures import (TABLE_NODE_SIZES, UndefinedMeasureError, concatenate_rankings, confidence_interval,
                      cost_table, multijaccard, weighted_kendall_tau)
from multiplex import MultiplexNetwork, ScoreVector

logger = logging.getLogger(__name__)

__version__ = '0.1.0'

THREADS_ENV = 'MULTIRANK_THREADS'
DESK_NODE_SIZES = (64, 128, 256)
FULL_NODE_SIZES = (64, 128, 256, 512, 1024)
DESK_REPETITIONS = 8
FULL_REPETITIONS = 32

# failures that are recorded on the row instead of aborting the batch
ROW_FAILURES = (NonConvergenceError, ConvergenceError, UndefinedMeasureError)


class PlanError(ValueError):
    """Raised for an invalid experiment plan."""


class Batch(str, enum.Enum):
    COMPARE_METHODS = 'compare-methods'
    CONFIG_IMPACT = 'config-impact'
    SHIFT_IMPACT = 'shift-impact'
    CONVERGENCE = 'convergence'
    LAYER_COUNT = 'layer-count'
    COST_TABLE = 'cost-table'


COLUMNS: Dict[Batch, List[str]] = {
    Batch.COMPARE_METHODS: ['generator', 'n', 'p', 'repetition', 'multijaccard', 'reference', 'method',
                            'config', 'shift', 'tau_w', 'status'],
    Batch.CONFIG_IMPACT: ['generator', 'n', 'p', 'repetition', 'multijaccard', 'reference', 'config',
                          'shift', 'member', 'tau_w', 'status'],
    Batch.CONVERGENCE: ['generator', 'n', 'repetition', 'halving', 'tau', 'l1_error', 'error_over_tau',
                        'inner_iterations', 'status'],
    Batch.LAYER_COUNT: ['generator', 'n', 'layers', 'repetition', 'total_iterations', 'stages', 'status'],
}
COLUMNS[Batch.SHIFT_IMPACT] = COLUMNS[Batch.CONFIG_IMPACT]


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything needed to rerun a batch deterministically."""
    batch: Batch
    generators: Tuple[GeneratorKind, ...] = (GeneratorKind.ERDOS_RENYI, GeneratorKind.SBM)
    node_sizes: Tuple[int, ...] = DESK_NODE_SIZES
    layers: int = 2
    p_start: float = 0.0
    p_stop: float = 1.0
    p_step: float = 0.05
    repetitions: int = DESK_REPETITIONS
    seed: int = 0
    output: Optional[str] = None
    er_p: float = 0.5
    sbm_p_in: float = 0.5
    sbm_p_out: float = 0.2
    layer_prob: float = 0.5
    configs: Tuple[str, ...] = ()
    shifts: Tuple[int, ...] = ()
    max_layers: int = 6
    reference_halvings: int = 12
    deterministic: bool = False
    settings: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        object.__setattr__(self, 'batch', Batch(self.batch))
        object.__setattr__(self, 'generators', tuple(GeneratorKind(g) for g in self.generators))
        object.__setattr__(self, 'node_sizes', tuple(int(n) for n in self.node_sizes))
        object.__setattr__(self, 'configs', tuple(self.configs))
        object.__setattr__(self, 'shifts', tuple(int(h) for h in self.shifts))
        if not self.p_step > 0:
            raise PlanError("p step must be positive")
        if self.repetitions < 1:
            raise PlanError("repetitions must be at least 1")
        if self.layers < 1 or not self.node_sizes or min(self.node_sizes) < 2:
            raise PlanError("need at least one layer and node sizes >= 2")
        if not self.generators:
            raise PlanError("at least one generator kind is required")
        if self.max_layers < 2:
            raise PlanError("layer-count sweep needs max_layers >= 2")

    @classmethod
    def default_for(cls, batch: Batch, full_scale: bool = False, **overrides) -> 'ExperimentPlan':
        """Desk-scale (or full-scale) defaults for a batch, then overrides."""
        batch = Batch(batch)
        values = {
            'node_sizes': FULL_NODE_SIZES if full_scale else DESK_NODE_SIZES,
            'repetitions': FULL_REPETITIONS if full_scale else DESK_REPETITIONS,
        }
        if batch in (Batch.CONFIG_IMPACT, Batch.SHIFT_IMPACT):
            values['node_sizes'] = (256,) if full_scale else (64,)
        if batch is Batch.SHIFT_IMPACT:
            values['shifts'] = (1, 3)
        if batch is Batch.COST_TABLE:
            values['node_sizes'] = TABLE_NODE_SIZES
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(batch=batch, **values)

    def p_values(self) -> List[float]:
        count = int(np.floor((self.p_stop - self.p_start) / self.p_step + 1e-9)) + 1
        return [round(self.p_start + i * self.p_step, 10) for i in range(max(count, 0))]

    def base_spec(self, kind: GeneratorKind, n: int, seed: int) -> GeneratorSpec:
        if kind is GeneratorKind.ERDOS_RENYI:
            return GeneratorSpec.erdos_renyi(n, self.er_p, seed)
        return GeneratorSpec.two_block_sbm(n, self.sbm_p_in, self.sbm_p_out, seed)

    def to_dict(self) -> dict:
        return {
            'batch': self.batch.value,
            'generators': [g.value for g in self.generators],
            'node_sizes': list(self.node_sizes),
            'layers': self.layers,
            'p_start': self.p_start,
            'p_stop': self.p_stop,
            'p_step': self.p_step,
            'repetitions': self.repetitions,
            'seed': self.seed,
            'output': self.output,
            'er_p': self.er_p,
            'sbm_p_in': self.sbm_p_in,
            'sbm_p_out': self.sbm_p_out,
            'layer_prob': self.layer_prob,
            'configs': list(self.configs),
            'shifts': list(self.shifts),
            'max_layers': self.max_layers,
            'reference_halvings': self.reference_halvings,
            'deterministic': self.deterministic,
            'settings': self.settings.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ExperimentPlan':
        data = dict(data)
        try:
            if 'settings' in data:
                data['settings'] = SolverSettings.from_dict(data['settings'])
            return cls(**data)
        except (TypeError, ValueError) as e:
            if isinstance(e, PlanError):
                raise
            raise PlanError(f"invalid plan: {e}") from None


def load_plan(file_path: str) -> ExperimentPlan:
    """
    Load an experiment plan from a JSON file.

    Raises:
        FileNotFoundError: If the file doesn't exist
        PlanError: If the JSON is malformed or describes an invalid plan
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError(f"Plan file not found: {file_path}")
    with open(file_path, 'r', encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise PlanError(f"plan file is not valid JSON: {e}") from None
    return ExperimentPlan.from_dict(data)


def save_plan(plan: ExperimentPlan, file_path: str) -> None:
    with open(file_path, 'w', encoding='utf-8') as f:
        json.dump(plan.to_dict(), f, indent=2)


def worker_count() -> int:
    """Work pool size: MULTIRANK_THREADS if set to a positive integer, else the CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            value = int(raw)
            if value >= 1:
                return value
        except ValueError:
            pass
        logger.warning("ignoring invalid %s=%r", THREADS_ENV, raw)
    return os.cpu_count() or 1


def version_string() -> str:
    """git-describe of the checkout when available, else the package version."""
    try:
        described = subprocess.run(
            ['git', 'describe', '--tags', '--always', '--dirty'],
            cwd=os.path.dirname(os.path.abspath(__file__)),
            capture_output=True, text=True, timeout=5, check=True,
        ).stdout.strip()
        if described:
            return described
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"


def task_seed(root: int, *key: int) -> int:
    """Independent 64-bit seed for one task, derived from the plan seed."""
    return int(np.random.SeedSequence(root, spawn_key=tuple(int(k) for k in key)).generate_state(1, np.uint64)[0])


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    rows: pd.DataFrame
    summary: dict


def _tau_or_failure(reference: List[ScoreVector], candidate: List[ScoreVector]) -> Tuple[float, str]:
    try:
        return weighted_kendall_tau(concatenate_rankings(reference), concatenate_rankings(candidate)).tau_w, 'ok'
    except UndefinedMeasureError as e:
        return float('nan'), f"undefined: {e}"


class ExperimentRunner:
    """Runs one plan: builds the task list, executes it in a work pool, and aggregates."""

    def __init__(self, plan: ExperimentPlan, progress: bool = False, workers: Optional[int] = None):
        self.plan = plan
        self.progress = progress
        self.workers = workers or worker_count()

    def run(self) -> ExperimentResult:
        batch = self.plan.batch
        logger.info("running %s with %d worker(s)", batch.value, self.workers)
        if batch is Batch.COST_TABLE:
            rows = cost_table(self.plan.node_sizes, self.plan.layers)
        else:
            handlers: Dict[Batch, Tuple[Callable[[], List[tuple]], Callable[[tuple], List[dict]]]] = {
                Batch.COMPARE_METHODS: (self._sweep_tasks, self._compare_methods_task),
                Batch.CONFIG_IMPACT: (self._sweep_tasks, self._config_impact_task),
                Batch.SHIFT_IMPACT: (self._sweep_tasks, self._config_impact_task),
                Batch.CONVERGENCE: (self._convergence_tasks, self._convergence_task),
                Batch.LAYER_COUNT: (self._layer_count_tasks, self._layer_count_task),
            }
            make_tasks, run_task = handlers[batch]
            rows = pd.DataFrame(self._execute(make_tasks(), run_task), columns=COLUMNS[batch])
        return ExperimentResult(plan=self.plan, rows=rows, summary=self._summarize(rows))

    def _execute(self, tasks: List[tuple], run_task: Callable[[tuple], List[dict]]) -> List[dict]:
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            results = list(tqdm(pool.map(run_task, tasks), total=len(tasks), disable=not self.progress,
                                desc=self.plan.batch.value))
        return [row for task_rows in results for row in task_rows]

    # task lists: tuples of (generator, n, ..., repetition, seed)

    def _sweep_tasks(self) -> List[tuple]:
        plan = self.plan
        tasks = []
        for g_index, kind in enumerate(plan.generators):
            for n in plan.node_sizes:
                for p_index, p in enumerate(plan.p_values()):
                    for rep in range(plan.repetitions):
                        tasks.append((kind, n, p, rep, task_seed(plan.seed, g_index, n, p_index, rep)))
        return tasks

    def _convergence_tasks(self) -> List[tuple]:
        plan = self.plan
        return [
            (kind, n, rep, task_seed(plan.seed, g_index, n, rep))
            for g_index, kind in enumerate(plan.generators)
            for n in plan.node_sizes
            for rep in range(plan.repetitions)
        ]

    def _layer_count_tasks(self) -> List[tuple]:
        plan = self.plan
        return [
            (kind, n, layers, rep, task_seed(plan.seed, g_index, n, layers, rep))
            for g_index, kind in enumerate(plan.generators)
            for n in plan.node_sizes
            for layers in range(2, plan.max_layers + 1)
            for rep in range(plan.repetitions)
        ]

    def _multiplex(self, kind: GeneratorKind, n: int, layer_probs: Sequence[float], seed: int) -> MultiplexNetwork:
        base_seed, layer_seed = (task_seed(seed, 0), task_seed(seed, 1))
        mspec = MultiplexSpec(self.plan.base_spec(kind, n, base_seed), tuple(layer_probs),
                              independent=True, seed=layer_seed)
        return generate_multiplex(mspec)

    def _compare_methods_task(self, task: tuple) -> List[dict]:
        kind, n, p, rep, seed = task
        plan = self.plan
        network = self._multiplex(kind, n, [p] * plan.layers, seed)
        overlap = multijaccard(network) if network.layer_count > 1 else 1.0
        rows = []
        for native, framework in METHOD_PAIRS:
            sc = parse_config(preset_config_text(framework, network.layer_count), network.layer_count)
            row = {'generator': kind.value, 'n': n, 'p': p, 'repetition': rep, 'multijaccard': overlap,
                   'reference': native.value, 'method': framework.value, 'config': str(sc.config),
                   'shift': sc.shift}
            try:
                reference, _ = run_method(network, BaselinePreset(native), plan.settings)
                candidate, _ = run_method(network, BaselinePreset(framework), plan.settings)
                row['tau_w'], row['status'] = _tau_or_failure(reference, candidate)
            except ROW_FAILURES as e:
                logger.warning("%s/%s n=%d p=%g rep=%d: %s", native.value, framework.value, n, p, rep, e)
                row['tau_w'], row['status'] = float('nan'), f"failed: {e}"
            rows.append(row)
        return rows

    def impact_configurations(self) -> List[ShiftedConfiguration]:
        """Configurations and shifts covered by the config/shift impact batches."""
        plan = self.plan
        k = 2 * plan.layers
        if plan.configs:
            configs = [parse_config(text, plan.layers).config for text in plan.configs]
        else:
            configs = enumerate_configs(plan.layers, k=k)
        selected = []
        for config in configs:
            if config.k != k:
                raise PlanError(f"configuration {config} has length {config.k}; comparison against "
                                f"per-layer HITS needs length {k}")
            shifts = plan.shifts or tuple(range(config.k))
            selected.extend(ShiftedConfiguration(config, h) for h in shifts if h < config.k)
        return selected

    def _config_impact_task(self, task: tuple) -> List[dict]:
        kind, n, p, rep, seed = task
        plan = self.plan
        network = self._multiplex(kind, n, [p] * plan.layers, seed)
        overlap = multijaccard(network) if network.layer_count > 1 else 1.0
        rows = []
        try:
            reference = []
            for layer in network.layers:
                reference.extend(classic_hits(layer))
        except ConvergenceError as e:
            reference = None
            reference_failure = f"failed: {e}"
        for sc in self.impact_configurations():
            row = {'generator': kind.value, 'n': n, 'p': p, 'repetition': rep, 'multijaccard': overlap,
                   'reference': PresetKind.HITS.value, 'config': str(sc.config), 'shift': sc.shift,
                   'member': format_sequence(sc.sequence)}
            if reference is None:
                row['tau_w'], row['status'] = float('nan'), reference_failure
                rows.append(row)
                continue
            try:
                report = solve(network, sc, plan.settings)
                row['tau_w'], row['status'] = _tau_or_failure(reference, report.rankings)
            except ROW_FAILURES as e:
                logger.warning("%s n=%d p=%g rep=%d: %s", sc, n, p, rep, e)
                row['tau_w'], row['status'] = float('nan'), f"failed: {e}"
            rows.append(row)
        return rows

    def _convergence_task(self, task: tuple) -> List[dict]:
        kind, n, rep, seed = task
        plan = self.plan
        network = self._multiplex(kind, n, [plan.layer_prob] * plan.layers, seed)
        layers, sc = preset_configuration(PresetKind.HITS_LIKE, network)
        base = {'generator': kind.value, 'n': n, 'repetition': rep}
        try:
            points = convergence_probe(layers, sc, plan.settings, plan.reference_halvings)
        except NonConvergenceError as e:
            logger.warning("convergence n=%d rep=%d: %s", n, rep, e)
            return [dict(base, halving=-1, tau=float('nan'), l1_error=float('nan'),
                         error_over_tau=float('nan'), inner_iterations=0, status=f"failed: {e}")]
        return [
            dict(base, halving=p.halving, tau=p.tau, l1_error=p.l1_error, error_over_tau=p.error_over_tau,
                 inner_iterations=p.inner_iterations, status='ok')
            for p in points
        ]

    def _layer_count_task(self, task: tuple) -> List[dict]:
        kind, n, layer_count, rep, seed = task
        plan = self.plan
        network = self._multiplex(kind, n, [plan.layer_prob] * layer_count, seed)
        layers, sc = preset_configuration(PresetKind.HITS_LIKE, network)
        row = {'generator': kind.value, 'n': n, 'layers': layer_count, 'repetition': rep}
        try:
            report = solve(layers, sc, plan.settings)
            row.update(total_iterations=report.total_iterations, stages=len(report.per_tau_trace), status='ok')
        except NonConvergenceError as e:
            row.update(total_iterations=sum(s.inner_iterations for s in e.trace), stages=len(e.trace),
                       status=f"failed: {e}")
        return [row]

    def _summarize(self, rows: pd.DataFrame) -> dict:
        plan = self.plan
        summary = {
            'plan': plan.to_dict(),
            'version': version_string(),
            'generated': None if plan.deterministic else datetime.now().isoformat(),
            'rows': int(len(rows)),
        }
        if plan.batch is Batch.COST_TABLE:
            return summary
        summary['failures'] = int((rows['status'] != 'ok').sum())
        keys, value = {
            Batch.COMPARE_METHODS: (['generator', 'n', 'p', 'reference', 'method'], 'tau_w'),
            Batch.CONFIG_IMPACT: (['generator', 'n', 'p', 'config', 'shift', 'member'], 'tau_w'),
            Batch.SHIFT_IMPACT: (['generator', 'n', 'p', 'shift', 'member'], 'tau_w'),
            Batch.CONVERGENCE: (['generator', 'n', 'halving'], 'l1_error'),
            Batch.LAYER_COUNT: (['generator', 'n', 'layers'], 'total_iterations'),
        }[plan.batch]
        summary['aggregates'] = aggregate(rows[rows['status'] == 'ok'], keys, value)
        return summary


def aggregate(rows: pd.DataFrame, keys: List[str], value: str) -> List[dict]:
    """Mean and Student-t interval of one column per group, plus mean MultiJaccard when present."""
    records = []
    if rows.empty:
        return records
    for group_key, group in rows.groupby(keys, sort=True):
        samples = group[value].dropna().astype(float).to_numpy()
        record = dict(zip(keys, group_key if isinstance(group_key, tuple) else (group_key,)))
        record = {k: (v.item() if hasattr(v, 'item') else v) for k, v in record.items()}
        record['count'] = int(samples.size)
        record[f'mean_{value}'] = float(samples.mean()) if samples.size else None
        if samples.size >= 2:
            ci = confidence_interval(samples)
            record['ci_lo'], record['ci_hi'] = ci.lo, ci.hi
        else:
            record['ci_lo'] = record['ci_hi'] = None
        if 'multijaccard' in group:
            record['multijaccard'] = float(group['multijaccard'].mean())
        if 'error_over_tau' in group:
            record['mean_error_over_tau'] = float(group['error_over_tau'].mean())
        records.append(record)
    return records


def write_outputs(result: ExperimentResult, output: str) -> Tuple[str, str]:
    """
    Write the row CSV and the JSON summary next to it.

    Without ``deterministic`` the CSV starts with a ``# generated`` timestamp line.

    Returns:
        (csv path, json path)
    """
    csv_path = output
    json_path = os.path.splitext(output)[0] + '.summary.json'
    with open(csv_path, 'w', encoding='utf-8', newline='') as f:
        if not result.plan.deterministic:
            f.write(f"# generated {datetime.now().isoformat()}\n")
        result.rows.to_csv(f, index=False)
    with open(json_path, 'w', encoding='utf-8') as f:
        json.dump(result.summary, f, indent=2, allow_nan=True)
    return csv_path, json_path


def run_experiment(plan: ExperimentPlan, progress: bool = False) -> ExperimentResult:
    """Run a plan; writes outputs when plan.output is set."""
    result = ExperimentRunner(plan, progress=progress).run()
    if plan.output:
        write_outputs(result, plan.output)
    return result
