"""
Benchmark harness: run (method, seed) sweeps and write trace, plot and summary files.

Runs are independent and may execute in a process pool. Each worker writes
its own trace and plot CSVs; the summary is aggregated in the parent after
all runs have finished, in the deterministic order of the run list.
"""

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import psutil

from .config import ExperimentConfig, MethodConfig
from .core import RunStatus, RunTrace, SolverConfig
from .problems import make_problem
from .solvers import certify_solution, solve

logger = logging.getLogger('vibench.bench')

TRACE_HEADER = ["n", "step_diff", "residual", "eta", "ls_trials", "gamma_n", "elapsed_s"]
PLOT_HEADER = ["n", "step_diff", "x_norm"]
DEFAULT_GAMMAS = (0.01, 0.1, 0.5, 0.8)
ERROR_STATUS = "error"


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    return f"{value:.17g}"


def emit_trace_csv(trace: RunTrace, path, timings: bool = True) -> Path:
    """Write one row per IterationRecord; absent Gamma_n is an empty field."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(TRACE_HEADER)
        for rec in trace.records:
            writer.writerow([
                rec.n,
                _fmt(rec.step_diff),
                _fmt(rec.residual),
                _fmt(rec.eta),
                rec.ls_trials,
                _fmt(rec.gamma_n),
                _fmt(rec.elapsed) if timings else "",
            ])
    return path


def emit_plot_csv(trace: RunTrace, path) -> Path:
    """Iteration against ||x_{n+1} - x_n|| and ||x_{n+1}||."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(PLOT_HEADER)
        for rec in trace.records:
            writer.writerow([rec.n, _fmt(rec.step_diff), _fmt(rec.x_norm)])
    return path


@dataclass(frozen=True)
class RunSpec:
    family: str
    params: Dict[str, object]
    method: MethodConfig
    seed: int
    repetition: int
    output_dir: str
    timings: bool = True


@dataclass
class RunResult:
    """Outcome of one (method, seed, repetition) run.

    ``cpu_time`` is the wall-clock time of the solve loop alone, the figure the
    summary tables compare. ``wall_time`` also covers solver setup and
    ``process_cpu_time`` is the process CPU time spent in the solve.
    """
    method: str
    method_name: str
    problem: str
    seed: int
    repetition: int
    status: str
    iterations: int = 0
    cpu_time: Optional[float] = None
    wall_time: Optional[float] = None
    process_cpu_time: Optional[float] = None
    final_metric: Optional[float] = None
    violations: int = 0
    message: str = ""
    trace_file: str = ""
    plot_file: str = ""
    diagnostics: Dict[str, object] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status in (RunStatus.CONVERGED.value, RunStatus.EXACT_SOLUTION_FOUND.value)


@dataclass(frozen=True)
class SummaryRow:
    """Per-method aggregate; iteration, CPU and metric stats cover converged runs only."""
    method: str
    problem: str
    runs: int
    converged: int
    failed: int
    iter_median: Optional[float]
    iter_mean: Optional[float]
    iter_min: Optional[int]
    iter_max: Optional[int]
    cpu_median: Optional[float]
    cpu_mean: Optional[float]
    cpu_min: Optional[float]
    cpu_max: Optional[float]
    metric_median: Optional[float]
    metric_mean: Optional[float]
    metric_min: Optional[float]
    metric_max: Optional[float]
    violations: int


@dataclass
class ExperimentReport:
    rows: List[SummaryRow]
    results: List[RunResult]
    table: str
    output_dir: Path

    @property
    def violations(self) -> int:
        return sum(r.violations for r in self.results)

    @property
    def failures(self) -> int:
        return sum(1 for r in self.results if not r.converged)


def _run_stem(problem: str, method: str, seed: int, repetition: int) -> str:
    return f"{problem}__{method}__seed{seed}__rep{repetition}"


def _cpu_seconds() -> float:
    times = psutil.Process().cpu_times()
    return times.user + times.system


def execute_run(spec: RunSpec) -> RunResult:
    """Generate the instance, solve it and write its CSVs.

    Any exception is recorded in the result instead of propagating so one bad
    run never aborts a sweep.
    """
    method = spec.method
    try:
        problem = make_problem(spec.family, spec.params, spec.seed)
    except Exception as e:
        logger.error(f"Failed to generate {spec.family} (seed {spec.seed}): {e}")
        return RunResult(method.display_name, method.name, spec.family, spec.seed, spec.repetition,
                         ERROR_STATUS, message=f"generation failed: {e}")

    result = RunResult(method.display_name, method.name, problem.label, spec.seed, spec.repetition,
                       ERROR_STATUS)
    try:
        cpu_start = _cpu_seconds()
        wall_start = time.perf_counter()
        trace = solve(problem.operator, problem.feasible, method.name, method.solver,
                      problem.x1, problem.known)
        result.wall_time = time.perf_counter() - wall_start
        result.process_cpu_time = _cpu_seconds() - cpu_start
        result.cpu_time = trace.elapsed
    except Exception as e:
        logger.error(f"Run {method.display_name} on {problem.label} (seed {spec.seed}) failed: {e}")
        result.message = str(e)
        return result

    result.status = trace.status.value
    result.iterations = trace.iterations
    result.final_metric = trace.final_metric(method.solver.stop_rule)
    result.violations = len(trace.violations)
    result.message = trace.message
    result.diagnostics = dict(trace.diagnostics)
    if problem.known.x_star is None and trace.converged:
        result.diagnostics['minty_min'] = certify_solution(problem.operator, problem.feasible,
                                                           trace.final_point, seed=spec.seed)
    if not spec.timings:
        result.cpu_time = None
        result.wall_time = None
        result.process_cpu_time = None

    stem = _run_stem(problem.label, method.display_name, spec.seed, spec.repetition)
    out = Path(spec.output_dir)
    result.trace_file = str(emit_trace_csv(trace, out / "traces" / f"{stem}.csv", spec.timings))
    result.plot_file = str(emit_plot_csv(trace, out / "plots" / f"{stem}.csv"))
    return result


def _stats(values: Sequence[float]) -> Tuple[Optional[float], Optional[float], Optional[float], Optional[float]]:
    if not values:
        return None, None, None, None
    arr = np.asarray(values, dtype=np.float64)
    return float(np.median(arr)), float(np.mean(arr)), float(arr.min()), float(arr.max())


def summarize(groups: Dict[str, List[RunResult]]) -> Tuple[List[SummaryRow], str]:
    """Aggregate runs per method and render the text table."""
    rows: List[SummaryRow] = []
    for method, results in groups.items():
        if not results:
            raise ValueError(f"summary group '{method}' is empty")
        good = [r for r in results if r.converged]
        it_med, it_mean, it_min, it_max = _stats([r.iterations for r in good])
        cpu_values = [r.cpu_time for r in good if r.cpu_time is not None]
        cpu_med, cpu_mean, cpu_min, cpu_max = _stats(cpu_values)
        met_med, met_mean, met_min, met_max = _stats([r.final_metric for r in good if r.final_metric is not None])
        rows.append(SummaryRow(
            method=method,
            problem=results[0].problem,
            runs=len(results),
            converged=len(good),
            failed=len(results) - len(good),
            iter_median=it_med,
            iter_mean=it_mean,
            iter_min=None if it_min is None else int(it_min),
            iter_max=None if it_max is None else int(it_max),
            cpu_median=cpu_med,
            cpu_mean=cpu_mean,
            cpu_min=cpu_min,
            cpu_max=cpu_max,
            metric_median=met_med,
            metric_mean=met_mean,
            metric_min=met_min,
            metric_max=met_max,
            violations=sum(r.violations for r in results),
        ))
    return rows, render_table(rows)


def _cell(value, spec: str) -> str:
    return "-" if value is None else format(value, spec)


def render_table(rows: Iterable[SummaryRow]) -> str:
    header = (f"{'method':<22} {'problem':<28} {'runs':>5} {'conv':>5} {'iter med':>10} "
              f"{'iter mean':>10} {'iter min':>9} {'iter max':>9} {'cpu med':>10} {'cpu mean':>10} "
              f"{'metric med':>12} {'viol':>5}")
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.method:<22} {row.problem:<28} {row.runs:>5} {row.converged:>5} "
            f"{_cell(row.iter_median, '10.1f')} {_cell(row.iter_mean, '10.1f')} "
            f"{_cell(row.iter_min, '9d')} {_cell(row.iter_max, '9d')} "
            f"{_cell(row.cpu_median, '10.4f')} {_cell(row.cpu_mean, '10.4f')} "
            f"{_cell(row.metric_median, '12.4e')} {row.violations:>5}"
        )
    return "\n".join(lines) + "\n"


def build_run_specs(cfg: ExperimentConfig, output_dir: Path) -> List[RunSpec]:
    return [
        RunSpec(cfg.problem.family, dict(cfg.problem.params), method, seed, rep, str(output_dir), cfg.timings)
        for method in cfg.methods
        for seed in cfg.problem.seeds
        for rep in range(cfg.repetitions)
    ]


def default_workers(n_runs: int) -> int:
    physical = psutil.cpu_count(logical=False) or 1
    return max(1, min(physical, n_runs))


def run_experiment(cfg: ExperimentConfig, output_dir=None) -> ExperimentReport:
    """Run every (method, seed, repetition) and persist traces plus the summary."""
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    specs = build_run_specs(cfg, out)
    workers = min(cfg.workers, len(specs)) if cfg.workers else default_workers(len(specs))

    logger.info(f"Running {len(specs)} runs of {cfg.problem.family} "
                f"({len(cfg.methods)} methods, {len(cfg.problem.seeds)} seeds) with {workers} workers")
    start = time.perf_counter()
    if workers == 1:
        results = [execute_run(spec) for spec in specs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(execute_run, specs))
    logger.info(f"Finished {len(specs)} runs in {time.perf_counter() - start:.2f}s")

    groups: Dict[str, List[RunResult]] = {}
    for result in results:
        groups.setdefault(result.method, []).append(result)
        if not result.converged:
            logger.warning(f"{result.method} seed {result.seed}: {result.status} {result.message}".rstrip())
    rows, table = summarize(groups)

    write_summary(out, rows, results, table)
    return ExperimentReport(rows=rows, results=results, table=table, output_dir=out)


def _json_ready(value):
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_summary(out: Path, rows: List[SummaryRow], results: List[RunResult], table: str) -> None:
    summary = {
        'rows': [asdict(row) for row in rows],
        'runs': [asdict(result) for result in results],
    }
    with open(out / "summary.json", 'w') as f:
        json.dump(_json_ready(summary), f, indent=2)
        f.write("\n")
    with open(out / "summary.txt", 'w') as f:
        f.write(table)


def gamma_sweep(cfg: ExperimentConfig, gammas: Sequence[float] = DEFAULT_GAMMAS,
                method: str = "alg1") -> ExperimentConfig:
    """Replace the method list by one ``method`` entry per line-search factor."""
    base = next((m.solver for m in cfg.methods if m.name == method), None)
    if base is None:
        base = SolverConfig(stop_rule=cfg.stop_rule, tol=cfg.tol, max_iter=cfg.max_iter, mode=cfg.mode)
    entries = []
    for g in gammas:
        solver = base.with_overrides(gamma=float(g))
        solver.validate(method, f"methods[gamma={g:g}]")
        entries.append(MethodConfig(name=method, solver=solver, label=f"{method}_gamma{g:g}"))
    return replace(cfg, methods=entries)
