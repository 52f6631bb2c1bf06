"""
Acceptance checks run by ``vibench.py check``.

Each check builds its instances from fixed seeds, runs them and returns an
AcceptanceResult; nothing here raises on a failed criterion.
"""

import filecmp
import itertools
import logging
import tempfile
import time
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from .bench import run_experiment
from .config import ExperimentConfig, config_from_dict
from .core import ConfigError, SolverConfig, inner_product
from .problems import make_problem
from .sets import Box, Halfspace, MomentHyperplane, Polyhedron, WholeSpace
from .solvers import SolverState, solve, step_isem, step_sem

logger = logging.getLogger('vibench.acceptance')

HP_SEEDS = list(range(20))
PROJECTION_CASES = 100
PROJECTION_VI_TOL = 1e-10
POLYHEDRON_MATCH_TOL = 1e-7


class AcceptanceResult(NamedTuple):
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0


def polyhedron_projection_oracle(B_c: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Exact projection onto {u : B_c u <= b} by enumerating active sets.

    For each candidate active set A the equality-constrained minimizer is
    formed in closed form and kept when it is feasible with nonnegative
    multipliers; the nearest such point is returned. Only meant for small
    instances.
    """
    k, dim = B_c.shape
    if np.all(B_c @ x <= b):
        return x.copy()
    best, best_dist = None, np.inf
    for size in range(1, min(k, dim) + 1):
        for active in itertools.combinations(range(k), size):
            A = B_c[list(active)]
            gram = A @ A.T
            if abs(np.linalg.det(gram)) < 1e-12:
                continue
            multipliers = np.linalg.solve(gram, A @ x - b[list(active)])
            if np.any(multipliers < -1e-12):
                continue
            u = x - A.T @ multipliers
            if np.any(B_c @ u - b > 1e-9):
                continue
            dist = float(np.dot(u - x, u - x))
            if dist < best_dist:
                best, best_dist = u, dist
    if best is None:
        raise ValueError("no feasible active set found")
    return best


def _projection_satisfies_vi(S, x: np.ndarray, p: np.ndarray, samples: Sequence[np.ndarray]) -> bool:
    # p = P_S(x) iff <x - p, y - p> <= 0 for every y in S
    scale = max(1.0, float(np.linalg.norm(x - p)))
    return all(inner_product(x - p, y - p) <= PROJECTION_VI_TOL * scale * max(1.0, float(np.linalg.norm(y - p)))
               for y in samples)


def check_projections(seed: int = 0) -> AcceptanceResult:
    rng = np.random.default_rng(seed)
    failures: List[str] = []

    for case in range(PROJECTION_CASES):
        dim = int(rng.integers(1, 8))
        lo = rng.uniform(-2.0, 0.0, dim)
        hi = lo + rng.uniform(0.0, 3.0, dim)
        g = rng.standard_normal(dim)
        sets = {
            'whole_space': WholeSpace(dim),
            'box': Box(lo, hi),
            'halfspace': Halfspace(g if np.any(g) else np.ones(dim), rng.standard_normal(dim)),
            'hyperplane_moment': MomentHyperplane(dim + 1),
        }
        for kind, S in sets.items():
            x = rng.uniform(-5.0, 5.0, S.dim)
            p = S.project(x).point
            samples = [S.project(rng.uniform(-5.0, 5.0, S.dim)).point for _ in range(20)]
            if not S.contains(p) or not _projection_satisfies_vi(S, x, p, samples):
                failures.append(f"{kind} case {case}")

        dim = int(rng.integers(1, 6))
        k = int(rng.integers(1, 6))
        B_c = rng.uniform(-1.0, 1.0, (k, dim))
        b = rng.uniform(0.0, 1.0, k)
        x = rng.uniform(-3.0, 3.0, dim)
        p = Polyhedron(B_c, b).project(x).point
        expected = polyhedron_projection_oracle(B_c, b, x)
        if not np.linalg.norm(p - expected) <= POLYHEDRON_MATCH_TOL:
            failures.append(f"polyhedron case {case} (off by {np.linalg.norm(p - expected):.2e})")

    detail = "all projectors agree" if not failures else f"{len(failures)} failures, first: {failures[0]}"
    return AcceptanceResult(1, "projection oracle equivalence", not failures, detail)


def _harker_pang_config(method_names: Sequence[str], m_dim: int, mode: str,
                        seeds: Sequence[int] = HP_SEEDS, workers: Optional[int] = None) -> ExperimentConfig:
    return config_from_dict({
        'problem': {'family': 'harker_pang', 'params': {'m_dim': m_dim, 'k_cons': 30}, 'seeds': list(seeds)},
        'methods': list(method_names),
        'stop_rule': 'norm_to_zero',
        'tol': 1e-3,
        'mode': mode,
        'timings': False,
        'workers': workers,
    })


def _invariant_suite(method: str, number: int, title: str, workers: Optional[int]) -> AcceptanceResult:
    total_violations = 0
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        for m_dim in (10, 20):
            report = run_experiment(_harker_pang_config([method], m_dim, "checked", workers=workers),
                                    Path(tmp) / f"m{m_dim}")
            total_violations += report.violations
            failures += report.failures
    passed = total_violations == 0 and failures == 0
    return AcceptanceResult(number, title, passed,
                            f"{total_violations} invariant violations, {failures} failed runs")


def check_invariant_suite(workers: Optional[int] = None) -> AcceptanceResult:
    return _invariant_suite("alg1", 2, "projection method invariant suite", workers)


def _harker_pang_comparison(out: Path, workers: Optional[int]):
    cfg = _harker_pang_config(["alg1", "sem", "isem"], 10, "fast", workers=workers)
    return run_experiment(cfg, out)


def check_harker_pang_speedup(workers: Optional[int] = None) -> AcceptanceResult:
    with tempfile.TemporaryDirectory() as tmp:
        report = _harker_pang_comparison(Path(tmp), workers)
    rows = {row.method: row for row in report.rows}
    rates_ok = all(row.converged >= 0.95 * row.runs for row in rows.values())
    medians = {name: row.iter_median for name, row in rows.items()}
    if any(v is None for v in medians.values()):
        return AcceptanceResult(3, "inertial speedup on random affine VIs", False, f"medians {medians}")
    faster = all(medians["alg1"] <= medians[b] / 3.0 for b in ("sem", "isem"))
    detail = ", ".join(f"{name} median {medians[name]:.0f}" for name in ("alg1", "sem", "isem"))
    return AcceptanceResult(3, "inertial speedup on random affine VIs", rates_ok and faster, detail)


def check_gamma_trend(workers: Optional[int] = None) -> AcceptanceResult:
    gammas = (0.01, 0.1, 0.5)
    cfg = config_from_dict({
        'problem': {'family': 'nash_cournot', 'params': {'n_units': 10}, 'seeds': '0..9'},
        'methods': [{'name': 'alg1', 'gamma': g, 'label': f'alg1_gamma{g:g}'} for g in gammas],
        'stop_rule': 'step_diff',
        'tol': 1e-2,
        'mode': 'fast',
        'timings': False,
        'workers': workers,
    })
    with tempfile.TemporaryDirectory() as tmp:
        report = run_experiment(cfg, tmp)
    medians = [row.iter_median for row in report.rows]
    passed = None not in medians and all(a > b for a, b in zip(medians, medians[1:]))
    detail = " -> ".join("-" if m is None else f"{m:.1f}" for m in medians)
    return AcceptanceResult(4, "line-search factor trend on Nash-Cournot", passed, f"median iterations {detail}")


def check_exponential() -> AcceptanceResult:
    problem = make_problem("exponential")
    details = []
    passed = True
    for cfg in (SolverConfig(stop_rule="norm_to_zero", tol=1e-6, max_iter=500), SolverConfig()):
        trace = solve(problem.operator, problem.feasible, "alg1", cfg, problem.x1, problem.known)
        x = float(abs(trace.final_point[0]))
        passed = passed and trace.converged and x <= 1e-6
        details.append(f"{cfg.stop_rule}: {trace.status.value} after {trace.iterations} iterations, |x| = {x:.3g}")
    return AcceptanceResult(5, "exponential example", passed, "; ".join(details))


def check_volterra() -> AcceptanceResult:
    problem = make_problem("volterra", {'grid_size': 100})
    cfg = SolverConfig(stop_rule="residual", tol=1e-4, max_iter=10_000, mode="fast")
    trace = solve(problem.operator, problem.feasible, "alg1", cfg, problem.x1, problem.known)
    step_to_w = trace.diagnostics.get('final_step_to_w', float('nan'))
    passed = trace.converged and trace.final_metric("residual") < 1e-4 and step_to_w < 1e-3
    return AcceptanceResult(6, "Volterra example", passed,
                            f"{trace.status.value} after {trace.iterations} iterations, "
                            f"residual {trace.final_metric('residual'):.3g}, ||x+ - w|| {step_to_w:.3g}")


def check_baseline_degeneracy(workers: Optional[int] = None, n_steps: int = 1000) -> AcceptanceResult:
    mismatches = 0
    for i in range(n_steps):
        problem = make_problem("harker_pang", {'m_dim': 5, 'k_cons': 5}, seed=i)
        rng = np.random.default_rng(i)
        x_prev, x = rng.uniform(-1.0, 1.0, (2, problem.dim))
        lam = 0.1 / problem.operator.step_lipschitz
        sem_next = step_sem(problem.operator, problem.feasible, x, lam)
        isem_state = step_isem(problem.operator, problem.feasible, SolverState(x_prev, x), lam, 0.0)
        if not np.array_equal(sem_next, isem_state.x_curr):
            mismatches += 1
    suite = _invariant_suite("alg1_noinertia", 7, "", workers)
    passed = mismatches == 0 and suite.passed
    return AcceptanceResult(7, "baseline degeneracy", passed,
                            f"{mismatches}/{n_steps} step mismatches; zero inertia: {suite.detail}")


def check_determinism(workers: Optional[int] = None) -> AcceptanceResult:
    with tempfile.TemporaryDirectory() as tmp:
        first, second = Path(tmp) / "first", Path(tmp) / "second"
        _harker_pang_comparison(first, workers)
        _harker_pang_comparison(second, workers)
        names = sorted(p.relative_to(first) for p in first.rglob("*.csv"))
        _, mismatch, errors = filecmp.cmpfiles(first, second, [str(n) for n in names], shallow=False)
        # summary.json records the artifact paths, which differ between the two directories
        summary_same = filecmp.cmp(first / "summary.txt", second / "summary.txt", shallow=False)
    passed = bool(names) and not mismatch and not errors and summary_same
    return AcceptanceResult(8, "determinism", passed,
                            f"{len(names)} CSV files compared, {len(mismatch) + len(errors)} differ")


ACCEPTANCE_CHECKS: Dict[int, Callable[..., AcceptanceResult]] = {
    1: lambda workers=None: check_projections(),
    2: check_invariant_suite,
    3: check_harker_pang_speedup,
    4: check_gamma_trend,
    5: lambda workers=None: check_exponential(),
    6: lambda workers=None: check_volterra(),
    7: check_baseline_degeneracy,
    8: check_determinism,
}


def run_acceptance(selected: Optional[Sequence[int]] = None,
                   workers: Optional[int] = None) -> List[AcceptanceResult]:
    """Run the selected checks (all by default) and time each one."""
    unknown = [n for n in (selected or []) if n not in ACCEPTANCE_CHECKS]
    if unknown:
        raise ConfigError(f"criteria: unknown acceptance check {unknown[0]} (expected 1-{len(ACCEPTANCE_CHECKS)})")
    results = []
    for number in selected or sorted(ACCEPTANCE_CHECKS):
        check = ACCEPTANCE_CHECKS[number]
        logger.info(f"Running acceptance check {number}")
        start = time.perf_counter()
        try:
            result = check(workers=workers)
        except Exception as e:
            logger.error(f"Acceptance check {number} crashed: {e}")
            result = AcceptanceResult(number, "crashed", False, str(e))
        results.append(result._replace(seconds=time.perf_counter() - start))
    return results
