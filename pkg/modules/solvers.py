"""
Projection-type solvers for monotone variational inequalities.

Implements the inertial projection method with Armijo line search
(``alg1``), its non-inertial ablation (``alg1_noinertia``), and the two
extragradient baselines: the subgradient extragradient method (``sem``) and
its inertial variant (``isem``).
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional

import numpy as np

from .core import (
    AlphaSchedule,
    ConfigError,
    DenseVector,
    DimensionMismatchError,
    IterationRecord,
    LineSearchFailure,
    NonFiniteError,
    ProjectionError,
    RunStatus,
    RunTrace,
    SolverConfig,
    all_finite,
    as_vector,
    inner_product,
    isem_step_bound,
    norm,
)
from .invariants import InvariantChecker, vanishing_quantities
from .operators import OperatorSpec
from .sets import FeasibleSet, project_halfspace

logger = logging.getLogger('vibench.solvers')

EXACT_ZERO_RTOL = 1e-14
BASELINE_STEP_FRACTION = 0.1


@dataclass(frozen=True)
class KnownSolutionInfo:
    x_star: Optional[DenseVector] = None
    unique: bool = False


@dataclass(frozen=True)
class SolverState:
    """Iterates of one run: x_{n-1}, x_n and the intermediate points of step n-1."""
    x_prev: DenseVector
    x_curr: DenseVector
    w: Optional[DenseVector] = None
    y: Optional[DenseVector] = None
    z: Optional[DenseVector] = None
    eta: Optional[float] = None
    n: int = 1

    @classmethod
    def start(cls, x0: DenseVector, x1: Optional[DenseVector] = None) -> "SolverState":
        return cls(x_prev=x0, x_curr=x0 if x1 is None else x1)


class LineSearchResult(NamedTuple):
    m: int
    eta: float
    y: DenseVector
    fy: DenseVector
    lhs: float
    threshold: float


class StepResult(NamedTuple):
    state: SolverState
    record: IterationRecord
    status: Optional[RunStatus] = None
    ls: Optional[LineSearchResult] = None
    message: str = ""


def _is_exact_zero(r: DenseVector, w: DenseVector) -> bool:
    return norm(r) <= EXACT_ZERO_RTOL * (1.0 + norm(w))


def residual(F: OperatorSpec, C: FeasibleSet, x: DenseVector):
    """r(x) = x - P_C(x - F(x)); returns (r, z) with z = P_C(x - F(x))."""
    if x.shape != (C.dim,):
        raise DimensionMismatchError(f"point has dimension {x.shape[0]}, set has {C.dim}")
    fx = F(x)
    if not all_finite(fx):
        raise NonFiniteError("F(x) is not finite")
    z = C.project(x - fx).point
    return x - z, z


def line_search(F: OperatorSpec, w: DenseVector, r: DenseVector, gamma: float,
                sigma_ls: float, cap: int) -> LineSearchResult:
    """Armijo search for the smallest m >= 0 with
    <F(w - gamma^m r), r> >= (sigma_ls / 2) ||r||^2."""
    threshold = 0.5 * sigma_ls * inner_product(r, r)
    for m in range(cap + 1):
        eta = gamma ** m
        y = w - eta * r
        fy = F(y)
        lhs = inner_product(fy, r)
        if not np.isfinite(lhs):
            raise NonFiniteError(f"line search produced a non-finite value at m={m}")
        if lhs >= threshold:
            return LineSearchResult(m, eta, y, fy, lhs, threshold)
    raise LineSearchFailure(f"no acceptable step up to gamma^{cap} (||r|| = {norm(r):.3g})")


def _exact_at(x: DenseVector, z: DenseVector, n: int, message: str) -> StepResult:
    new_state = SolverState(x_prev=x, x_curr=x, w=x, y=x, z=z, eta=0.0, n=n + 1)
    record = IterationRecord(n=n, step_diff=0.0, residual=norm(x - z), eta=0.0, ls_trials=0,
                             x_norm=norm(x))
    return StepResult(new_state, record, RunStatus.EXACT_SOLUTION_FOUND, message=message)


def step_alg1(F: OperatorSpec, C: FeasibleSet, state: SolverState, cfg: SolverConfig) -> StepResult:
    """One iteration of the inertial projection method.

    w_n = x_n + a_n (x_n - x_{n-1}), z_n = P_C(w_n - F(w_n)), Armijo search for
    y_n on the segment [w_n, z_n], then x_{n+1} is the projection of w_n onto
    the halfspace {x : <F(y_n), x - y_n> <= 0}.

    On an affine C the cut normal is replaced by its component parallel to C.
    For x in C the cut is unchanged, and the projection of w_n (which lies in
    C whenever x_n and x_{n-1} do) onto C ∩ C_n stays in C.
    """
    n = state.n
    alpha_n = cfg.alpha_schedule(n)
    x = state.x_curr
    w = x if alpha_n == 0.0 else x + alpha_n * (x - state.x_prev)
    r, z = residual(F, C, w)
    if not all_finite(w, z):
        raise NonFiniteError(f"non-finite iterate at n={n}")
    res = norm(r)

    if _is_exact_zero(r, w):
        new_state = SolverState(x_prev=x, x_curr=w, w=w, y=w, z=z, eta=1.0, n=n + 1)
        record = IterationRecord(n=n, step_diff=norm(w - x), residual=res, eta=1.0, ls_trials=0,
                                 x_norm=norm(w))
        return StepResult(new_state, record, RunStatus.EXACT_SOLUTION_FOUND,
                          message=f"residual vanished at w_{n}")

    try:
        ls = line_search(F, w, r, cfg.gamma, cfg.sigma_ls, cfg.max_ls_exponent)
    except LineSearchFailure:
        if w is x:
            raise
        # the extrapolation may have overshot an exact solution x_n
        r_x, z_x = residual(F, C, x)
        if not _is_exact_zero(r_x, x):
            raise
        return _exact_at(x, z_x, n, f"residual vanished at x_{n}")

    normal = ls.fy
    parallel = C.tangent(ls.fy)
    if parallel is not None:
        normal = parallel
    if not np.any(normal):
        # the cutting halfspace degenerates and y_n solves the VI
        new_state = SolverState(x_prev=x, x_curr=ls.y, w=w, y=ls.y, z=z, eta=ls.eta, n=n + 1)
        record = IterationRecord(n=n, step_diff=norm(ls.y - x), residual=res, eta=ls.eta,
                                 ls_trials=ls.m, x_norm=norm(ls.y))
        return StepResult(new_state, record, RunStatus.EXACT_SOLUTION_FOUND, ls,
                          message=f"F(y_{n}) = 0" if parallel is None else f"F(y_{n}) is orthogonal to C")

    x_next = project_halfspace(normal, ls.y, w)
    if not all_finite(x_next):
        raise NonFiniteError(f"non-finite iterate x_{n + 1}")
    new_state = SolverState(x_prev=x, x_curr=x_next, w=w, y=ls.y, z=z, eta=ls.eta, n=n + 1)
    record = IterationRecord(n=n, step_diff=norm(x_next - x), residual=res, eta=ls.eta,
                             ls_trials=ls.m, x_norm=norm(x_next))
    return StepResult(new_state, record, ls=ls)


def _extragradient_step(F: OperatorSpec, C: FeasibleSet, w: DenseVector, lam: float):
    """Subgradient extragradient update from w; returns (x_next, y)."""
    u = w - lam * F(w)
    y = C.project(u).point
    normal = u - y
    v = w - lam * F(y)
    if not np.any(normal):
        # T_n is the whole space
        return v, y
    return project_halfspace(normal, y, v), y


def _baseline_step(F: OperatorSpec, C: FeasibleSet, state: SolverState, lam: float,
                   alpha_n: float) -> StepResult:
    n = state.n
    x = state.x_curr
    w = x if alpha_n == 0.0 else x + alpha_n * (x - state.x_prev)
    x_next, y = _extragradient_step(F, C, w, lam)
    if not all_finite(x_next, y):
        raise NonFiniteError(f"non-finite iterate at n={n}")
    gap = w - y
    status = RunStatus.EXACT_SOLUTION_FOUND if _is_exact_zero(gap, w) else None
    new_state = SolverState(x_prev=x, x_curr=x_next, w=w, y=y, z=y, eta=lam, n=n + 1)
    record = IterationRecord(n=n, step_diff=norm(x_next - x), residual=norm(gap), eta=lam,
                             ls_trials=0, x_norm=norm(x_next))
    return StepResult(new_state, record, status)


def step_sem(F: OperatorSpec, C: FeasibleSet, x: DenseVector, lam: float) -> DenseVector:
    """One subgradient extragradient step from x with fixed step lam."""
    if not lam > 0:
        raise ConfigError(f"lam: step size must be positive, got {lam}")
    return _extragradient_step(F, C, x, lam)[0]


def step_isem(F: OperatorSpec, C: FeasibleSet, state: SolverState, lam: float,
              alpha_n: float) -> SolverState:
    """One inertial subgradient extragradient step: extrapolate, then a SEM step from w_n."""
    if not lam > 0:
        raise ConfigError(f"lam: step size must be positive, got {lam}")
    return _baseline_step(F, C, state, lam, alpha_n).state


def check_isem_step(lam: float, lipschitz: float, alpha: float, delta: float) -> None:
    """Reject steps outside 0 < lam*L <= (1/2 - 2a - a^2/2 - delta) / (1/2 - a + a^2/2)."""
    bound = isem_step_bound(alpha, delta)
    if not 0.0 < lam * lipschitz <= bound:
        raise ConfigError(f"lam: lam*L = {lam * lipschitz:.4g} exceeds the admissible bound {bound:.4g}")


class VIMethod(ABC):
    """A solver strategy: one ``step`` per iteration on a fixed (F, C)."""

    name = ""
    checks_invariants = False

    def __init__(self, F: OperatorSpec, C: FeasibleSet, cfg: SolverConfig):
        self.F = F
        self.C = C
        self.cfg = cfg

    @abstractmethod
    def step(self, state: SolverState) -> StepResult:
        """Advance the run by one iteration."""

    def alpha(self, n: int) -> float:
        return self.cfg.alpha_schedule(n)


class InertialProjectionMethod(VIMethod):
    name = "alg1"
    checks_invariants = True

    def step(self, state: SolverState) -> StepResult:
        return step_alg1(self.F, self.C, state, self.cfg)


class NonInertialProjectionMethod(InertialProjectionMethod):
    name = "alg1_noinertia"

    def __init__(self, F: OperatorSpec, C: FeasibleSet, cfg: SolverConfig):
        super().__init__(F, C, cfg.with_overrides(alpha_schedule=AlphaSchedule.constant(0.0)))


class SubgradientExtragradientMethod(VIMethod):
    name = "sem"

    def __init__(self, F: OperatorSpec, C: FeasibleSet, cfg: SolverConfig):
        super().__init__(F, C, cfg)
        self.lam = self._resolve_step()

    def _resolve_step(self) -> float:
        lipschitz = self.F.step_lipschitz
        if self.cfg.lam is not None:
            lam = self.cfg.lam
        elif lipschitz:
            lam = BASELINE_STEP_FRACTION / lipschitz
        else:
            raise ConfigError(f"lam: {self.name} needs a fixed step or a Lipschitz estimate for {self.F.name}")
        self._check_step(lam, lipschitz)
        logger.debug(f"{self.name}: using step lam={lam:.6g} (L={lipschitz})")
        return lam

    def _check_step(self, lam: float, lipschitz: Optional[float]) -> None:
        if lipschitz and not lam * lipschitz < 1.0:
            raise ConfigError(f"lam: lam*L = {lam * lipschitz:.4g} must be below 1")

    def alpha(self, n: int) -> float:
        return 0.0

    def step(self, state: SolverState) -> StepResult:
        return _baseline_step(self.F, self.C, state, self.lam, 0.0)


class InertialSubgradientExtragradientMethod(SubgradientExtragradientMethod):
    name = "isem"

    def _check_step(self, lam: float, lipschitz: Optional[float]) -> None:
        if lipschitz:
            check_isem_step(lam, lipschitz, self.cfg.alpha_schedule.cap, self.cfg.delta)

    def alpha(self, n: int) -> float:
        return self.cfg.alpha_schedule(n)

    def step(self, state: SolverState) -> StepResult:
        return _baseline_step(self.F, self.C, state, self.lam, self.alpha(state.n))


SOLVERS = {
    'alg1': InertialProjectionMethod,
    'alg1_noinertia': NonInertialProjectionMethod,
    'sem': SubgradientExtragradientMethod,
    'isem': InertialSubgradientExtragradientMethod,
}


def create_method(method: str, F: OperatorSpec, C: FeasibleSet, cfg: SolverConfig) -> VIMethod:
    method_class = SOLVERS.get(method)
    if method_class is None:
        raise ConfigError(f"method: unknown method '{method}' (expected one of {', '.join(SOLVERS)})")
    return method_class(F, C, cfg)


def _stop_rule_fired(record: IterationRecord, cfg: SolverConfig) -> bool:
    if cfg.stop_rule == "step_diff":
        return record.step_diff <= cfg.tol
    if cfg.stop_rule == "norm_to_zero":
        return record.x_norm <= cfg.tol
    return record.residual <= cfg.tol


def solve(F: OperatorSpec, C: FeasibleSet, method: str, cfg: SolverConfig, x0,
          known: Optional[KnownSolutionInfo] = None, x1=None) -> RunTrace:
    """Run ``method`` from x_0 (= x_1 unless given) until the stop rule fires.

    Step errors end the run and are reported through the trace status. When a
    solution is known, Gamma_n and the Fejer gap are recorded for every method
    and the runtime invariants are checked for the projection methods.
    """
    x0 = as_vector(x0, "x0")
    x1 = x0 if x1 is None else as_vector(x1, "x1")
    if x0.shape != (F.dim,) or x0.shape != (C.dim,) or x1.shape != x0.shape:
        raise DimensionMismatchError(f"x0 has dimension {x0.shape[0]}, operator {F.dim}, set {C.dim}")
    cfg.validate(method)
    solver = create_method(method, F, C, cfg)
    known = known or KnownSolutionInfo()
    checker = InvariantChecker(F, solver.cfg, known.x_star, alpha=solver.alpha,
                               enforce=solver.checks_invariants)
    log_every = 1 if cfg.mode == "checked" else 100

    logger.info(f"Starting {method} on {F.name} (dim={F.dim}, stop={cfg.stop_rule}, tol={cfg.tol:g})")
    state = SolverState.start(x0, x1)
    records: List[IterationRecord] = []
    status = RunStatus.MAX_ITER
    message = ""
    last: Optional[StepResult] = None
    start = time.perf_counter()

    for _ in range(cfg.max_iter):
        try:
            result = solver.step(state)
        except (LineSearchFailure, NonFiniteError, ProjectionError) as e:
            status = RunStatus.LINE_SEARCH_FAILURE
            message = f"{type(e).__name__} at n={state.n}: {e}"
            logger.error(f"{method} on {F.name}: {message}")
            break

        extras = checker.observe(state, result)
        record = replace(result.record, elapsed=time.perf_counter() - start, **extras)
        records.append(record)
        if record.n % log_every == 0:
            logger.debug(f"{method} n={record.n} step={record.step_diff:.3e} res={record.residual:.3e} "
                         f"eta={record.eta:.3g} m={record.ls_trials}")
        state = result.state
        last = result
        if result.status is not None:
            status = result.status
            message = result.message
            break
        if _stop_rule_fired(record, cfg):
            status = RunStatus.CONVERGED
            break

    elapsed = time.perf_counter() - start
    trace = RunTrace(records=records, status=status, final_point=state.x_curr, method=method,
                     message=message, elapsed=elapsed, violations=checker.violations)
    if last is not None:
        trace.diagnostics.update(vanishing_quantities(last.state, last.record, cfg))
    logger.info(f"{method} on {F.name}: {status.value} after {trace.iterations} iterations "
                f"({elapsed:.3f}s, {len(trace.violations)} invariant violations)")
    return trace


def certify_solution(F: OperatorSpec, C: FeasibleSet, x: DenseVector, n_samples: int = 200,
                     seed: int = 0, scale: float = 1.0) -> float:
    """Minty-type certificate: min over sampled feasible y of <F(y), y - x>.

    For monotone F a point x in C solves the VI iff this is nonnegative for
    every y in C; the sampled minimum is a necessary-condition test.
    """
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n_samples):
        y = C.project(x + scale * rng.standard_normal(x.shape[0])).point
        worst = min(worst, inner_product(F(y), y - x))
    return float(worst)
