"""
Shared numeric primitives, solver configuration and trace data structures.

Vectors are plain 1-D ``float64`` numpy arrays; everything else in the package
builds on the helpers and types defined here.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Union

import numpy as np

DenseVector = np.ndarray

# The inertial factor of the projection method must stay strictly below 1/3.
ALG1_ALPHA_LIMIT = 1.0 / 3.0
# Inertial SEM admits alpha < sqrt(5) - 2.
ISEM_ALPHA_LIMIT = math.sqrt(5.0) - 2.0

METHODS = ("alg1", "alg1_noinertia", "sem", "isem")
STOP_RULES = ("step_diff", "norm_to_zero", "residual")
RUN_MODES = ("checked", "fast")


class VIError(Exception):
    """Base class for all solver library errors."""


class DimensionMismatchError(VIError, ValueError):
    """Raised when two vectors (or a vector and a matrix) disagree in size."""


class NonFiniteError(VIError, ArithmeticError):
    """Raised when a NaN or Inf shows up at an API boundary."""


class ProjectionError(VIError):
    """Raised when an iterative projector fails to converge."""


class ZeroNormalError(VIError):
    """Raised when a halfspace is requested with a zero normal vector."""


class LineSearchFailure(VIError):
    """Raised when the Armijo search exceeds its exponent cap."""


class ConfigError(VIError, ValueError):
    """Raised for invalid configuration; the message starts with the field path."""


def as_vector(values: Union[Sequence[float], np.ndarray, float], name: str = "vector") -> DenseVector:
    """Convert input to a finite 1-D float64 array."""
    arr = np.atleast_1d(np.asarray(values, dtype=np.float64))
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


def _check_same_dim(a: DenseVector, b: DenseVector) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def inner_product(a: DenseVector, b: DenseVector) -> float:
    """Euclidean inner product sum(a_i * b_i)."""
    _check_same_dim(a, b)
    return float(np.dot(a, b))


def norm(a: DenseVector) -> float:
    """Euclidean norm sqrt(a . a)."""
    return float(np.sqrt(np.dot(a, a)))


def combine(a: DenseVector, ca: float, b: DenseVector, cb: float) -> DenseVector:
    """Linear combination ca*a + cb*b."""
    _check_same_dim(a, b)
    return ca * a + cb * b


def all_finite(*arrays: np.ndarray) -> bool:
    return all(bool(np.all(np.isfinite(a))) for a in arrays)


@dataclass(frozen=True)
class AlphaSchedule:
    """Inertial factor rule producing alpha_n.

    ``constant`` returns ``value`` for every n. ``ramp`` rises linearly from
    ``start`` at n = 1 to ``value`` (the cap) at n = ``ramp_iters`` and stays
    there, so the sequence is nondecreasing.
    """
    kind: str = "constant"
    value: float = 0.2
    start: float = 0.0
    ramp_iters: int = 100

    def __call__(self, n: int) -> float:
        if self.kind == "constant" or self.ramp_iters <= 1:
            return self.value
        frac = min(1.0, max(0, n - 1) / (self.ramp_iters - 1))
        return self.start + frac * (self.value - self.start)

    @property
    def cap(self) -> float:
        """Upper bound alpha of the whole sequence."""
        return self.value if self.kind == "constant" else max(self.start, self.value)

    @classmethod
    def constant(cls, value: float) -> "AlphaSchedule":
        return cls(kind="constant", value=value)

    def validate(self, limit: float, path: str = "alpha_schedule") -> None:
        if self.kind not in ("constant", "ramp"):
            raise ConfigError(f"{path}.kind: unknown schedule '{self.kind}' (expected constant or ramp)")
        if self.value < 0 or self.start < 0:
            raise ConfigError(f"{path}: inertial factors must be nonnegative")
        if self.kind == "ramp":
            if self.start > self.value:
                raise ConfigError(f"{path}: ramp must be nondecreasing (start <= value)")
            if self.ramp_iters < 1:
                raise ConfigError(f"{path}.ramp_iters: must be a positive integer")
        if self.cap >= limit:
            raise ConfigError(f"{path}: alpha = {self.cap} must be below {limit:.6g}")


@dataclass(frozen=True)
class SolverConfig:
    """Algorithm parameters shared by every method.

    ``lam`` is the fixed step of the extragradient baselines; when it is None
    the baselines use 0.1/L from the operator's Lipschitz estimate.
    ``delta`` is the inertial SEM slack entering its admissible step bound.
    """
    gamma: float = 0.8
    sigma_ls: float = 0.5
    alpha_schedule: AlphaSchedule = field(default_factory=AlphaSchedule)
    lam: Optional[float] = None
    max_iter: int = 100_000
    tol: float = 1e-3
    stop_rule: str = "residual"
    max_ls_exponent: int = 60
    mode: str = "checked"
    delta: float = 0.04

    def validate(self, method: str, path: str = "solver") -> None:
        """Reject parameters outside the ranges each method is analyzed for."""
        if method not in METHODS:
            raise ConfigError(f"{path}.method: unknown method '{method}' (expected one of {', '.join(METHODS)})")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"{path}.gamma: must lie in (0, 1), got {self.gamma}")
        if not 0.0 < self.sigma_ls < 1.0:
            raise ConfigError(f"{path}.sigma_ls: must lie in (0, 1), got {self.sigma_ls}")
        if self.max_iter < 1:
            raise ConfigError(f"{path}.max_iter: must be a positive integer")
        if not self.tol > 0:
            raise ConfigError(f"{path}.tol: must be positive")
        if self.stop_rule not in STOP_RULES:
            raise ConfigError(f"{path}.stop_rule: unknown rule '{self.stop_rule}' (expected one of {', '.join(STOP_RULES)})")
        if self.max_ls_exponent < 1:
            raise ConfigError(f"{path}.max_ls_exponent: must be a positive integer")
        if self.mode not in RUN_MODES:
            raise ConfigError(f"{path}.mode: unknown mode '{self.mode}' (expected checked or fast)")
        if self.lam is not None and not self.lam > 0:
            raise ConfigError(f"{path}.lam: step size must be positive")

        if method == "alg1":
            try:
                self.alpha_schedule.validate(ALG1_ALPHA_LIMIT, f"{path}.alpha_schedule")
            except ConfigError as e:
                raise ConfigError(f"{e} (the inertial projection method needs 0 <= alpha_n <= alpha < 1/3)") from None
        elif method == "isem":
            self.alpha_schedule.validate(ISEM_ALPHA_LIMIT, f"{path}.alpha_schedule")
            if not 0.0 < self.delta < isem_delta_limit(self.alpha_schedule.cap):
                raise ConfigError(f"{path}.delta: must lie in (0, 1/2 - 2a - a^2/2)")

    def with_overrides(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


def isem_delta_limit(alpha: float) -> float:
    return 0.5 - 2.0 * alpha - 0.5 * alpha ** 2


def isem_step_bound(alpha: float, delta: float) -> float:
    """Largest admissible lambda*L for the inertial subgradient extragradient method."""
    return (0.5 - 2.0 * alpha - 0.5 * alpha ** 2 - delta) / (0.5 - alpha + 0.5 * alpha ** 2)


class RunStatus(str, Enum):
    CONVERGED = "converged"
    EXACT_SOLUTION_FOUND = "exact_solution_found"
    MAX_ITER = "max_iter"
    LINE_SEARCH_FAILURE = "line_search_failure"

    @property
    def succeeded(self) -> bool:
        return self in (RunStatus.CONVERGED, RunStatus.EXACT_SOLUTION_FOUND)


@dataclass(frozen=True)
class IterationRecord:
    """One iteration of a run.

    step_diff is ||x_{n+1} - x_n||, residual ||w_n - z_n||, eta the accepted
    step gamma^ls_trials (lambda for the baselines). gamma_n is the Lyapunov
    quantity Gamma_n, present only when a solution is known.
    """
    n: int
    step_diff: float
    residual: float
    eta: float
    ls_trials: int
    gamma_n: Optional[float] = None
    elapsed: float = 0.0
    x_norm: float = 0.0
    fejer_gap: Optional[float] = None


@dataclass(frozen=True)
class InvariantViolation:
    n: int
    name: str
    detail: str


@dataclass
class RunTrace:
    """Ordered iteration records of one solver run plus its outcome."""
    records: List[IterationRecord]
    status: RunStatus
    final_point: DenseVector
    method: str = ""
    message: str = ""
    elapsed: float = 0.0
    violations: List[InvariantViolation] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def converged(self) -> bool:
        return self.status.succeeded

    def final_metric(self, stop_rule: str) -> float:
        """The quantity the stop rule watched, at the last record."""
        if not self.records:
            return float("nan")
        last = self.records[-1]
        if stop_rule == "norm_to_zero":
            return last.x_norm
        if stop_rule == "residual":
            return last.residual
        return last.step_diff
