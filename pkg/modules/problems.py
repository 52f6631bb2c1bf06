"""
Seeded generators for the benchmark problem families.

Every generator returns a ProblemInstance (operator, feasible set, known
solution, starting point). Random draws come from three independent PCG64
streams split off ``SeedSequence(seed)``: matrices, vectors and initial
points, so regenerating an instance from its seed is bit-identical.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .core import ConfigError, DenseVector
from .operators import (
    MonotonicityReport,
    NashCournotParams,
    OperatorSpec,
    check_monotone,
    make_affine_operator,
    make_exponential_operator,
    make_nash_cournot_operator,
    make_volterra_operator,
)
from .sets import Box, FeasibleSet, MomentHyperplane, Polyhedron
from .solvers import KnownSolutionInfo

logger = logging.getLogger('vibench.problems')

NASH_PRICE_INTERCEPT = 100.0
NASH_BOUNDS = (1.0, 40.0)
NASH_COMPANIES = 10
SAMPLE_RADIUS = 100.0


class RandomStreams:
    """Independent generators for matrices, vectors and initial points."""

    def __init__(self, seed: int):
        matrices, vectors, points = np.random.SeedSequence(seed).spawn(3)
        self.matrices = np.random.Generator(np.random.PCG64(matrices))
        self.vectors = np.random.Generator(np.random.PCG64(vectors))
        self.points = np.random.Generator(np.random.PCG64(points))


@dataclass(frozen=True)
class ProblemInstance:
    """One VI(F, C) with its starting point x_1 (x_0 = x_1).

    ``sample_box`` / ``sample_radius`` give the domain on which the operator's
    monotonicity is sampled: the feasible box when bounded, a ball otherwise.
    """
    operator: OperatorSpec
    feasible: FeasibleSet
    known: KnownSolutionInfo
    label: str
    seed: int
    x1: DenseVector
    family: str = ""
    sample_box: Optional[Tuple[float, float]] = None
    sample_radius: Optional[float] = SAMPLE_RADIUS
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.operator.dim != self.feasible.dim:
            raise ValueError(f"{self.label}: operator dimension {self.operator.dim} "
                             f"differs from feasible set dimension {self.feasible.dim}")

    @property
    def dim(self) -> int:
        return self.operator.dim

    def check_monotone(self, n_pairs: int = 10_000, seed: int = 0) -> MonotonicityReport:
        if self.sample_box is not None:
            return check_monotone(self.operator, sample_box=self.sample_box, n_pairs=n_pairs, seed=seed)
        return check_monotone(self.operator, n_pairs=n_pairs, seed=seed, radius=self.sample_radius)


@dataclass(frozen=True)
class HarkerPangParams:
    m_dim: int
    k_cons: int
    seed: int = 0

    def validate(self) -> None:
        if self.m_dim < 1 or self.k_cons < 1:
            raise ValueError(f"m_dim and k_cons must be positive, got m={self.m_dim}, k={self.k_cons}")


def gen_harker_pang(p: HarkerPangParams) -> ProblemInstance:
    """Random affine VI with M = B B^T + S + D, q = 0 on {x : B_c x <= b}.

    b >= 0 makes 0 feasible, and M is positive definite, so 0 is the unique
    solution.
    """
    p.validate()
    rng = RandomStreams(p.seed)
    m, k = p.m_dim, p.k_cons
    B = rng.matrices.uniform(-1.0, 1.0, (m, m))
    G = rng.matrices.uniform(-1.0, 1.0, (m, m))
    S = (G - G.T) / 2.0
    D = np.diag(rng.matrices.uniform(0.5, 1.5, m))
    B_c = rng.matrices.uniform(-1.0, 1.0, (k, m))
    b = rng.vectors.uniform(0.0, 1.0, k)
    x1 = rng.points.uniform(-1.0, 1.0, m)

    label = f"harker_pang_m{m}_k{k}"
    operator = make_affine_operator(B @ B.T + S + D, np.zeros(m), name=label)
    logger.debug(f"Generated {label} (seed {p.seed}), L~{operator.lipschitz_estimate:.4g}")
    return ProblemInstance(
        operator=operator,
        feasible=Polyhedron(B_c, b),
        known=KnownSolutionInfo(x_star=np.zeros(m), unique=True),
        label=label,
        seed=p.seed,
        x1=x1,
        family="harker_pang",
        metadata={'min_diag_D': float(np.diag(D).min()), 'skew': S},
    )


def gen_nash_cournot(n_units: int, seed: int = 0,
                     alpha_price: float = NASH_PRICE_INTERCEPT) -> ProblemInstance:
    """Oligopoly equilibrium on the production box [1, 40]^n_units.

    Units are spread evenly over the companies; the company split only shows
    up in the label since F is assembled per unit.
    """
    if n_units < 1:
        raise ValueError(f"n_units must be positive, got {n_units}")
    rng = RandomStreams(seed)
    lo, hi = NASH_BOUNDS
    params = NashCournotParams(
        n_units=n_units,
        beta=1.0 - rng.matrices.random(n_units),
        alpha_price=alpha_price,
        cost_quad=rng.vectors.uniform(lo, hi, n_units),
        cost_lin=rng.vectors.uniform(lo, hi, n_units),
    )
    operator = make_nash_cournot_operator(params)

    M = operator.affine_part[0]
    sym_min = float(np.linalg.eigvalsh((M + M.T) / 2.0).min())
    if sym_min < 0:
        logger.warning(f"Nash-Cournot draw (seed {seed}) is not monotone: min eigenvalue {sym_min:.3g}")

    companies = min(NASH_COMPANIES, n_units)
    per_company = math.ceil(n_units / companies)
    return ProblemInstance(
        operator=operator,
        feasible=Box(lo, hi, dim=n_units),
        known=KnownSolutionInfo(),
        label=f"nash_cournot_N{n_units}_{per_company}per_company",
        seed=seed,
        x1=rng.points.uniform(lo, hi, n_units),
        family="nash_cournot",
        sample_box=NASH_BOUNDS,
        metadata={'sym_min_eig': sym_min, 'params': params},
    )


def gen_volterra(grid_size: int = 100, seed: int = 0) -> ProblemInstance:
    """Volterra operator on {x : int_0^1 t x(t) dt = 2}, started at P_C(1)."""
    operator = make_volterra_operator(grid_size)
    feasible = MomentHyperplane(grid_size)
    return ProblemInstance(
        operator=operator,
        feasible=feasible,
        known=KnownSolutionInfo(),
        label=f"volterra_N{grid_size}",
        seed=seed,
        x1=feasible.project(np.ones(grid_size)).point,
        family="volterra",
    )


def gen_exponential(x0: float = 2.0, seed: int = 0) -> ProblemInstance:
    """F(x) = e^x on [0, inf); 0 is the unique solution."""
    return ProblemInstance(
        operator=make_exponential_operator(),
        feasible=Box(0.0, math.inf, dim=1),
        known=KnownSolutionInfo(x_star=np.zeros(1), unique=True),
        label="exponential",
        seed=seed,
        x1=np.array([float(x0)]),
        family="exponential",
    )


@dataclass(frozen=True)
class ProblemFamily:
    """Registry entry: builder plus the stop rule the family is benchmarked with."""
    name: str
    build: Callable[..., ProblemInstance]
    params: Dict[str, object]
    stop_rule: str
    tol: float


def _build_harker_pang(seed: int, m_dim: int = 10, k_cons: int = 30) -> ProblemInstance:
    return gen_harker_pang(HarkerPangParams(int(m_dim), int(k_cons), seed))


def _build_nash_cournot(seed: int, n_units: int = 10,
                        alpha_price: float = NASH_PRICE_INTERCEPT) -> ProblemInstance:
    return gen_nash_cournot(int(n_units), seed, float(alpha_price))


def _build_volterra(seed: int, grid_size: int = 100) -> ProblemInstance:
    return gen_volterra(int(grid_size), seed)


def _build_exponential(seed: int, x0: float = 2.0) -> ProblemInstance:
    return gen_exponential(float(x0), seed)


PROBLEM_FAMILIES = {
    'exponential': ProblemFamily('exponential', _build_exponential, {'x0': 2.0}, 'norm_to_zero', 1e-6),
    'harker_pang': ProblemFamily('harker_pang', _build_harker_pang, {'m_dim': 10, 'k_cons': 30},
                                 'norm_to_zero', 1e-3),
    'nash_cournot': ProblemFamily('nash_cournot', _build_nash_cournot,
                                  {'n_units': 10, 'alpha_price': NASH_PRICE_INTERCEPT}, 'step_diff', 1e-2),
    'volterra': ProblemFamily('volterra', _build_volterra, {'grid_size': 100}, 'residual', 1e-4),
}


def get_family(name: str, path: str = "problem.family") -> ProblemFamily:
    family = PROBLEM_FAMILIES.get(name)
    if family is None:
        raise ConfigError(f"{path}: unknown problem family '{name}' "
                          f"(expected one of {', '.join(PROBLEM_FAMILIES)})")
    return family


def make_problem(family: str, params: Optional[dict] = None, seed: int = 0) -> ProblemInstance:
    """Build an instance of a registered family; unknown params are rejected."""
    spec = get_family(family)
    params = dict(params or {})
    unknown = sorted(set(params) - set(spec.params))
    if unknown:
        raise ConfigError(f"problem.params.{unknown[0]}: not a parameter of {family} "
                          f"(expected {', '.join(spec.params)})")
    try:
        return spec.build(seed, **params)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"problem.params: {e}") from e
