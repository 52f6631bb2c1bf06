"""
Catalog of monotone cost operators F for VI(F, C).

Each constructor returns an immutable OperatorSpec holding the evaluation
closure plus whatever structure is known about F (affine part, Lipschitz
estimate). ``check_monotone`` is a sampled test of the monotonicity inequality.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .core import DenseVector, DimensionMismatchError, as_vector, inner_product, norm

logger = logging.getLogger('vibench.operators')

MONOTONE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class OperatorSpec:
    """A map F: R^dim -> R^dim with optional structure.

    ``affine_part`` is (M, q) when F(x) = Mx + q. ``lipschitz_estimate`` is the
    modulus reported for the operator; ``discrete_norm`` records the norm of
    the discretized matrix when it differs from that estimate.
    """
    dim: int
    eval: Callable[[DenseVector], DenseVector]
    name: str = "operator"
    affine_part: Optional[Tuple[np.ndarray, np.ndarray]] = None
    lipschitz_estimate: Optional[float] = None
    discrete_norm: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    def __call__(self, x: DenseVector) -> DenseVector:
        if x.shape != (self.dim,):
            raise DimensionMismatchError(f"{self.name}: expected dimension {self.dim}, got {x.shape}")
        return self.eval(x)

    @property
    def step_lipschitz(self) -> Optional[float]:
        """Largest known Lipschitz modulus, used to size baseline steps."""
        known = [v for v in (self.lipschitz_estimate, self.discrete_norm) if v is not None]
        return max(known) if known else None


class SpectralNormEstimate(NamedTuple):
    value: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class NashCournotParams:
    """Oligopoly data: price p_i(s) = alpha_price - beta_i * s, unit cost
    c_j(x_j) = cost_quad_j * x_j^2 / 2 + cost_lin_j * x_j."""
    n_units: int
    beta: np.ndarray
    alpha_price: float
    cost_quad: np.ndarray
    cost_lin: np.ndarray

    def validate(self) -> None:
        for name in ("beta", "cost_quad", "cost_lin"):
            if getattr(self, name).shape != (self.n_units,):
                raise DimensionMismatchError(f"{name} must have length n_units = {self.n_units}")
        if np.any(self.beta <= 0):
            raise ValueError("all beta entries must be positive")
        if np.any(self.cost_quad <= 0) or np.any(self.cost_lin <= 0):
            raise ValueError("cost coefficients must be positive")
        if self.alpha_price <= 0:
            raise ValueError("alpha_price must be positive")


class MonotonicityReport(NamedTuple):
    min_value: float
    failures: int
    n_pairs: int

    @property
    def passed(self) -> bool:
        return self.failures == 0


def spectral_norm(M: np.ndarray, rtol: float = 1e-8, max_iter: int = 10_000) -> SpectralNormEstimate:
    """Largest singular value of a square matrix by power iteration on M^T M.

    Stops when the relative change of the estimate drops below ``rtol``; when
    the cap is hit the best estimate is returned with ``converged=False``.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"spectral_norm expects a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if not np.any(M):
        return SpectralNormEstimate(0.0, True, 0)

    # Fixed start vector keeps results reproducible.
    v = np.random.default_rng(0).standard_normal(n)
    v /= norm(v)
    estimate = 0.0
    for it in range(1, max_iter + 1):
        u = M.T @ (M @ v)
        u_norm = norm(u)
        if u_norm == 0.0:
            # v landed in the null space; restart along a coordinate direction
            v = np.zeros(n)
            v[it % n] = 1.0
            continue
        new_estimate = math.sqrt(u_norm)
        v = u / u_norm
        if estimate > 0 and abs(new_estimate - estimate) <= rtol * new_estimate:
            return SpectralNormEstimate(new_estimate, True, it)
        estimate = new_estimate

    logger.warning(f"Power iteration did not converge within {max_iter} iterations, estimate {estimate:.6g}")
    return SpectralNormEstimate(estimate, False, max_iter)


def make_affine_operator(M: np.ndarray, q: Sequence[float], name: str = "affine") -> OperatorSpec:
    """F(x) = Mx + q with the spectral norm of M as Lipschitz estimate."""
    M = np.array(M, dtype=np.float64)
    q = as_vector(q, "q").copy()
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"M must be square, got shape {M.shape}")
    if M.shape[0] != q.shape[0]:
        raise DimensionMismatchError(f"M is {M.shape[0]}x{M.shape[1]} but q has length {q.shape[0]}")
    M.setflags(write=False)
    q.setflags(write=False)

    estimate = spectral_norm(M)
    if not estimate.converged:
        logger.warning(f"{name}: spectral norm flagged as unconverged")

    def evaluate(x: DenseVector) -> DenseVector:
        return M @ x + q

    return OperatorSpec(
        dim=M.shape[0],
        eval=evaluate,
        name=name,
        affine_part=(M, q),
        lipschitz_estimate=estimate.value,
        metadata={'spectral_norm_converged': estimate.converged},
    )


def make_exponential_operator() -> OperatorSpec:
    """F(x) = e^x on the real line; monotone but not globally Lipschitz."""
    def evaluate(x: DenseVector) -> DenseVector:
        with np.errstate(over='ignore'):
            return np.exp(x)

    return OperatorSpec(dim=1, eval=evaluate, name="exponential")


def nash_cournot_matrix(p: NashCournotParams) -> Tuple[np.ndarray, np.ndarray]:
    """Assemble (M, q) with F(x) = (B + 2 B1 + diag(cost_quad)) x + cost_lin - a.

    B has zero diagonal and row i equal to beta_i elsewhere; B1 = diag(beta).
    """
    n = p.n_units
    B = np.repeat(p.beta[:, None], n, axis=1)
    np.fill_diagonal(B, 0.0)
    M = B + np.diag(2.0 * p.beta + p.cost_quad)
    q = p.cost_lin - p.alpha_price * np.ones(n)
    return M, q


def make_nash_cournot_operator(p: NashCournotParams) -> OperatorSpec:
    p.validate()
    M, q = nash_cournot_matrix(p)
    spec = make_affine_operator(M, q, name=f"nash_cournot_{p.n_units}")
    return replace(spec, metadata={**spec.metadata, 'alpha_price': p.alpha_price})


def volterra_matrix(grid_size: int) -> np.ndarray:
    """Trapezoid quadrature of x -> int_0^{t_i} x on nodes t_i = i/N, i = 1..N.

    Lower triangular with h/2 on the diagonal and h below it.
    """
    h = 1.0 / grid_size
    A = np.tril(np.full((grid_size, grid_size), h), k=-1)
    np.fill_diagonal(A, h / 2.0)
    return A


def make_volterra_operator(grid_size: int = 100) -> OperatorSpec:
    """Discretized Volterra integral operator (Fx)(t) = int_0^t x(s) ds."""
    if grid_size < 2:
        raise ValueError(f"grid_size must be at least 2, got {grid_size}")
    A = volterra_matrix(grid_size)
    sym_min = float(np.linalg.eigvalsh((A + A.T) / 2.0).min())
    if sym_min < -1e-10:
        raise ValueError(f"Volterra quadrature lost monotonicity (min eigenvalue {sym_min:.3g})")
    A.setflags(write=False)
    zero = np.zeros(grid_size)
    zero.setflags(write=False)

    discrete = spectral_norm(A)

    def evaluate(x: DenseVector) -> DenseVector:
        return A @ x

    return OperatorSpec(
        dim=grid_size,
        eval=evaluate,
        name=f"volterra_{grid_size}",
        affine_part=(A, zero),
        lipschitz_estimate=2.0 / math.pi,
        discrete_norm=discrete.value,
        metadata={'grid': np.arange(1, grid_size + 1) / grid_size, 'sym_min_eig': sym_min},
    )


def _sample_pair_points(rng: np.random.Generator, dim: int, sample_box, radius: Optional[float]):
    if sample_box is not None:
        lo, hi = sample_box
        lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), (dim,))
        hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), (dim,))
        return lo + (hi - lo) * rng.random(dim)
    direction = rng.standard_normal(dim)
    direction /= max(norm(direction), 1e-300)
    return radius * rng.random() ** (1.0 / dim) * direction


def check_monotone(F: OperatorSpec, sample_box=None, n_pairs: int = 1000,
                   seed: int = 0, radius: Optional[float] = None) -> MonotonicityReport:
    """Probe <F(x) - F(y), x - y> >= 0 on random pairs.

    Pairs are drawn uniformly from ``sample_box`` = (lo, hi) or, when no box is
    given, from the ball of the given ``radius``. A pair fails when the value
    drops below -1e-10 * (1 + ||x - y||^2).
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    if sample_box is None and radius is None:
        raise ValueError("check_monotone needs a sample_box or a radius")
    rng = np.random.default_rng(seed)
    min_value = math.inf
    failures = 0
    for _ in range(n_pairs):
        x = _sample_pair_points(rng, F.dim, sample_box, radius)
        y = _sample_pair_points(rng, F.dim, sample_box, radius)
        d = x - y
        value = inner_product(F(x) - F(y), d)
        min_value = min(min_value, value)
        if not value >= -MONOTONE_TOLERANCE * (1.0 + inner_product(d, d)):
            failures += 1

    if failures:
        logger.warning(f"{F.name}: {failures}/{n_pairs} pairs violate monotonicity (min {min_value:.3g})")
    else:
        logger.debug(f"{F.name}: monotone over {n_pairs} pairs (min {min_value:.3g})")
    return MonotonicityReport(min_value, failures, n_pairs)
