"""
Feasible sets and their metric projectors.

Every set exposes ``project(x)`` returning a ProjectionReport. Closed-form
projectors (whole space, box, halfspace, moment hyperplane) are exact; the
polyhedron projector runs Dykstra's alternating projections.
"""

import logging
from abc import ABC, abstractmethod
from typing import NamedTuple, Optional

import numpy as np

from .core import (
    DenseVector,
    DimensionMismatchError,
    ProjectionError,
    ZeroNormalError,
    as_vector,
    inner_product,
    norm,
)

logger = logging.getLogger('vibench.sets')

DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_SWEEPS = 10_000
FEASIBILITY_TOL = 1e-9
POLYHEDRON_INFEASIBILITY_TOL = 1e-6
MOMENT_LEVEL = 2.0


class ProjectionReport(NamedTuple):
    point: DenseVector
    exact: bool
    sweeps: int = 0
    residual_infeasibility: float = 0.0


def project_halfspace(g: DenseVector, y0: DenseVector, w: DenseVector) -> DenseVector:
    """Metric projection of w onto {x : <g, x - y0> <= 0}."""
    gg = inner_product(g, g)
    if gg == 0.0:
        raise ZeroNormalError("halfspace normal is zero")
    excess = inner_product(g, w - y0)
    if excess <= 0.0:
        return w
    return w - (excess / gg) * g


def moment_weights(grid: np.ndarray) -> np.ndarray:
    """Trapezoid weights for int_0^1 t x(t) dt on the nodes t_i = i/N.

    The t_0 = 0 node contributes nothing; the t_N = 1 endpoint carries half
    weight, matching the Volterra quadrature.
    """
    h = grid[1] - grid[0]
    weights = h * grid
    weights[-1] *= 0.5
    return weights


def moment(x: DenseVector, grid: np.ndarray) -> float:
    """Trapezoid quadrature of int_0^1 t x(t) dt."""
    return float(np.dot(moment_weights(grid), x))


def project_moment_hyperplane(x: DenseVector, grid: np.ndarray, level: float = MOMENT_LEVEL) -> DenseVector:
    """Euclidean projection onto {x : <a, x> = level} with a the moment weights.

    p = x - (<a, x> - level) / <a, a> * a, so p meets the discretized
    constraint exactly and is the nearest such point.
    """
    if x.shape != grid.shape:
        raise DimensionMismatchError(f"x has {x.shape[0]} nodes but the grid has {grid.shape[0]}")
    a = moment_weights(grid)
    return x - ((np.dot(a, x) - level) / np.dot(a, a)) * a


def project_polyhedron_dykstra(B_c: np.ndarray, b: DenseVector, x: DenseVector,
                               tol: float = DYKSTRA_TOL,
                               max_sweeps: int = DYKSTRA_MAX_SWEEPS) -> ProjectionReport:
    """Project x onto {u : B_c u <= b} with Dykstra's algorithm.

    Each sweep visits the k halfspaces in order, carrying one correction
    vector per halfspace. A small sweep-to-sweep move alone is not enough to
    stop: the corrections must also have settled and every constraint must
    hold to ``tol``. Hitting ``max_sweeps`` returns an inexact report.
    """
    if B_c.shape != (b.shape[0], x.shape[0]):
        raise DimensionMismatchError(
            f"constraint matrix {B_c.shape} does not match b ({b.shape[0]}) and x ({x.shape[0]})")

    if np.all(B_c @ x <= b):
        return ProjectionReport(x.copy(), exact=True, sweeps=1, residual_infeasibility=0.0)

    row_norms_sq = np.einsum('ij,ij->i', B_c, B_c)
    active = np.flatnonzero(row_norms_sq > 0.0)
    point = x.copy()
    corrections = np.zeros((B_c.shape[0], x.shape[0]))

    for sweep in range(1, max_sweeps + 1):
        previous = point.copy()
        previous_corrections = corrections.copy()
        for i in active:
            shifted = point + corrections[i]
            excess = np.dot(B_c[i], shifted) - b[i]
            if excess > 0.0:
                point = shifted - (excess / row_norms_sq[i]) * B_c[i]
            else:
                point = shifted
            corrections[i] = shifted - point
        if norm(point - previous) > tol:
            continue
        if np.linalg.norm(corrections - previous_corrections) > tol:
            continue
        infeasibility = float(max(0.0, np.max(B_c @ point - b)))
        if infeasibility <= tol:
            return ProjectionReport(point, exact=True, sweeps=sweep, residual_infeasibility=infeasibility)

    infeasibility = float(max(0.0, np.max(B_c @ point - b)))
    logger.warning(f"Dykstra hit the sweep cap ({max_sweeps}), infeasibility {infeasibility:.3g}")
    return ProjectionReport(point, exact=False, sweeps=max_sweeps, residual_infeasibility=infeasibility)


class FeasibleSet(ABC):
    """Closed convex subset of R^dim with a metric projector."""

    kind: str = ""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        self.dim = dim

    def _check(self, x: DenseVector) -> None:
        if x.shape != (self.dim,):
            raise DimensionMismatchError(f"{self.kind}: expected dimension {self.dim}, got {x.shape}")

    @abstractmethod
    def project(self, x: DenseVector) -> ProjectionReport:
        """Return the nearest point of the set to x."""

    @abstractmethod
    def contains(self, x: DenseVector, tol: float = FEASIBILITY_TOL) -> bool:
        """Feasibility test with absolute tolerance ``tol``."""

    def tangent(self, v: DenseVector) -> Optional[DenseVector]:
        """Component of v parallel to an affine set, or None for sets that are not affine."""
        return None

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


class WholeSpace(FeasibleSet):
    kind = "whole_space"

    def project(self, x: DenseVector) -> ProjectionReport:
        self._check(x)
        return ProjectionReport(x, exact=True)

    def contains(self, x: DenseVector, tol: float = FEASIBILITY_TOL) -> bool:
        return bool(np.all(np.isfinite(x)))

    def tangent(self, v: DenseVector) -> DenseVector:
        return v


class Box(FeasibleSet):
    """{x : lo <= x <= hi}; bounds may be infinite."""
    kind = "box"

    def __init__(self, lo, hi, dim: Optional[int] = None):
        lo_arr = np.atleast_1d(np.asarray(lo, dtype=np.float64))
        hi_arr = np.atleast_1d(np.asarray(hi, dtype=np.float64))
        dim = dim or max(lo_arr.shape[0], hi_arr.shape[0])
        super().__init__(dim)
        self.lo = np.broadcast_to(lo_arr, (dim,)).copy()
        self.hi = np.broadcast_to(hi_arr, (dim,)).copy()
        if np.any(self.lo > self.hi):
            raise ValueError("box bounds must satisfy lo <= hi entrywise")

    def project(self, x: DenseVector) -> ProjectionReport:
        self._check(x)
        return ProjectionReport(np.clip(x, self.lo, self.hi), exact=True)

    def contains(self, x: DenseVector, tol: float = FEASIBILITY_TOL) -> bool:
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))


class Halfspace(FeasibleSet):
    """{x : <g, x - y0> <= 0}."""
    kind = "halfspace"

    def __init__(self, g, y0):
        self.g = as_vector(g, "g")
        self.y0 = as_vector(y0, "y0")
        if self.g.shape != self.y0.shape:
            raise DimensionMismatchError("halfspace normal and anchor differ in dimension")
        if not np.any(self.g):
            raise ZeroNormalError("halfspace normal is zero")
        super().__init__(self.g.shape[0])

    def project(self, x: DenseVector) -> ProjectionReport:
        self._check(x)
        return ProjectionReport(project_halfspace(self.g, self.y0, x), exact=True)

    def contains(self, x: DenseVector, tol: float = FEASIBILITY_TOL) -> bool:
        return inner_product(self.g, x - self.y0) <= tol * max(1.0, norm(self.g))


class MomentHyperplane(FeasibleSet):
    """{x : int_0^1 t x(t) dt = level} for grid functions on t_i = i/N."""
    kind = "hyperplane_moment"

    def __init__(self, grid_size: int, level: float = MOMENT_LEVEL):
        if grid_size < 2:
            raise ValueError(f"grid_size must be at least 2, got {grid_size}")
        super().__init__(grid_size)
        self.grid = np.arange(1, grid_size + 1) / grid_size
        self.weights = moment_weights(self.grid)
        self.level = level

    def project(self, x: DenseVector) -> ProjectionReport:
        self._check(x)
        return ProjectionReport(project_moment_hyperplane(x, self.grid, self.level), exact=True)

    def contains(self, x: DenseVector, tol: float = FEASIBILITY_TOL) -> bool:
        return abs(moment(x, self.grid) - self.level) <= tol

    def tangent(self, v: DenseVector) -> DenseVector:
        a = self.weights
        return v - (np.dot(a, v) / np.dot(a, a)) * a


class Polyhedron(FeasibleSet):
    """{x : B_c x <= b}, projected iteratively."""
    kind = "polyhedron"

    def __init__(self, B_c, b, tol: float = DYKSTRA_TOL, max_sweeps: int = DYKSTRA_MAX_SWEEPS):
        self.B_c = np.array(B_c, dtype=np.float64)
        self.b = as_vector(b, "b").copy()
        if self.B_c.ndim != 2 or self.B_c.shape[0] != self.b.shape[0]:
            raise DimensionMismatchError(f"B_c {self.B_c.shape} does not match b ({self.b.shape[0]})")
        super().__init__(self.B_c.shape[1])
        self.tol = tol
        self.max_sweeps = max_sweeps

    def project(self, x: DenseVector) -> ProjectionReport:
        self._check(x)
        report = project_polyhedron_dykstra(self.B_c, self.b, x, self.tol, self.max_sweeps)
        if report.residual_infeasibility > POLYHEDRON_INFEASIBILITY_TOL:
            raise ProjectionError(
                f"polyhedron projection did not reach a feasible point in {report.sweeps} sweeps "
                f"(infeasibility {report.residual_infeasibility:.3g})")
        return report

    def contains(self, x: DenseVector, tol: float = FEASIBILITY_TOL) -> bool:
        return bool(np.all(self.B_c @ x - self.b <= tol))


SET_KINDS = {
    'whole_space': WholeSpace,
    'box': Box,
    'halfspace': Halfspace,
    'hyperplane_moment': MomentHyperplane,
    'polyhedron': Polyhedron,
}


def make_set(kind: str, **params) -> FeasibleSet:
    """Build a feasible set by kind name."""
    set_class = SET_KINDS.get(kind)
    if set_class is None:
        raise ValueError(f"Unknown feasible set kind '{kind}' (expected one of {', '.join(SET_KINDS)})")
    logger.debug(f"Creating feasible set {set_class.__name__} with {sorted(params)}")
    return set_class(**params)


def project(S: FeasibleSet, x: DenseVector) -> ProjectionReport:
    """Metric projection of x onto S."""
    return S.project(x)
