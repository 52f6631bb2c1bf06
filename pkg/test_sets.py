#!/usr/bin/env python3
"""
Tests for the feasible sets and their projectors.
"""

import math
import sys
from pathlib import Path

import numpy as np

# Add modules to path
sys.path.insert(0, str(Path(__file__).parent))

from modules.acceptance import polyhedron_projection_oracle
from modules.core import DimensionMismatchError, ProjectionError, ZeroNormalError
from modules.problems import make_problem
from modules.sets import (
    Box,
    Halfspace,
    MomentHyperplane,
    Polyhedron,
    WholeSpace,
    make_set,
    moment,
    moment_weights,
    project,
    project_halfspace,
    project_moment_hyperplane,
    project_polyhedron_dykstra,
)


def _satisfies_projection_inequality(S, x, p, rng, n_samples=50):
    # p = P_S(x) iff <x - p, y - p> <= 0 for all feasible y
    for _ in range(n_samples):
        y = S.project(rng.uniform(-5.0, 5.0, S.dim)).point
        if inner(x - p, y - p) > 1e-10 * max(1.0, np.linalg.norm(x - p) * np.linalg.norm(y - p)):
            return False
    return True


def inner(a, b):
    return float(np.dot(a, b))


def test_halfspace_projection():
    g = np.array([0.36])
    assert math.isclose(project_halfspace(g, np.array([0.36]), np.array([1.0]))[0], 0.36, rel_tol=1e-12)
    w = np.array([0.1])
    assert project_halfspace(g, np.array([0.36]), w) is w

    p = project_halfspace(np.array([1.0, 1.0]), np.zeros(2), np.array([1.0, 1.0]))
    assert np.allclose(p, [0.0, 0.0])


def test_halfspace_rejects_zero_normal():
    try:
        project_halfspace(np.zeros(2), np.zeros(2), np.ones(2))
    except ZeroNormalError:
        pass
    else:
        raise AssertionError("expected ZeroNormalError")
    try:
        Halfspace(np.zeros(3), np.zeros(3))
    except ZeroNormalError:
        pass
    else:
        raise AssertionError("expected ZeroNormalError")


def test_whole_space_is_identity():
    S = WholeSpace(3)
    x = np.array([1.0, -2.0, 3.0])
    report = S.project(x)
    assert report.exact
    assert np.array_equal(report.point, x)


def test_box_projection_and_half_line():
    S = Box([0.0, -1.0], [1.0, 1.0])
    assert np.array_equal(S.project(np.array([2.0, -3.0])).point, [1.0, -1.0])

    half_line = Box(0.0, math.inf, dim=1)
    assert half_line.project(np.array([-3.0])).point[0] == 0.0
    assert half_line.project(np.array([2.0])).point[0] == 2.0
    assert half_line.contains(np.array([1e9]))
    assert not half_line.contains(np.array([-1e-3]))


def test_box_rejects_inverted_bounds():
    try:
        Box([1.0], [0.0])
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for lo > hi")


def test_projection_dimension_checked():
    try:
        Box(0.0, 1.0, dim=3).project(np.zeros(2))
    except DimensionMismatchError:
        pass
    else:
        raise AssertionError("expected DimensionMismatchError")


def test_moment_hyperplane_projection():
    N = 100
    S = MomentHyperplane(N)
    p = S.project(np.zeros(N)).point
    assert math.isclose(moment(p, S.grid), 2.0, rel_tol=0.0, abs_tol=1e-12)
    # the zero function lands close to 6t, the continuous answer; the endpoint carries half weight
    assert np.allclose(p[:-1], 6.0 * S.grid[:-1], rtol=3.0 / N)
    assert S.contains(p)
    # p is the shortest feasible vector, so no feasible multiple of t beats it
    t_feasible = (2.0 / moment(S.grid, S.grid)) * S.grid
    assert S.contains(t_feasible)
    assert np.linalg.norm(p) < np.linalg.norm(t_feasible)

    x = np.random.default_rng(0).standard_normal(N)
    q = project_moment_hyperplane(x, S.grid)
    assert math.isclose(moment(q, S.grid), 2.0, abs_tol=1e-12)
    # projecting again changes nothing
    assert np.allclose(S.project(q).point, q, atol=1e-12)


def test_moment_weights_follow_the_trapezoid_rule():
    grid = np.arange(1, 5) / 4
    assert np.allclose(moment_weights(grid), [0.0625, 0.125, 0.1875, 0.125])
    # int_0^1 t dt = 1/2 exactly for the trapezoid rule
    assert math.isclose(moment(np.ones(4), grid), 0.5, rel_tol=1e-12)


def test_affine_tangent_removes_the_normal_component():
    S = MomentHyperplane(10)
    v = np.random.default_rng(3).standard_normal(10)
    parallel = S.tangent(v)
    assert abs(np.dot(S.weights, parallel)) <= 1e-14 * np.linalg.norm(v)
    assert np.allclose(S.tangent(S.weights), 0.0, atol=1e-15)
    assert np.array_equal(WholeSpace(3).tangent(np.ones(3)), np.ones(3))
    assert Box(0.0, 1.0, dim=2).tangent(np.ones(2)) is None


def test_exact_projectors_satisfy_projection_inequality():
    rng = np.random.default_rng(42)
    for dim in (1, 3, 6):
        sets = [
            WholeSpace(dim),
            Box(rng.uniform(-2.0, 0.0, dim), rng.uniform(0.0, 2.0, dim)),
            Halfspace(rng.standard_normal(dim), rng.standard_normal(dim)),
            MomentHyperplane(dim + 1),
        ]
        for S in sets:
            for _ in range(10):
                x = rng.uniform(-5.0, 5.0, S.dim)
                p = S.project(x).point
                assert S.contains(p), f"{S.kind} projection is infeasible"
                assert _satisfies_projection_inequality(S, x, p, rng), S.kind


def _exact_sets(rng, dim):
    return [
        WholeSpace(dim),
        Box(rng.uniform(-2.0, 0.0, dim), rng.uniform(0.0, 2.0, dim)),
        Box(0.0, math.inf, dim=dim),
        Halfspace(rng.standard_normal(dim), rng.standard_normal(dim)),
        MomentHyperplane(dim + 1),
    ]


def test_exact_projectors_are_firmly_nonexpansive():
    rng = np.random.default_rng(7)
    for dim in (1, 4, 9):
        for S in _exact_sets(rng, dim):
            for _ in range(200):
                x, y = rng.uniform(-10.0, 10.0, (2, S.dim))
                d = S.project(x).point - S.project(y).point
                lhs = inner(d, d)
                rhs = inner(d, x - y)
                assert lhs <= rhs + 1e-10 * max(1.0, rhs), f"{S.kind}: {lhs} > {rhs}"


def test_exact_projectors_decrease_distance_to_feasible_points():
    # ||P x - x*||^2 <= ||x - x*||^2 - ||x - P x||^2 for every feasible x*
    rng = np.random.default_rng(8)
    for dim in (1, 4, 9):
        for S in _exact_sets(rng, dim):
            for _ in range(200):
                x = rng.uniform(-10.0, 10.0, S.dim)
                x_star = S.project(rng.uniform(-10.0, 10.0, S.dim)).point
                p = S.project(x).point
                lhs = inner(p - x_star, p - x_star)
                rhs = inner(x - x_star, x - x_star) - inner(x - p, x - p)
                assert lhs <= rhs + 1e-10 * max(1.0, inner(x - x_star, x - x_star)), S.kind


def test_polyhedron_projection_hand_cases():
    orthant = Polyhedron(np.eye(2), np.zeros(2))
    assert np.allclose(orthant.project(np.array([1.0, 2.0])).point, [0.0, 0.0])
    assert np.allclose(orthant.project(np.array([1.0, -1.0])).point, [0.0, -1.0])

    single = Polyhedron([[1.0, 1.0]], [1.0])
    assert np.allclose(single.project(np.array([1.0, 1.0])).point, [0.5, 0.5])

    wedge = Polyhedron([[1.0, 0.0], [1.0, 1.0]], [0.0, 0.0])
    report = wedge.project(np.array([1.0, 1.0]))
    assert report.exact
    assert report.sweeps > 1
    assert report.residual_infeasibility <= 1e-10
    assert np.allclose(report.point, [0.0, 0.0], atol=1e-8)


def test_polyhedron_matches_active_set_oracle():
    B_c = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, -1.0], [-1.0, 1.0, 1.0]])
    b = np.array([0.5, 0.2, 1.0])
    for x in ([2.0, 2.0, 2.0], [-1.0, 3.0, 0.0], [1.0, -2.0, 0.5]):
        x = np.array(x)
        p = project_polyhedron_dykstra(B_c, b, x).point
        assert np.allclose(p, polyhedron_projection_oracle(B_c, b, x), atol=1e-7)


def test_polyhedron_projection_is_accurate_on_harker_pang():
    # seed 6 once stopped on a stalled sweep while still 4.8e-4 infeasible
    problem = make_problem("harker_pang", {'m_dim': 10, 'k_cons': 30}, 6)
    S = problem.feasible
    x = problem.x1 - problem.operator(problem.x1)
    report = S.project(x)
    p = report.point
    assert report.residual_infeasibility <= 1e-9
    assert np.max(S.B_c @ p - S.b) <= 1e-9
    rng = np.random.default_rng(6)
    feasible = [np.zeros(S.dim)] + [S.project(rng.uniform(-3.0, 3.0, S.dim)).point for _ in range(20)]
    for y in feasible:
        slack = 1e-8 * max(1.0, np.linalg.norm(x - p) * np.linalg.norm(y - p))
        assert inner(x - p, y - p) <= slack


def test_polyhedron_feasible_point_is_unchanged():
    report = project_polyhedron_dykstra(np.eye(2), np.ones(2), np.array([0.5, -3.0]))
    assert report.exact
    assert report.sweeps == 1
    assert np.array_equal(report.point, [0.5, -3.0])
    assert report.residual_infeasibility == 0.0


def test_infeasible_polyhedron_raises():
    # x <= -1 and x >= 1
    S = Polyhedron([[1.0], [-1.0]], [-1.0, -1.0], max_sweeps=50)
    try:
        S.project(np.array([0.0]))
    except ProjectionError:
        pass
    else:
        raise AssertionError("expected ProjectionError")


def test_make_set_registry():
    S = make_set("box", lo=0.0, hi=1.0, dim=2)
    assert isinstance(S, Box) and S.dim == 2
    assert isinstance(make_set("whole_space", dim=4), WholeSpace)
    assert np.array_equal(project(S, np.array([2.0, -1.0])).point, [1.0, 0.0])
    try:
        make_set("simplex", dim=3)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for unknown kind")


def main():
    """Run every test in this file and print a ✓/✗ line per test."""
    print("vibench feasible set tests")
    print("=" * 50)
    failures = 0
    for name, func in sorted(globals().items()):
        if name.startswith("test_") and callable(func):
            try:
                func()
                print(f"✓ {name}")
            except Exception as e:
                failures += 1
                print(f"✗ {name}: {e}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
