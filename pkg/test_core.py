#!/usr/bin/env python3
"""
Tests for the shared vector helpers, solver configuration and trace types.
"""

import math
import sys
from pathlib import Path

import numpy as np

# Add modules to path
sys.path.insert(0, str(Path(__file__).parent))

from modules.core import (
    AlphaSchedule,
    ConfigError,
    DimensionMismatchError,
    IterationRecord,
    NonFiniteError,
    RunStatus,
    RunTrace,
    SolverConfig,
    as_vector,
    combine,
    inner_product,
    isem_step_bound,
    norm,
)


def test_inner_product_and_norm():
    a = np.array([1.0, 2.0, 3.0])
    b = np.array([4.0, 5.0, 6.0])
    assert inner_product(a, b) == 32.0
    assert norm(np.array([3.0, 4.0])) == 5.0
    x = np.random.default_rng(3).standard_normal(7)
    assert math.isclose(inner_product(x, x), norm(x) ** 2, rel_tol=1e-12)


def test_inner_product_is_symmetric_and_bilinear():
    rng = np.random.default_rng(11)
    for _ in range(100):
        x, y, z = rng.standard_normal((3, 8))
        a, b = rng.uniform(-5.0, 5.0, 2)
        xy = inner_product(x, y)
        assert math.isclose(xy, inner_product(y, x), rel_tol=1e-12, abs_tol=1e-12)
        lhs = inner_product(a * x + b * y, z)
        rhs = a * inner_product(x, z) + b * inner_product(y, z)
        scale = (abs(a) * norm(x) + abs(b) * norm(y)) * norm(z)
        assert abs(lhs - rhs) <= 1e-12 * scale


def test_norm_satisfies_parallelogram_identity():
    rng = np.random.default_rng(12)
    for _ in range(100):
        x, y = rng.standard_normal((2, 8)) * rng.uniform(0.1, 100.0)
        lhs = norm(x + y) ** 2 + norm(x - y) ** 2
        rhs = 2.0 * norm(x) ** 2 + 2.0 * norm(y) ** 2
        assert math.isclose(lhs, rhs, rel_tol=1e-10)
    assert math.isclose(norm(-3.5 * np.array([3.0, 4.0])), 17.5, rel_tol=1e-12)


def test_dimension_mismatch_is_rejected():
    try:
        inner_product(np.zeros(2), np.zeros(3))
    except DimensionMismatchError:
        pass
    else:
        raise AssertionError("expected DimensionMismatchError")
    try:
        combine(np.zeros(2), 1.0, np.zeros(3), 1.0)
    except DimensionMismatchError:
        pass
    else:
        raise AssertionError("expected DimensionMismatchError")


def test_combine():
    a = np.array([1.0, -1.0])
    b = np.array([2.0, 0.5])
    assert np.array_equal(combine(a, 2.0, b, -1.0), np.array([0.0, -2.5]))


def test_as_vector_rejects_non_finite():
    assert as_vector(2.0).shape == (1,)
    try:
        as_vector([1.0, float("nan")])
    except NonFiniteError:
        pass
    else:
        raise AssertionError("expected NonFiniteError")
    try:
        as_vector([[1.0, 2.0]])
    except DimensionMismatchError:
        pass
    else:
        raise AssertionError("expected DimensionMismatchError")


def test_constant_alpha_schedule():
    schedule = AlphaSchedule.constant(0.2)
    assert schedule(1) == 0.2
    assert schedule(1000) == 0.2
    assert schedule.cap == 0.2


def test_ramp_alpha_schedule_is_nondecreasing():
    schedule = AlphaSchedule(kind="ramp", value=0.3, start=0.0, ramp_iters=4)
    values = [schedule(n) for n in range(1, 10)]
    assert values[0] == 0.0
    assert math.isclose(values[1], 0.1)
    assert math.isclose(values[3], 0.3)
    assert all(a <= b for a, b in zip(values, values[1:]))
    assert max(values) <= schedule.cap


def test_default_solver_config_is_valid():
    cfg = SolverConfig()
    assert (cfg.gamma, cfg.sigma_ls, cfg.alpha_schedule(1)) == (0.8, 0.5, 0.2)
    for method in ("alg1", "alg1_noinertia", "sem", "isem"):
        cfg.validate(method)


def test_large_inertia_is_rejected_for_alg1():
    cfg = SolverConfig(alpha_schedule=AlphaSchedule.constant(0.4))
    try:
        cfg.validate("alg1")
    except ConfigError as e:
        assert "alpha_schedule" in str(e)
        assert "1/3" in str(e)
    else:
        raise AssertionError("alpha = 0.4 must be rejected")


def test_out_of_range_parameters_are_rejected():
    bad = [
        SolverConfig(gamma=1.0),
        SolverConfig(sigma_ls=0.0),
        SolverConfig(tol=0.0),
        SolverConfig(stop_rule="wall_clock"),
        SolverConfig(mode="turbo"),
        SolverConfig(lam=-1.0),
    ]
    for cfg in bad:
        try:
            cfg.validate("alg1")
        except ConfigError:
            continue
        raise AssertionError(f"{cfg} should be rejected")


def test_isem_step_bound():
    # alpha = 0.2, delta = 0.04 admits lambda * L <= 0.125
    assert math.isclose(isem_step_bound(0.2, 0.04), 0.125, rel_tol=1e-12)
    assert math.isclose(isem_step_bound(0.0, 0.04), 0.92, rel_tol=1e-12)


def test_run_status_success_flags():
    assert RunStatus.CONVERGED.succeeded
    assert RunStatus.EXACT_SOLUTION_FOUND.succeeded
    assert not RunStatus.MAX_ITER.succeeded
    assert not RunStatus.LINE_SEARCH_FAILURE.succeeded


def test_trace_final_metric():
    records = [
        IterationRecord(n=1, step_diff=0.5, residual=0.25, eta=1.0, ls_trials=0, x_norm=2.0),
        IterationRecord(n=2, step_diff=0.1, residual=0.05, eta=0.8, ls_trials=1, x_norm=1.0),
    ]
    trace = RunTrace(records=records, status=RunStatus.CONVERGED, final_point=np.zeros(1))
    assert trace.iterations == 2
    assert trace.converged
    assert trace.final_metric("step_diff") == 0.1
    assert trace.final_metric("residual") == 0.05
    assert trace.final_metric("norm_to_zero") == 1.0
    empty = RunTrace(records=[], status=RunStatus.MAX_ITER, final_point=np.zeros(1))
    assert math.isnan(empty.final_metric("residual"))


def main():
    """Run every test in this file and print a ✓/✗ line per test."""
    print("vibench core tests")
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
