#!/usr/bin/env python3
"""
Tests for experiment configs, CSV emission and the benchmark harness.
"""

import csv
import sys
import tempfile
from pathlib import Path

import numpy as np

# Add modules to path
sys.path.insert(0, str(Path(__file__).parent))

from modules.bench import (
    TRACE_HEADER,
    RunResult,
    emit_trace_csv,
    gamma_sweep,
    run_experiment,
    summarize,
)
from modules.config import (
    parse_config,
    parse_seed_range,
    resolve_config_path,
    serialize_config,
)
from modules.core import ConfigError, IterationRecord, RunStatus, RunTrace
from modules.logger import parse_size
from vibench import exit_code, parse_gammas

MINIMAL_CONFIG = """
problem: harker_pang
methods: [alg1]
"""

EXPONENTIAL_CONFIG = """
problem:
  family: exponential
  seeds: "0..1"
methods:
  - name: alg1
  - name: alg1_noinertia
workers: 1
timings: false
logging:
  level: WARNING
"""


def _expect_config_error(text, fragment=""):
    try:
        parse_config(text)
    except ConfigError as e:
        assert fragment in str(e), str(e)
    else:
        raise AssertionError(f"expected ConfigError for:\n{text}")


def test_minimal_config_gets_family_defaults():
    cfg = parse_config(MINIMAL_CONFIG)
    assert cfg.problem.family == "harker_pang"
    assert cfg.problem.params == {'m_dim': 10, 'k_cons': 30}
    assert cfg.problem.seeds == [0]
    assert (cfg.stop_rule, cfg.tol) == ("norm_to_zero", 1e-3)
    method = cfg.methods[0]
    assert method.solver.gamma == 0.8 and method.solver.sigma_ls == 0.5
    assert method.solver.alpha_schedule(1) == 0.2
    assert method.solver.stop_rule == "norm_to_zero"
    assert cfg.mode == "checked" and cfg.timings


def test_config_rejects_large_inertia():
    _expect_config_error(MINIMAL_CONFIG.replace("[alg1]", "[{name: alg1, alpha: 0.4}]"),
                         "methods[0].alpha_schedule")


def test_config_rejects_unknown_keys_and_values():
    _expect_config_error(MINIMAL_CONFIG + "colour: blue\n", "colour")
    _expect_config_error(MINIMAL_CONFIG + "stop_rule: wall_clock\n", "stop_rule")
    _expect_config_error("problem: knapsack\nmethods: [alg1]\n", "problem.family")
    _expect_config_error("problem: harker_pang\nmethods: []\n", "methods")
    _expect_config_error("problem: harker_pang\nmethods: [alg1, alg1]\n", "duplicate")
    _expect_config_error("", "empty")


def test_config_accepts_aliases_and_string_numbers():
    cfg = parse_config("""
problem: {family: exponential}
methods:
  - {method: sem, lambda: 0.05, sigma: 0.4}
tol: 1e-3
out: elsewhere
""")
    method = cfg.methods[0]
    assert method.name == "sem"
    assert method.solver.lam == 0.05
    assert method.solver.sigma_ls == 0.4
    assert cfg.tol == 0.001
    assert cfg.output_dir == "elsewhere"


def test_noinertia_forces_zero_alpha():
    cfg = parse_config("problem: exponential\nmethods: [{name: alg1_noinertia, alpha: 0.3}]\n")
    assert cfg.methods[0].solver.alpha_schedule(5) == 0.0


def test_config_round_trip():
    cfg = parse_config(EXPONENTIAL_CONFIG)
    assert parse_config(serialize_config(cfg)) == cfg


def test_parse_seed_range():
    assert parse_seed_range("0..4") == [0, 1, 2, 3, 4]
    assert parse_seed_range("7") == [7]
    for bad in ("3..1", "a..b", "-1..2"):
        try:
            parse_seed_range(bad)
        except ConfigError:
            continue
        raise AssertionError(f"{bad!r} should be rejected")


def _trace(gamma_n=None):
    records = [
        IterationRecord(n=1, step_diff=0.1, residual=0.5, eta=0.64, ls_trials=2, gamma_n=gamma_n, elapsed=0.25),
        IterationRecord(n=2, step_diff=0.01, residual=0.05, eta=1.0, ls_trials=0, gamma_n=gamma_n, elapsed=0.5),
        IterationRecord(n=3, step_diff=0.001, residual=0.005, eta=1.0, ls_trials=0, gamma_n=gamma_n, elapsed=0.75),
    ]
    return RunTrace(records=records, status=RunStatus.CONVERGED, final_point=np.zeros(1))


def test_trace_csv_format():
    with tempfile.TemporaryDirectory() as tmp:
        path = emit_trace_csv(_trace(), Path(tmp) / "t.csv")
        text = path.read_text()
        lines = text.splitlines()
        assert len(lines) == 4
        assert lines[0] == ",".join(TRACE_HEADER)
        row = next(csv.DictReader(text.splitlines()))
        assert row['gamma_n'] == ""
        assert row['step_diff'] == "0.10000000000000001"
        assert row['ls_trials'] == "2"
        assert row['elapsed_s'] == "0.25"


def test_trace_csv_is_byte_identical_without_timings():
    with tempfile.TemporaryDirectory() as tmp:
        a = emit_trace_csv(_trace(3.2), Path(tmp) / "a.csv", timings=False).read_bytes()
        b = emit_trace_csv(_trace(3.2), Path(tmp) / "b.csv", timings=False).read_bytes()
        assert a == b
        assert b"\r" not in a
        assert a.splitlines()[1].endswith(b",")


def _result(method, iterations, status=RunStatus.CONVERGED.value, violations=0):
    return RunResult(method, "alg1", "harker_pang_m10_k30", 0, 0, status, iterations=iterations,
                     cpu_time=0.01 * iterations, final_metric=1e-4, violations=violations)


def test_summarize_statistics():
    groups = {
        'alg1': [_result('alg1', 10), _result('alg1', 20), _result('alg1', 30)],
        'sem': [_result('sem', 40), _result('sem', 0, RunStatus.LINE_SEARCH_FAILURE.value, violations=2)],
    }
    rows, table = summarize(groups)
    alg1, sem = rows
    assert alg1.iter_median == 20.0 and alg1.iter_min == 10 and alg1.iter_max == 30
    assert alg1.converged == 3 and alg1.failed == 0
    assert sem.converged == 1 and sem.failed == 1
    assert sem.iter_median == 40.0
    assert sem.violations == 2
    assert "alg1" in table and "sem" in table


def test_run_experiment_is_reproducible():
    cfg = parse_config(EXPONENTIAL_CONFIG)
    with tempfile.TemporaryDirectory() as tmp:
        first = run_experiment(cfg, Path(tmp) / "a")
        second = run_experiment(cfg, Path(tmp) / "b")
        assert len(first.results) == 4
        assert first.violations == 0 and first.failures == 0
        assert all(r.cpu_time is None for r in first.results)
        for r1, r2 in zip(first.results, second.results):
            assert Path(r1.trace_file).read_bytes() == Path(r2.trace_file).read_bytes()
            assert Path(r1.plot_file).read_bytes() == Path(r2.plot_file).read_bytes()
        assert (Path(tmp) / "a" / "summary.txt").read_text() == (Path(tmp) / "b" / "summary.txt").read_text()
        assert (Path(tmp) / "a" / "summary.json").exists()
        names = sorted(p.name for p in (Path(tmp) / "a" / "traces").iterdir())
        assert names[0] == "exponential__alg1__seed0__rep0.csv"


def test_summary_times_the_solve_loop():
    cfg = parse_config(EXPONENTIAL_CONFIG.replace("timings: false", "timings: true"))
    with tempfile.TemporaryDirectory() as tmp:
        report = run_experiment(cfg, Path(tmp))
    for r in report.results:
        assert r.cpu_time is not None and r.wall_time is not None
        assert 0.0 <= r.cpu_time <= r.wall_time
        assert r.process_cpu_time is not None and r.process_cpu_time >= 0.0
    for row in report.rows:
        loop_times = [r.cpu_time for r in report.results if r.method == row.method]
        assert row.cpu_median == float(np.median(loop_times))


def test_gamma_sweep_labels():
    cfg = gamma_sweep(parse_config(MINIMAL_CONFIG))
    assert [m.display_name for m in cfg.methods] == [
        "alg1_gamma0.01", "alg1_gamma0.1", "alg1_gamma0.5", "alg1_gamma0.8"]
    assert [m.solver.gamma for m in cfg.methods] == [0.01, 0.1, 0.5, 0.8]
    assert parse_gammas("0.1,0.5") == [0.1, 0.5]


def test_exit_code_precedence():
    assert exit_code(0, 0) == 0
    assert exit_code(0, 2) == 2
    assert exit_code(1, 0) == 3
    assert exit_code(1, 5) == 3


def test_parse_size():
    assert parse_size("10MB") == 10 * 1024 * 1024
    assert parse_size("512kb") == 512 * 1024
    assert parse_size("2048") == 2048


def test_resolve_config_path_accepts_directory():
    with tempfile.TemporaryDirectory() as tmp:
        target = Path(tmp) / "experiment.yml"
        target.write_text(MINIMAL_CONFIG)
        assert resolve_config_path(tmp) == target
        assert resolve_config_path(str(target)) == target


def main():
    """Run every test in this file and print a ✓/✗ line per test."""
    print("vibench harness tests")
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
