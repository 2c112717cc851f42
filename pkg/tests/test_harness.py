import csv
import io
import math

import numpy as np
import pytest

from stgwave.errors import ConfigurationError, UsageError
from stgwave.harness import (CSV_COLUMNS, StudyConfig, Trajectory, bench_compare, run_cli,
                             selftest, spatial_error, temporal_error, two_mesh_spatial,
                             two_mesh_temporal, write_rows)
from stgwave.mesh import read_csv, unit_square
from stgwave.stepper import example_problem, run_stg


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def strip_timing(text):
    keep = [c for c in CSV_COLUMNS if c not in ("cpu_seconds", "phase_coarse_s", "phase_fine_s")]
    return [{k: r[k] for k in keep} for r in rows_of(text)]


def test_temporal_error_definition():
    rng = np.random.default_rng(0)
    coarse = Trajectory("stg", 4, 8, 3, rng.standard_normal((4, 49)), 0.0)
    fine = Trajectory("stg", 4, 8, 6, rng.standard_normal((7, 49)), 0.0)
    expected = max(np.sqrt(np.sum((coarse.levels[n] - fine.levels[2 * n]) ** 2)) / 8
                   for n in range(4))
    assert temporal_error(coarse, fine) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(UsageError):
        temporal_error(coarse, coarse)


def test_spatial_error_definition():
    rng = np.random.default_rng(1)
    coarse = Trajectory("stg", 2, 4, 2, rng.standard_normal((3, 9)), 0.0)
    fine = Trajectory("stg", 4, 8, 2, rng.standard_normal((3, 49)), 0.0)
    fc = fine.levels[-1].reshape(7, 7)
    diff = [coarse.levels[-1].reshape(3, 3)[i, j] - fc[2 * i + 1, 2 * j + 1]
            for i in range(3) for j in range(3)]
    assert spatial_error(coarse, fine) == pytest.approx(np.sqrt(np.sum(np.square(diff))) / 4)


def test_temporal_rows_compare_with_half_step_run():
    config = StudyConfig(alpha0=1.5, N=(8, 16), M_H=(4,), J=2)
    rows = two_mesh_temporal(config)
    assert [r["N"] for r in rows] == [8, 16]
    problem = example_problem(1.5, "I")
    runs = {N: run_stg(problem, 4, 2, N)[1] for N in (4, 8, 16)}
    for r in rows:
        N = r["N"]
        a, b = runs[N // 2].levels, runs[N].levels[::2]
        expected = np.max(np.sqrt(np.sum((a - b) ** 2, axis=1))) / 8
        assert r["error"] == pytest.approx(expected, rel=1e-12)
    assert rows[0]["rate"] is None
    assert rows[1]["rate"] == pytest.approx(math.log2(rows[0]["error"] / rows[1]["error"]))


def test_spatial_rows_use_half_resolution_partner():
    config = StudyConfig(alpha0=1.3, N=(8,), M_H=(4, 8), J=2)
    rows = two_mesh_spatial(config)
    assert [(r["M_H"], r["M_h"]) for r in rows] == [(4, 8), (8, 16)]
    assert rows[1]["rate"] is not None


def test_nonlinear_scheme_rows_have_empty_coarse_columns():
    config = StudyConfig(scheme="nonlinear", alpha0=1.5, N=(8,), M_h=(6,))
    buf = io.StringIO()
    write_rows(two_mesh_temporal(config), buf)
    row = rows_of(buf.getvalue())[0]
    assert row["M_H"] == "" and row["phase_coarse_s"] == "" and row["rate"] == ""


def test_config_validation():
    with pytest.raises(ConfigurationError):
        StudyConfig(scheme="other")
    with pytest.raises(ConfigurationError):
        StudyConfig(M_H=(8,), M_h=(12,))
    with pytest.raises(ConfigurationError):
        StudyConfig(alpha0=(2.3,), M_H=(4,), J=2)
    with pytest.raises(ConfigurationError):
        two_mesh_temporal(StudyConfig(N=(7,), M_H=(4,), J=2))


def test_bench_pairs_both_schemes():
    rows = bench_compare(StudyConfig(alpha0=1.2, case="II", N=(8,), M_H=(4,), J=2))
    assert [r["scheme"] for r in rows] == ["stg", "nonlinear"]
    assert all(r["error"] > 0 for r in rows)


def test_cli_output_is_deterministic_apart_from_timing():
    args = ("converge-time", "--alpha0", "1.5", "--N", "8,16", "--MH", "4", "--J", "2")
    code1, out1, _ = cli(*args)
    code2, out2, _ = cli(*args)
    assert code1 == code2 == 0
    assert out1.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert strip_timing(out1) == strip_timing(out2)


def test_cli_workers_env_gives_same_rows(monkeypatch):
    args = ("converge-time", "--alpha0", "1.4,1.6", "--N", "8", "--MH", "4", "--J", "2")
    _, serial, _ = cli(*args)
    monkeypatch.setenv("STGWAVE_WORKERS", "2")
    code, parallel, _ = cli(*args)
    assert code == 0
    assert strip_timing(serial) == strip_timing(parallel)


def test_cli_config_file_and_override(tmp_path):
    cfg = tmp_path / "study.cfg"
    cfg.write_text("scheme = stg\ncase = II\nalpha0 = 1.3\nN = 8\nMH = 4\nJ = 2  # ratio\n")
    code, out, _ = cli("converge-time", "--config", str(cfg), "--N", "16")
    assert code == 0
    row = rows_of(out)[0]
    assert (row["case"], row["N"], row["M_h"]) == ("II", "16", "8")


def test_cli_writes_output_file_and_dump(tmp_path):
    target = tmp_path / "rows.csv"
    code, out, _ = cli("converge-space", "--alpha0", "1.3", "--N", "8", "--MH", "4", "--J", "2",
                       "-o", str(target))
    assert code == 0 and out == ""
    assert len(rows_of(target.read_text())) == 1
    dump = tmp_path / "final.csv"
    code, _, _ = cli("solve", "--alpha0", "1.5", "--N", "4", "--MH", "4", "--J", "2",
                     "--dump-final", str(dump))
    assert code == 0
    assert read_csv(dump, unit_square(8)).zero_boundary


def test_cli_include_setup_adds_table_time():
    code, out, _ = cli("solve", "--scheme", "nonlinear", "--alpha0", "1.5", "--N", "4",
                       "--Mh", "6", "--include-setup")
    assert code == 0 and float(rows_of(out)[0]["cpu_seconds"]) >= 0


@pytest.mark.parametrize("argv", [
    ("bogus",),
    ("converge-time", "--alpha0", "2.5", "--MH", "4", "--J", "2"),
    ("converge-time", "--scheme", "stg", "--MH", "4", "--Mh", "10"),
    ("converge-time", "--config", "/nonexistent/file.cfg"),
])
def test_cli_usage_errors_exit_one(argv):
    code, _, err = cli(*argv)
    assert code == 1
    assert "stgwave" in err


def test_cli_numerical_failure_exits_two(monkeypatch):
    import stgwave.stepper as stepper
    monkeypatch.setattr(stepper, "NEWTON_MAXIT", 0)
    monkeypatch.setattr(stepper._newton, "__defaults__", (1e-12, 0))
    code, _, err = cli("solve", "--scheme", "nonlinear", "--alpha0", "1.5", "--N", "4", "--Mh", "6")
    assert code == 2
    assert "numerical failure" in err


def test_selftest_passes():
    results = selftest(seed=3)
    assert all(ok for _, ok, _ in results), results
    code, out, _ = cli("selftest")
    assert code == 0 and out.count("PASS") == len(results)
