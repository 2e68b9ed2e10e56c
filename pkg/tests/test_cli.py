import json
from pathlib import Path

import pytest

from cloudfolio.cli import main
from cloudfolio import sample_catalog_path

from conftest import TABLE4_HEADER, TABLE4_ROWS

SMALL_TRACE = ("10;2;5852.00;100.0;1.7;8388608;400000;0\n"
               "310;2;5852.00;150.0;2.5;8388608;524288;0\n")


@pytest.fixture
def trace_dir(tmp_path):
    d = tmp_path / "traces"
    d.mkdir()
    (d / "vm01.csv").write_text(
        TABLE4_HEADER + "\n" + "\n".join(TABLE4_ROWS) + "\n")
    (d / "vm02.csv").write_text(SMALL_TRACE)
    return d


def run(*argv):
    return main([str(a) for a in argv])


def test_map_writes_artifacts(trace_dir, tmp_path, capsys):
    out = tmp_path / "out"
    assert run("map", "--traces", trace_dir, "--catalog",
               sample_catalog_path(), "--out", out) == 0
    for name in ("requirements.csv", "mapping.csv", "distribution.csv",
                 "map_summary.json"):
        assert (out / name).is_file()
    summary = json.loads((out / "map_summary.json").read_text())
    assert summary["vms"] == 2
    assert 0 <= summary["downgrade_share"] <= 1
    lines = (out / "requirements.csv").read_text().splitlines()
    assert "vm01;requested;11704.00;64.000000;2;0" in lines
    assert "vm01;max_utilization;10912.03;6.442665;2;0" in lines


def test_map_missing_traces_dir(tmp_path, capsys):
    rc = run("map", "--traces", tmp_path / "nope", "--catalog",
             sample_catalog_path(), "--out", tmp_path / "out")
    assert rc == 1
    assert "MISSING_FILE" in capsys.readouterr().err


def test_map_single_vm(tmp_path):
    d = tmp_path / "traces"
    d.mkdir()
    (d / "only.csv").write_text(SMALL_TRACE)
    out = tmp_path / "out"
    assert run("map", "--traces", d, "--catalog", sample_catalog_path(),
               "--out", out) == 0
    rows = (out / "mapping.csv").read_text().splitlines()
    assert len(rows) == 3  # header + one row per mode


def test_map_empty_trace_fails_naming_file(tmp_path, capsys):
    d = tmp_path / "traces"
    d.mkdir()
    (d / "empty.csv").write_text(TABLE4_HEADER + "\n")
    rc = run("map", "--traces", d, "--catalog", sample_catalog_path(),
             "--out", tmp_path / "out")
    assert rc == 1
    err = capsys.readouterr().err
    assert "EMPTY_TRACE" in err and "empty.csv" in err


def test_optimize_matrix_and_plans(trace_dir, tmp_path):
    out = tmp_path / "out"
    assert run("optimize", "--traces", trace_dir, "--catalog",
               sample_catalog_path(), "--out", out,
               "--period", 1, "--period", 10, "--period", 8760,
               "--penalty", 0, "--penalty", 500) == 0
    matrix = (out / "avg_cost_matrix.csv").read_text().splitlines()
    assert matrix[0].startswith("period_hours;")
    assert len(matrix) == 4
    summary = json.loads((out / "run_summary.json").read_text())
    assert len(summary["combos"]) == 2 * 3 * 3  # penalties x periods x regimes
    plans = list((out / "plans").glob("plans_*.csv"))
    assert len(plans) == 18
    timelines = list((out / "timelines").glob("timeline_*.csv"))
    assert len(timelines) == 18
    assert (out / "homogeneous_costs.csv").is_file()

    # homogeneous cost table labels penalties explicitly
    header, *rows = (out / "homogeneous_costs.csv").read_text().splitlines()
    assert header.split(";")[1] == "penalty_usd"
    assert any(row.split(";")[1] == "500" for row in rows)


def test_optimize_single_hour_includes_one_hour_spot(trace_dir, tmp_path):
    out = tmp_path / "out"
    assert run("optimize", "--traces", trace_dir, "--catalog",
               sample_catalog_path(), "--out", out, "--period", 1,
               "--penalty", 1000, "--regime", "hetero-no-migration") == 0
    plans = (out / "plans" /
             "plans_maxutil_hetero_no_migration_p1000_n1.csv").read_text()
    assert "1HSM" in plans


def test_optimize_deterministic(trace_dir, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    args = ("optimize", "--traces", trace_dir, "--catalog",
            sample_catalog_path(), "--period", 7, "--period", 24,
            "--penalty", 100, "--seed", 3)
    assert run(*args, "--out", out_a) == 0
    assert run(*args, "--out", out_b) == 0
    files_a = sorted(p.relative_to(out_a) for p in out_a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(out_b) for p in out_b.rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes(), rel


def test_validate_report(tmp_path, capsys):
    out = tmp_path / "val"
    assert run("validate", "--out", out, "--structured", 3,
               "--random", 5, "--seed", 11) == 0
    report = (out / "validation_report.csv").read_text().splitlines()
    assert report[0] == "case_id;n;seed;greedy_cost;dp_cost;rel_gap"
    assert len(report) > 1
    summary = json.loads((out / "validation_summary.json").read_text())
    assert summary["mismatches"] == []


def test_validate_horizon_cap(tmp_path, capsys):
    rc = run("validate", "--out", tmp_path / "val", "--structured", 1,
             "--period", 50000)
    assert rc == 1
    assert "HORIZON_TOO_LARGE" in capsys.readouterr().err


def test_report_reemits_matrix(trace_dir, tmp_path, capsys):
    out = tmp_path / "out"
    assert run("optimize", "--traces", trace_dir, "--catalog",
               sample_catalog_path(), "--out", out, "--period", 6,
               "--penalty", 0, "--no-plans") == 0
    capsys.readouterr()
    assert run("report", "--source", out) == 0
    printed = capsys.readouterr().out.splitlines()
    assert printed[0].startswith("period_hours;")
    assert printed[1].startswith("6;")


def test_workers_parse_identically(trace_dir, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    base = ("map", "--traces", trace_dir, "--catalog", sample_catalog_path())
    assert run(*base, "--out", out_a) == 0
    assert run(*base, "--out", out_b, "--workers", 2) == 0
    assert (out_a / "mapping.csv").read_bytes() == \
        (out_b / "mapping.csv").read_bytes()
