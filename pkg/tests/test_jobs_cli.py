"""Batch runner and command-line front end."""

import json
import os

import numpy as np
import pytest

from hinfmor.cli import main
from hinfmor.jobs import Job, ingest, run_job, write_system
from hinfmor.statespace import LtiSystem
from hinfmor.synthetic import make_synthetic

from conftest import mixed_system

CSV_HEADER = (
    "method,r,dr_star,abs_hinf_error,rel_hinf_error,lower_bound,"
    "surrogate_k,norm_method,status"
)


def read_csv_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    return [line.split(",") for line in lines[1:]]


def test_write_system_ingest_round_trip(tmp_path):
    sys = mixed_system(0, 12)
    write_system(sys, str(tmp_path))
    back = ingest(str(tmp_path))
    for s in (0.7, 2.0 + 1.0j):
        assert back.eval(s) == pytest.approx(sys.eval(s), rel=1e-12)


def test_ingest_defaults(tmp_path):
    # no E.mtx means identity, no d.mtx means zero
    sys = mixed_system(0, 8)
    write_system(sys, str(tmp_path))
    os.remove(tmp_path / "E.mtx")
    os.remove(tmp_path / "d.mtx")
    back = ingest(str(tmp_path))
    assert back.d == 0.0
    np.testing.assert_array_equal(np.asarray(back.E), np.eye(8))


def test_synth_then_run_round_trip(tmp_path):
    sysdir = tmp_path / "sys"
    outdir = tmp_path / "out"
    assert main(["synth", "--kind", "sss", "--n", "30",
                 "--seed", "5", "--out", str(sysdir)]) == 0
    for name in ("E.mtx", "A.mtx", "b.mtx", "c.mtx", "d.mtx"):
        assert (sysdir / name).exists()
    made = make_synthetic("sss", 30, seed=5)
    assert ingest(str(sysdir)).eval(1.3) == pytest.approx(made.eval(1.3), rel=1e-12)

    code = main(["run", "--input-dir", str(sysdir), "--method", "iha,bt",
                 "--orders", "2,4", "--out", str(outdir)])
    assert code == 0
    rows = read_csv_rows(outdir / "report.csv")
    assert [(r[0], r[1]) for r in rows] == [
        ("iha", "2"), ("iha", "4"), ("bt", "2"), ("bt", "4"),
    ]
    for r in rows:
        assert len(r) == 9
        assert r[8] == "ok"
        assert float(r[3]) > 0.0 and float(r[4]) > 0.0
        assert r[7] == "level-set"
    # iha rows carry a surrogate order and the model + trace artifacts
    assert rows[0][6].isdigit()
    assert (outdir / "iha_r2" / "model_A.mtx").exists()
    assert (outdir / "iha_r2" / "dr_trace.csv").exists()
    assert (outdir / "iha_r2" / "loewner_sigma.csv").exists()
    assert not (outdir / "bt_r2" / "dr_trace.csv").exists()
    # the shifted model beats or ties plain truncation at equal order
    by_key = {(r[0], r[1]): float(r[3]) for r in rows}
    assert by_key[("iha", "4")] <= by_key[("bt", "4")] * (1.0 + 1e-9)


def test_report_values_use_five_significant_digits(tmp_path):
    out = tmp_path / "o"
    run_job(Job(methods=["bt"], orders=[3], out_dir=str(out),
                synthetic="generic:16", seed=1))
    row = read_csv_rows(out / "report.csv")[0]
    for cell in (row[3], row[4], row[5]):
        digits = cell.split("e")[0].replace("-", "").replace(".", "").lstrip("0")
        assert len(digits) <= 5


def test_unstable_input_fails_per_row_with_exit_2(tmp_path):
    sysdir = tmp_path / "sys"
    unstable = LtiSystem(np.eye(2), np.diag([1.0, -2.0]),
                         np.array([1.0, 1.0]), np.array([1.0, 1.0]), 0.0)
    write_system(unstable, str(sysdir))
    out = tmp_path / "out"
    code = main(["run", "--input-dir", str(sysdir), "--method", "bt",
                 "--orders", "1", "--out", str(out)])
    assert code == 2
    rows = read_csv_rows(out / "report.csv")
    assert rows[0][8] == "UnstableSystem"
    payload = json.loads((out / "report.json").read_text())
    assert "UnstableSystem" in payload["rows"][0]["status"]
    assert payload["rows"][0]["abs_hinf_error"] is None


def test_partial_failure_keeps_other_rows(tmp_path):
    # order 2 exceeds the minimal order of this one-mode system: that row
    # fails as RankDeficient while the order-1 row still succeeds
    sysdir = tmp_path / "sys"
    sys = LtiSystem(np.eye(3), np.diag([-1.0, -2.0, -3.0]),
                    np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), 0.0)
    write_system(sys, str(sysdir))
    out = tmp_path / "out"
    res = run_job(Job(methods=["bt"], orders=[1, 2], out_dir=str(out),
                      input_dir=str(sysdir)))
    assert res.exit_code == 2
    rows = read_csv_rows(out / "report.csv")
    assert rows[0][8] == "ok"
    assert rows[1][8] == "RankDeficient"


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--synthetic", "sss:20", "--method", "bt", "--out", "X"],  # no orders
        ["run", "--synthetic", "sss:20", "--method", "bt", "--orders", "2"],  # no out
        ["run", "--unknown-flag"],
        ["run", "--synthetic", "sss:20", "--method", "nope",
         "--orders", "2", "--out", "X"],
        ["run", "--synthetic", "sss", "--method", "bt",
         "--orders", "2", "--out", "X"],  # malformed kind:n
        ["run", "--input-dir", "/nonexistent-dir-xyz", "--method", "bt",
         "--orders", "2", "--out", "X"],
        ["run", "--synthetic", "sss:20", "--input-dir", ".", "--method", "bt",
         "--orders", "2", "--out", "X"],  # both inputs
        ["run", "--synthetic", "sss:20", "--method", "bt",
         "--orders", "40", "--out", "X"],  # order out of range
    ],
)
def test_invalid_input_exits_3(tmp_path, argv, capsys):
    argv = [str(tmp_path / a) if a == "X" else a for a in argv]
    assert main(argv) == 3


def test_missing_matrix_file_exits_3(tmp_path):
    sysdir = tmp_path / "sys"
    write_system(mixed_system(0, 8), str(sysdir))
    os.remove(sysdir / "A.mtx")
    assert main(["run", "--input-dir", str(sysdir), "--method", "bt",
                 "--orders", "2", "--out", str(tmp_path / "out")]) == 3


def test_config_file_supplies_defaults_and_flags_win(tmp_path):
    cfg = tmp_path / "job.cfg"
    out = tmp_path / "out"
    cfg.write_text(
        "# batch defaults\n"
        "synthetic = sss:24\n"
        "method = bt\n"
        "orders = 2\n"
        f"out = {out}\n"
        "seed = 7\n"
    )
    assert main(["run", "--config", str(cfg), "--orders", "3"]) == 0
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["job"]["orders"] == [3]  # flag beat the file
    assert manifest["job"]["methods"] == ["bt"]
    assert manifest["job"]["seed"] == 7
    assert manifest["job"]["synthetic"] == "sss:24"
    assert "package_version" in manifest


def test_dump_curves_artifacts(tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--synthetic", "generic:14", "--method", "bt",
                 "--orders", "2", "--mode", "dump-curves",
                 "--grid", "1e-2:1e2:50", "--out", str(out)])
    assert code == 0
    freq = (out / "freq_response.csv").read_text().splitlines()
    assert freq[0] == "omega,gain,phase"
    assert len(freq) == 51
    assert float(freq[1].split(",")[0]) == pytest.approx(1e-2)
    assert float(freq[-1].split(",")[0]) == pytest.approx(1e2)
    err = (out / "bt_r2" / "error_curve.csv").read_text().splitlines()
    assert err[0] == "omega,re,im,abs"
    assert len(err) == 51


def test_sampled_norms_mode_marks_rows(tmp_path):
    out = tmp_path / "out"
    res = run_job(Job(methods=["iha", "mbt"], orders=[2], out_dir=str(out),
                      synthetic="sss:20", mode=["sampled-norms"], seed=2))
    assert res.exit_code == 0
    for row in read_csv_rows(out / "report.csv"):
        assert row[7] == "sampled"


def test_reports_are_deterministic_but_timing_is_separate(tmp_path):
    jobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        run_job(Job(methods=["iha"], orders=[2], out_dir=str(out),
                    synthetic="sss:20", seed=9))
        jobs.append(out)
    a, b = jobs
    for rel in ("report.csv", "report.json", "run_manifest.json",
                "iha_r2/model_A.mtx", "iha_r2/dr_trace.csv"):
        assert (a / rel).read_bytes() == (b / rel).read_bytes()
    t = json.loads((a / "timing.json").read_text())
    assert t["total_s"] > 0.0
    assert "wall_clock_s" not in (a / "report.json").read_text()


def test_thread_env_var_changes_worker_count(monkeypatch):
    from hinfmor._parallel import parallel_map, thread_count

    monkeypatch.setenv("MOR_IHA_THREADS", "4")
    assert thread_count() == 4
    assert parallel_map(lambda x: x * x, range(10)) == [x * x for x in range(10)]
    monkeypatch.setenv("MOR_IHA_THREADS", "garbage")
    assert thread_count() == 1
    monkeypatch.delenv("MOR_IHA_THREADS")
    assert thread_count() == 1


def test_threaded_run_matches_serial(tmp_path, monkeypatch):
    outs = []
    for name, threads in (("serial", "1"), ("threaded", "3")):
        monkeypatch.setenv("MOR_IHA_THREADS", threads)
        out = tmp_path / name
        run_job(Job(methods=["iha"], orders=[2], out_dir=str(out),
                    synthetic="generic:18", seed=3, mode=["sampled-norms"]))
        outs.append(out)
    assert (outs[0] / "report.csv").read_bytes() == (outs[1] / "report.csv").read_bytes()
