from __future__ import annotations

import io
import subprocess
import sys

import numpy as np
import pytest

from spcaslr.cli import main
from spcaslr.harness import CSV_HEADER, read_csv
from spcaslr.sampler import load_csv


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_gen_round_trip(tmp_path):
    path = tmp_path / "x.csv"
    code, text = run("gen", "--n", "30", "--d", "8", "--k", "2", "--theta", "2", "--seed", "3", "--out", str(path))
    assert code == 0
    assert "support:" in text
    x = load_csv(path)
    assert (x.n, x.d) == (30, 8)
    again = tmp_path / "y.csv"
    run("gen", "--n", "30", "--d", "8", "--k", "2", "--theta", "2", "--seed", "3", "--out", str(again))
    assert path.read_bytes() == again.read_bytes()


def test_qtest_on_file(tmp_path):
    path = tmp_path / "x.csv"
    run("gen", "--n", "500", "--d", "30", "--k", "3", "--theta", "20", "--spike", "uniform", "--out", str(path))
    code, text = run("qtest", "--input", str(path), "--k", "3", "--solver", "omp", "--full")
    assert code == 0
    assert "decision: 1" in text
    assert "coordinates evaluated: 30/30" in text


def test_qtest_null():
    code, text = run("qtest", "--n", "1000", "--d", "30", "--k", "2", "--theta", "0")
    assert code == 0
    assert "decision: 0" in text


@pytest.mark.parametrize("method", ["qslr", "dt", "ct", "tpower"])
def test_recover_methods(method):
    code, text = run("recover", "--n", "400", "--d", "40", "--k", "4", "--theta", "5", "--method", method)
    assert code == 0
    selected = text.splitlines()[0].split()[1:]
    assert len(selected) == 4
    assert "overlap_fraction:" in text


def test_recover_threshold_mode():
    code, text = run("recover", "--n", "2000", "--d", "60", "--k", "3", "--theta", "3", "--mode", "threshold")
    assert code == 0
    assert text.startswith("selected:")


@pytest.mark.parametrize(
    "argv",
    [
        ["recover", "--k", "0"],
        ["recover", "--k", "100", "--d", "100"],
        ["qtest", "--solver", "cosamp"],
        ["recover", "--method", "zht"],
        ["qtest", "--bogus"],
        ["bench-recovery", "--method", "mdp", "--trials", "1"],
        ["bench-testing", "--trials", "zero"],
        ["bench-recovery", "--preset", "figure2"],
        [],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv, out=io.StringIO()) == 1
    assert capsys.readouterr().err


def test_runtime_failure_exit_2(tmp_path, capsys):
    missing = tmp_path / "missing.csv"
    assert main(["qtest", "--input", str(missing)], out=io.StringIO()) == 2
    assert "runtime failure" in capsys.readouterr().err


def test_bench_recovery_stdout():
    code, text = run("bench-recovery", "--n", "60", "--d", "30", "--k", "3,4", "--trials", "2", "--method", "dt,qslr")
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 2 * 2 * 2 + 2 * 2


def test_bench_testing_to_file(tmp_path):
    out = tmp_path / "r.csv"
    code, text = run("bench-testing", "--n", "50", "--d", "30", "--k", "3", "--theta", "4", "--trials", "3",
                     "--method", "qslr", "--out", str(out))
    assert code == 0
    assert "best-cutoff error" in text
    rows = read_csv(out)
    assert {r.metric for r in rows} == {"statistic_h0", "statistic_h1", "best_cutoff_error"}


def test_bench_config_file(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n=50\nd=20\nk=2\ntrials=2\nmethod=dt\ntheta=2\n")
    code, text = run("bench-recovery", "--config", str(cfg), "--trials", "3")
    assert code == 0
    assert len(text.splitlines()) == 1 + 3 + 1


def test_bench_workers_deterministic():
    args = ["bench-recovery", "--n", "60", "--d", "30", "--k", "3", "--trials", "3", "--seed", "9"]
    assert run(*args)[1] == run(*args, "--workers", "3")[1]


def test_verify():
    code, text = run("verify")
    assert code == 0
    assert text.count("[PASS]") == 7
    assert "7/7 checks passed" in text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "spcaslr", "recover", "--k", "0"], capture_output=True, text=True)
    assert proc.returncode == 1
    assert "--k must be >= 1" in proc.stderr


def test_rescale_flag(tmp_path):
    path = tmp_path / "x.csv"
    code, _ = run("gen", "--n", "40", "--d", "5", "--k", "2", "--rescale", "--out", str(path))
    assert code == 0
    np.testing.assert_allclose(np.mean(load_csv(path).data ** 2, axis=0), 1.0, atol=1e-12)
