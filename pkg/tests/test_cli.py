import csv
import io
import json
import subprocess
import sys

import pytest

from ergopt.cli import ERROR, FAIL, PASS, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_beta_json(capsys):
    code, out, _ = run(capsys, "beta", "--map", "doubling", "--phi", "-cos(2*pi*x)", "--max-period", "8",
                       "--cells", "1024")
    assert code == PASS
    data = json.loads(out)
    rep = data["reports"][0]
    assert rep["argmax_orbit"]["itinerary"] == "01"
    assert abs(rep["beta_orbit"] - 0.5) < 1e-12 and rep["gap"] <= 0.02


def test_beta_csv(capsys):
    code, out, _ = run(capsys, "beta", "--map", "tent:a=2", "--phi", "cos(pi*x)", "--phi", "x*(2-x)",
                       "--max-period", "6", "--cells", "512", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == PASS
    assert rows[0] == ["phi", "beta_orbit", "argmax", "beta_cycle", "gap"]
    assert [r[2] for r in rows[1:]] == ["L", "R"]


def test_subaction_passes(capsys):
    code, out, _ = run(capsys, "subaction", "--map", "doubling", "--phi", "-cos(2*pi*x)", "--depth", "10",
                       "--grid", "1024", "--max-period", "8")
    data = json.loads(out)
    assert code == PASS
    assert data["verify"]["pass"] and data["verify"]["c_excluded"]
    assert data["lipschitz"]["lip_observed"] <= data["lipschitz"]["claim_bound"]


def test_support_and_subordination(capsys):
    code, out, _ = run(capsys, "support", "--map", "doubling", "--phi", "cos(2*pi*x)", "--depth", "12",
                       "--grid", "600", "--max-period", "6")
    data = json.loads(out)
    assert code == PASS and data["subordination"]["pass"]
    assert 0.0 in data["support"]["members"]


def test_markov_defaults(capsys):
    code, out, _ = run(capsys, "markov", "--map", "tent:a=1.9", "--m", "4", "--depth", "3")
    data = json.loads(out)
    assert code == PASS and data["cover"]["verified"]


def test_markov_bad_points(capsys):
    code, _, err = run(capsys, "markov", "--map", "tent:a=2", "--K", "1", "--z", "0", "--m", "4")
    assert code == ERROR and "turning point" in err


def test_lock_and_gamma(capsys, tmp_path):
    out_file = tmp_path / "lock.csv"
    code, _, _ = run(capsys, "lock", "--map", "doubling", "--phi",
                     "-dist(x, [0.3333333333333333, 0.6666666666666666])", "--trials", "10", "--format", "csv",
                     "--out", str(out_file))
    assert code == PASS
    rows = list(csv.reader(out_file.open()))
    assert rows[0][0] == "trial" and len(rows) == 11
    code, out, _ = run(capsys, "gamma", "--map", "doubling", "--phi", "-cos(2*pi*x)", "--depth", "12",
                       "--grid", "1000", "--t-values", "0.5,1,2")
    assert code == PASS and json.loads(out)["pass"]


def test_failure_exit_code(capsys):
    # four cells are far too coarse for the two routes to agree
    code, _, _ = run(capsys, "beta", "--map", "doubling", "--phi", "sin(2*pi*x)", "--max-period", "3",
                     "--cells", "4")
    assert code == FAIL


def test_errors(capsys):
    assert run(capsys, "beta", "--map", "doubling", "--phi", "cos(2*pi*x")[0] == ERROR
    assert run(capsys, "beta", "--map", "doubling")[0] == ERROR
    assert run(capsys, "beta", "--map", "henon", "--phi", "x")[0] == ERROR
    assert run(capsys, "beta", "--map", "doubling", "--phi", "x", "--max-period", "30")[0] == ERROR


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("family = tent\na_values = 1.6,2\nphi = cos(pi*x)\nmax_period = 6\n")
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == PASS and len(rows) == 3
    assert rows[0][0] == "a"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ergopt", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "sweep" in res.stdout


@pytest.mark.parametrize("threads", ["1", "4"])
def test_sweep_output_stable(capsys, threads):
    code, out, _ = run(capsys, "sweep", "--family", "quad", "--a-values", "3.9,4", "--phi", "x",
                       "--max-period", "6", "--threads", threads, "--format", "csv")
    assert code == PASS
    assert out.splitlines()[2].split(",")[3] == "R"
