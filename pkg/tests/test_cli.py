import json
import subprocess
import sys
import time

import pytest

from absorbtime.cli import dumps, main

from .conftest import WORKED


@pytest.fixture
def matrix_file(tmp_path):
    path = tmp_path / "worked.csv"
    path.write_text("\n".join(",".join(str(x) for x in row) for row in WORKED) + "\n")
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def table_values(text):
    values = {}
    for line in text.splitlines():
        if " = " in line:
            key, value = line.split(" = ", 1)
            values[key] = value
    return values


def test_analyze_report(capsys, matrix_file):
    code, out, _ = run(capsys, "analyze", matrix_file, 1, 2, "--json")
    assert code == 0
    rep = json.loads(out)
    assert rep["schema"] == "absorbtime.report/1"
    assert rep["passage"]["H_jj"] == 0.25
    assert rep["passage"]["tau_ij"] == 1
    assert rep["elapsed"]["corrected"]["expectation"] == pytest.approx(5 / 3, rel=1e-15)
    assert rep["elapsed"]["paper"]["variance"] == pytest.approx(4744 / 375, rel=1e-15)
    assert rep["elapsed"]["corrected"]["variance"] == pytest.approx(16 / 9, rel=1e-15)
    assert rep["headline"]["mode"] == "corrected"
    flagged = {d["quantity"] for d in rep["discrepancies"] if d["flag"]}
    assert flagged == {"variance"}


def test_table_matches_json(capsys, matrix_file):
    _, text, _ = run(capsys, "analyze", matrix_file, 1, 2)
    _, js, _ = run(capsys, "analyze", matrix_file, 1, 2, "--json")
    rep = json.loads(js)
    table = table_values(text)
    for mode, entry in rep["elapsed"].items():
        for key, value in entry.items():
            assert float(table[f"elapsed.{key}[{mode}]"]) == pytest.approx(value, rel=1e-11)
    assert float(table["passage.H_ij"]) == rep["passage"]["H_ij"]
    assert "DISCREPANCY variance" in text


def test_labels_accepted(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"labels": ["a", "b", "c", "d"], "rows": WORKED}))
    code, out, _ = run(capsys, "analyze", path, "b", "c", "--json")
    assert code == 0 and json.loads(out)["inputs"]["j_label"] == "c"


def test_absorbing_target_is_validation_error(capsys, matrix_file):
    code, _, err = run(capsys, "analyze", matrix_file, 1, 3)
    assert code == 2 and "transient" in err


def test_bad_file(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,0\n0.5,0.4\n")
    code, _, err = run(capsys, "analyze", path, 1, 1)
    assert code == 2 and "row 1" in err


def test_impossible_pair(capsys, tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("1,0,0\n0.5,0.5,0\n0.3,0.3,0.4\n")
    assert run(capsys, "analyze", path, 1, 2)[0] == 3
    assert run(capsys, "distribution", path, 1, 2)[0] == 3
    # the simulator cannot accept anything either
    assert run(capsys, "simulate", path, 1, 2, "--trajectories", 10)[0] == 4


def test_simulate_covers_analytic_values(capsys, matrix_file):
    code, out, _ = run(
        capsys, "simulate", matrix_file, 1, 2, "--json", "--seed", 42, "--trajectories", 1_000_000
    )
    assert code == 0
    sim = json.loads(out)["simulation"]
    assert abs(sim["z_expectation[corrected]"]) < 4
    assert abs(sim["z_variance[corrected]"]) < 4
    assert abs(sim["z_variance[paper]"]) > 4


def test_simulate_is_byte_identical(capsys, matrix_file):
    args = ("simulate", matrix_file, 1, 2, "--json", "--seed", 7, "--trajectories", 100_000)
    first = run(capsys, *args)[1]
    second = run(capsys, *args)[1]
    threaded = run(capsys, *args, "--workers", 4)[1]
    assert first == second == threaded


def test_distribution_table(capsys, matrix_file):
    code, out, _ = run(capsys, "distribution", matrix_file, 1, 2, "--tmax", 3)
    assert code == 0
    rows = [l.split("\t") for l in out.splitlines() if l[:1].isdigit()]
    assert [(r[0], float(r[1])) for r in rows] == [("1", 0.75), ("2", 0.0), ("3", 0.1875)]
    assert out.splitlines()[-1].startswith("# residual tail mass")


def test_distribution_auto_horizon(capsys, matrix_file):
    code, out, _ = run(capsys, "distribution", matrix_file, 1, 2, "--json", "--tail", 1e-10)
    rep = json.loads(out)
    cum = [r["cumulative"] for r in rep["distribution"]]
    assert all(b >= a for a, b in zip(cum, cum[1:])) and cum[-1] <= 1
    assert rep["residual"] < 1e-10


def test_wf_command(capsys, tmp_path):
    code, out, _ = run(capsys, "wf", "--N", 2, "--observed-count", 2, "--json")
    assert code == 0
    age = json.loads(out)["age"]["expected_age"]
    from absorbtime import WrightFisherParams, build_wf_matrix, enumerate_elapsed

    en = enumerate_elapsed(build_wf_matrix(WrightFisherParams(2)), 1, 2, tail=1e-12)
    assert abs(age - en.mean) <= en.mean_bound

    params = tmp_path / "wf.json"
    params.write_text(json.dumps({"N": 3, "s": 0.05, "observed_count": 2}))
    code, out, _ = run(capsys, "wf", params, "--distribution", "--json")
    rep = json.loads(out)
    assert code == 0 and rep["inputs"]["N"] == 3 and rep["residual"] < 1e-10


def test_wf_errors(capsys):
    assert run(capsys, "wf", "--N", 2, "--observed-count", 4)[0] == 2
    code, _, err = run(capsys, "wf", "--N", 3, "--u", 0.01, "--v", 0.01, "--observed-count", 2)
    assert code == 2 and "v = 0" in err


def test_wf_moderate_population_under_a_second(capsys):
    start = time.perf_counter()
    code = run(capsys, "wf", "--N", 50, "--s", 0.02, "--observed-count", 10)[0]
    assert code == 0 and time.perf_counter() - start < 1.0


def test_dumps_uses_17_digits():
    assert dumps({"x": 0.1, "n": 3, "ok": True, "none": None}) == (
        '{"x": 0.10000000000000001, "n": 3, "ok": true, "none": null}'
    )
    assert json.loads(dumps([1 / 3]))[0] == 1 / 3


def test_module_entry_point(matrix_file):
    proc = subprocess.run(
        [sys.executable, "-m", "absorbtime", "analyze", matrix_file, "1", "2", "--json"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["headline"]["expectation"] == pytest.approx(5 / 3)
