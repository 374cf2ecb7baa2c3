import json
import subprocess
import sys

import pytest

from artifact.cli import main

MIXED = '{"terms":[{"num":1,"den":2,"re":1,"im":0},{"num":1,"den":3,"re":2,"im":0}]}'
GEOMETRIC = {"terms": [
    {"num": 1, "den": 2 ** j, "re": 1.5 * 4.0 ** -j, "im": 0,
     "profile": {"kind": "bump", "center": 0, "width": 0.6}} for j in (1, 2, 3)]}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_filter(capsys):
    code, out, _ = run(capsys, "filter", "--mu", MIXED, "--n", "2")
    assert code == 0
    assert json.loads(out)["terms"] == [{"num": 1, "den": 2, "re": 1.0, "im": 0.0}]


def test_norm_constant(capsys):
    code, out, _ = run(capsys, "norm", "--mu", "constant:3", "--chain", "p=2", "--depth", "6")
    assert code == 0 and json.loads(out)["total"] == 3


def test_norm_from_file(tmp_path, capsys):
    path = tmp_path / "mu.json"
    path.write_text('{"terms":[{"num":1,"den":2,"re":1,"im":0}]}')
    code, out, _ = run(capsys, "norm", "--mu", str(path), "--chain", "p=2", "--depth", "3")
    assert code == 0 and json.loads(out)["terms"] == [2.0, 0.0]


def test_verify_counterexample(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "counterexample", "--N", "6")
    body = json.loads(out)
    assert code == 0 and body["passed"]
    sup = next(c for c in body["checks"] if c["name"] == "counterexample.sup")
    assert sup["detail"]["grid_sup"] < 0.46212


def test_json_is_byte_identical_across_runs(capsys):
    first = run(capsys, "norm", "--mu", MIXED, "--chain", "custom=1,2,6", "--depth", "3")[1]
    second = run(capsys, "norm", "--mu", MIXED, "--chain", "custom=1,2,6", "--depth", "3")[1]
    assert first == second


@pytest.mark.parametrize("argv", [
    ["norm", "--mu", "no-such-file.json"],
    ["norm", "--mu", "{not json"],
    ["norm", "--mu", "constant:3", "--chain", "q=7"],
    ["filter", "--mu", MIXED],
    ["verify", "--suite", "nonsense"],
])
def test_input_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    if err.strip().startswith("{"):
        assert json.loads(err)["error"] == "input"


def test_admission_rejected(capsys):
    code, _, err = run(capsys, "tower", "--mu", "counterexample:N=6", "--chain", "factorial",
                       "--levels", "4")
    assert code == 3
    assert json.loads(err)["error"] == "admission"


def test_solver_non_convergence(capsys):
    code, _, err = run(capsys, "solve-level", "--mu", "disk:k=0.9", "--grid", "64",
                       "--tol", "1e-15", "--max-iter", "2")
    assert code == 4 and json.loads(err)["error"] == "solver"


def test_solve_level_with_dump(tmp_path, capsys):
    dump = tmp_path / "f.bin"
    code, out, _ = run(capsys, "solve-level", "--mu", "disk:k=0.3", "--grid", "128",
                       "--dump", str(dump))
    body = json.loads(out)
    assert code == 0 and body["residual"] <= 1e-3 and dump.stat().st_size > 128 * 128 * 8


def test_grid_environment_variable(monkeypatch, capsys):
    monkeypatch.setenv("ARTIFACT_GRID", "64")
    code, out, _ = run(capsys, "solve-level", "--mu", "disk:k=0.2")
    assert code == 0 and json.loads(out)["N"] == 64
    monkeypatch.setenv("ARTIFACT_GRID", "many")
    assert run(capsys, "solve-level", "--mu", "disk:k=0.2")[0] == 2


def test_tower_writes_json_and_csv(tmp_path, capsys):
    mu = tmp_path / "mu.json"
    mu.write_text(json.dumps(GEOMETRIC))
    out = tmp_path / "tower.json"
    code, _, _ = run(capsys, "tower", "--mu", str(mu), "--chain", "p=2", "--levels", "3",
                     "--grid", "128", "--out", str(out))
    assert code == 0
    body = json.loads(out.read_text())
    assert len(body["diffs"]) == 2
    rows = (tmp_path / "tower.csv").read_text().splitlines()
    assert rows[0].startswith("i,n_i") and len(rows) == 3


def test_extend_and_nvmu(tmp_path, capsys):
    h = '{"terms":[{"num":1,"den":2,"re":0,"im":-0.01},{"num":-1,"den":2,"re":0,"im":0.01}]}'
    out = tmp_path / "ext.csv"
    code, _, _ = run(capsys, "extend", "--h", h, "--nx", "4", "--ny", "3", "--out", str(out))
    assert code == 0 and len(out.read_text().splitlines()) == 13
    code, text, _ = run(capsys, "nvmu", "--h", h, "--nx", "16", "--ny", "8")
    body = json.loads(text)
    assert code == 0 and body["bound_holds"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "artifact", "norm", "--mu", "constant:3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["total"] == 3
