import json
import subprocess
import sys

import numpy as np
import pytest

from subdiag.algebra import a_neg
from subdiag.beurling import Subspace
from subdiag.cli import main
from subdiag.io import matrix_to_json, subspace_to_json
from subdiag.matcore import unit


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_det(capsys, tmp_path):
    p = write(tmp_path / "id2.json", matrix_to_json(np.eye(2)))
    code, out, _ = run(capsys, "det", "--matrix", p)
    data = json.loads(out)
    assert code == 0 and data["delta"] == 1.0
    assert len(data["inputs"]["matrix"]) == 64


def test_factor_hand_cholesky(capsys, tmp_path):
    p = write(tmp_path / "b.json", matrix_to_json(np.array([[2, 1], [1, 1]])))
    code, out, _ = run(capsys, "factor", "--matrix", p, "--partition", "1,1")
    data = json.loads(out)
    a = np.array([[complex(*v) for v in row] for row in data["a"]["entries"]])
    assert code == 0
    assert np.allclose(a, [[1.41421356, 0.70710678], [0, 0.70710678]], atol=1e-8)
    assert data["residuals"]["roundtrip"] < 1e-12


def test_innerouter_flip(capsys, tmp_path):
    p = write(tmp_path / "flip2.json", matrix_to_json(np.array([[0, 1], [1, 0]])))
    code, out, _ = run(capsys, "innerouter", "--matrix", p, "--partition", "1,1")
    data = json.loads(out)
    u = np.array([[complex(*v) for v in row] for row in data["u"]["entries"]])
    h = np.array([[complex(*v) for v in row] for row in data["h"]["entries"]])
    assert code == 0
    assert np.allclose(u, [[0, 1], [1, 0]]) and np.allclose(h, np.eye(2))


def test_precondition_exit_code(capsys):
    code, out, err = run(capsys, "innerouter", "--matrix", "diag:1,0")
    assert code == 3
    assert "NotFactorableError" in err
    assert json.loads(out)["error"] == "NotFactorableError"


def test_input_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 2, "entries": [[1, 0], [0, "x"]]}))
    code, _, err = run(capsys, "det", "--matrix", str(bad))
    assert code == 2 and "entries[1][1]" in err
    code, _, _ = run(capsys, "det", "--matrix", str(tmp_path / "nope.json"))
    assert code == 2


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["verify", "--partition", "0,1"])
    assert e.value.code == 2
    code, _, err = run(capsys, "verify", "--suite", "bogus")
    assert code == 2 and "bogus" in err
    with pytest.raises(SystemExit) as e:
        main(["verify", "--tol", "nosuch=1"])
    assert e.value.code == 2
    code, _, _ = run(capsys, "factor", "--matrix", "id:3", "--partition", "1,1")
    assert code == 2


def test_verify_jensen(capsys, tmp_path):
    out_path = tmp_path / "r.json"
    code, out, _ = run(capsys, "verify", "--suite", "jensen", "--n", "4", "--partition", "2,2",
                       "--seed", "7", "--trials", "100", "--json", str(out_path))
    report = json.loads(out)
    assert code == 0 and report["overall"]
    suite = report["suites"][0]
    assert suite["name"] == "jensen" and suite["failures"] == 0 and suite["instances"] == 100
    assert json.loads(out_path.read_text()) == report
    for key in ("tool_version", "schema_version", "seed", "rng", "algebra", "suites", "overall"):
        assert key in report


def test_verify_structure_on_a_neg(capsys, tmp_path):
    p = write(tmp_path / "aneg.json", a_neg().descriptor())
    code, out, _ = run(capsys, "verify", "--suite", "structure", "--algebra", p)
    report = json.loads(out)
    names = [s["name"] for s in report["suites"]]
    assert names == ["structure", "negative-controls"]
    outcomes = report["suites"][0]["details"]["outcomes"]
    assert not outcomes["density"] and not outcomes["tau_maximal"] and not outcomes["unique_extension"]
    assert report["suites"][1]["failures"] == 0
    assert code == 0


def test_verify_szego_hand_case(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "szego-l2", "--n", "2", "--partition", "1,1",
                       "--h", "diag:1,4")
    report = json.loads(out)
    assert code == 0
    assert report["suites"][0]["details"]["value"] == pytest.approx(2.0, abs=1e-4)


def test_verify_failure_exit_code(capsys):
    # an impossible tolerance makes the suite fail
    code, out, _ = run(capsys, "verify", "--suite", "jensen", "--partition", "2,1",
                       "--trials", "5", "--tol", "jensen=-1")
    assert code == 1 and not json.loads(out)["overall"]


def test_verify_deterministic(capsys):
    args = ["verify", "--suite", "factorization,beurling", "--trials", "10", "--seed", "3",
            "--no-timings"]
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second


def test_szego_command(capsys):
    code, out, _ = run(capsys, "szego", "--h", "diag:1,4", "--opt.restarts", "2")
    data = json.loads(out)
    assert code == 0 and data["value"] == pytest.approx(2.0, abs=1e-6) and data["problem"] == "l2"
    code, out, _ = run(capsys, "szego", "--h", "diag:1,4", "--p", "4", "--q", "2",
                       "--opt.restarts", "2")
    data = json.loads(out)
    assert data["value"] == pytest.approx(2.0, rel=1e-3)
    assert data["mirror_value"] == pytest.approx(2.0, rel=1e-3)


def test_beurling_command(capsys, tmp_path):
    K = Subspace.span([unit(2, i, j) for i in range(2) for j in range(2)])
    p = write(tmp_path / "k.json", subspace_to_json(K))
    code, out, _ = run(capsys, "beurling", "--subspace", p, "--partition", "1,1")
    data = json.loads(out)
    assert code == 0 and len(data["isometries"]) == 2 and data["dim_type2"] == 0
    bad = write(tmp_path / "bad.json", subspace_to_json(Subspace.span([unit(2, 1, 0)])))
    code, _, err = run(capsys, "beurling", "--subspace", bad)
    assert code == 3 and "NotInvariantError" in err


def test_riesz_command(capsys):
    code, out, _ = run(capsys, "riesz", "--matrix", "diag:4,1", "--p", "2", "--q", "2", "--r", "1")
    data = json.loads(out)
    assert code == 0 and data["residuals"]["reconstruction"] < 1e-14
    assert data["norms"]["x_r"] == pytest.approx(data["norms"]["y_p"] * data["norms"]["z_q"])
    code, _, err = run(capsys, "riesz", "--matrix", "diag:4,1", "--p", "2", "--q", "2", "--r", "2")
    assert code == 3 and "ExponentMismatchError" in err
    code, _, _ = run(capsys, "riesz", "--matrix", "diag:1,0", "--p", "2", "--q", "2", "--r", "1",
                     "--eps", "1e-3")
    assert code == 0


def test_outer_command(capsys):
    code, out, _ = run(capsys, "outer", "--matrix", "diag:2,1")
    assert code == 0 and json.loads(out)["outer"] is True


def test_experiment_outer_square(capsys):
    code, out, _ = run(capsys, "experiment", "outer-square", "--n", "3", "--trials", "8")
    report = json.loads(out)
    assert code == 0 and report["suites"][0]["details"]["counterexamples"] == 0


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "subdiag.cli", "det", "--matrix", "id:2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["delta"] == 1.0
