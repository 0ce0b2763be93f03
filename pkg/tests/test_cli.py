import csv
import io
import json

import pytest

from vstates.cli import RunConfig, ValidationError, main, read_config_file
from vstates.linearized import bifurcation_ratio
from vstates.solver import read_jsonl

SMALL_TRACE = ["--family", "disk", "--m", "2", "--n-modes", "16", "--epsilon-step", "0.01"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_bifurcation_points(capsys):
    code, out, _ = run(capsys, "bifurcation-points", "--m-max", "8")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["m"]) for r in rows] == list(range(3, 9))
    assert float(rows[0]["r"]) == pytest.approx(1 / 3, abs=1e-12)
    for row in rows:
        assert float(row["r"]) == bifurcation_ratio(int(row["m"]))


def test_selftest_integrals(capsys):
    code, out, _ = run(capsys, "selftest-integrals")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 17 * 19
    assert max(float(r["delta"]) for r in rows) < 1e-10


def test_trace_zero_steps(capsys):
    code, out, _ = run(capsys, "trace", "--family", "ellipse", "--m", "3", "--steps", "0")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 1
    (pt,) = read_jsonl(out)
    assert pt.epsilon == 0.0 and pt.param == pytest.approx(1 / 3, abs=1e-12)


def test_trace_deterministic(capsys):
    first = run(capsys, "trace", *SMALL_TRACE, "--steps", "2")
    second = run(capsys, "trace", *SMALL_TRACE, "--steps", "2")
    assert first[0] == 0 and first[1] == second[1]
    assert len(read_jsonl(first[1])) == 3


def test_omega_table(capsys):
    code, out, _ = run(capsys, "omega-table", "--alphas", "0,1", "--m-max", "4")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 6
    assert float(rows[0]["threshold"]) == pytest.approx(0.25, abs=1e-15)


def test_kernel_json(capsys):
    code, out, _ = run(capsys, "kernel", "--m", "4")
    assert code == 0
    d = json.loads(out)
    assert d["m"] == 4 and d["lambda_minus"] < 1


def test_linearize(capsys):
    code, out, _ = run(capsys, "linearize", "--k-max", "4")
    assert code == 0
    assert json.loads(out)["max_abs_diff"] < 1e-6


def test_curvature_from_file(capsys, tmp_path):
    path = tmp_path / "branch.jsonl"
    assert main(["trace", *SMALL_TRACE, "--steps", "1", "--out", str(path)]) == 0
    code, out, _ = run(capsys, "curvature", "--input", str(path))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 2 and all(r["convex"] == "1" for r in rows)


def test_verify_rotation_ellipse(capsys):
    code, out, _ = run(capsys, "verify-rotation", "--r", "0.5", "--n-nodes", "64", "--t-final", "0.02")
    assert code == 0
    d = json.loads(out)
    assert d["omega_error"] < 1e-8 and d["shape_error"] < 1e-8


@pytest.mark.parametrize(
    "argv",
    [
        ["trace", "--m", "2"],
        ["trace", "--alpha", "0.5"],
        ["omega-table", "--alphas", "0,2"],
        ["bifurcation-points", "--m-max", "two"],
        ["trace", "--n-quad", "100"],
        ["nonsense"],
        ["trace", "--bogus", "1"],
    ],
)
def test_validation_exit_code(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    if err.strip().startswith("{"):
        assert json.loads(err.strip().splitlines()[-1])["error"] == "validation"


def test_numerical_failure_exit_code(capsys):
    # an absurd tolerance cannot be met
    code, _, err = run(capsys, "trace", *SMALL_TRACE, "--steps", "1", "--tol", "1e-30")
    assert code == 3
    assert json.loads(err)["error"] == "numerical"


def test_bad_thread_env(monkeypatch):
    monkeypatch.setenv("VSTATE_THREADS", "zero")
    with pytest.raises(ValidationError):
        RunConfig("trace", {})


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    with pytest.raises(ValidationError):
        read_config_file(str(tmp_path / "missing.cfg"))
    cfg.write_text("# table size\nm-max = 5\n")
    code, out, _ = run(capsys, "bifurcation-points", "--config", str(cfg))
    assert code == 0 and len(out.strip().splitlines()) == 4
    code, out, _ = run(capsys, "bifurcation-points", "--config", str(cfg), "--m-max", "6")
    assert len(out.strip().splitlines()) == 5


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n")
    code, _, err = run(capsys, "bifurcation-points", "--config", str(cfg))
    assert code == 2 and "colour" in err


def test_runconfig_rejects_unknown_keys():
    with pytest.raises(ValidationError):
        RunConfig("trace", {"speed": 3})
    with pytest.raises(ValidationError):
        RunConfig("trace", {"m": 3.5})
    assert RunConfig("trace", {"m": "4"}).params["m"] == 4
