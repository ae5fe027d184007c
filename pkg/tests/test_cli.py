import json

import numpy as np
import pytest

from csk.cli import main
from csk.projectors import MatrixConstraintSet, spin_matrices


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


def test_kernel_origin(capsys):
    code, out, _ = run(capsys, "kernel", "--delta", "1", "--points", "origin")
    assert code == 0
    assert out.startswith("# csk kernel\n# config: ")
    head, rows = _rows(out)
    assert head == ["p", "q", "K_diag"]
    assert abs(float(rows[0][2]) - 0.8427007929497149) < 1e-15


def test_kernel_pair_and_gram(capsys):
    code, out, _ = run(capsys, "kernel", "--delta", "inf", "--pair", "0,0,1,0")
    assert code == 0
    head, rows = _rows(out)
    assert abs(float(rows[0][head.index("re")]) - np.exp(-0.25)) < 1e-15
    code, out, _ = run(capsys, "kernel", "--delta", "1", "--gram", "random8", "--seed", "3")
    assert code == 0 and "min_eigenvalue" in out
    head, rows = _rows(out)
    assert min(float(r[head.index("eigenvalue")]) for r in rows) > -1e-10


def test_json_output(capsys):
    code, out, _ = run(capsys, "symbol", "--gamma", "0.5", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["command"] == "symbol" and data["config"]["gamma"] == 0.5
    assert "phi_exact" in data["tables"][0]["columns"]


def test_deterministic_and_thread_independent(capsys, monkeypatch):
    _, a, _ = run(capsys, "reduce", "--delta", "0.01")
    monkeypatch.setenv("CSK_THREADS", "4")
    _, b, _ = run(capsys, "reduce", "--delta", "0.01")
    assert a == b


def test_bad_threads(capsys, monkeypatch):
    monkeypatch.setenv("CSK_THREADS", "zero")
    assert run(capsys, "kernel", "--delta", "1")[0] == 2


def test_usage_errors(capsys):
    assert run(capsys, "kernel")[0] == 2
    assert run(capsys, "kernel", "--delta", "1", "--gram", "random4")[0] == 2
    assert run(capsys, "penalty", "--kind", "cubic")[0] == 2
    assert run(capsys, "symbol", "--gamma", "-1")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["kernel", "--delta", "-1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["nonsense"])


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"delta": 1.0, "points": "origin"}))
    code, out, _ = run(capsys, "kernel", "--config", str(cfg))
    assert code == 0 and '"delta": 1.0' in out
    # explicit flags win over the file
    code, out, _ = run(capsys, "kernel", "--config", str(cfg), "--delta", "2")
    assert '"delta": 2.0' in out
    cfg.write_text(json.dumps({"delta": 1.0, "bogus": 3}))
    assert run(capsys, "kernel", "--config", str(cfg))[0] == 2
    cfg.write_text("[1, 2]")
    assert run(capsys, "kernel", "--config", str(cfg))[0] == 2
    assert run(capsys, "kernel", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_out_file(capsys, tmp_path):
    path = tmp_path / "k.csv"
    code, out, _ = run(capsys, "kernel", "--delta", "1", "--out", str(path))
    assert code == 0 and out == ""
    assert path.read_text().startswith("# csk kernel")


def test_penalty_commands(capsys):
    code, out, _ = run(capsys, "penalty", "--kind", "quadratic", "--A", "1e4")
    head, rows = _rows(out)
    assert code == 0 and max(float(r[-1]) for r in rows) < 1e-3
    code, out, _ = run(capsys, "penalty", "--kind", "quartic", "--A", "1e6")
    head, rows = _rows(out)
    assert code == 0 and "measured k" in out and max(float(r[-1]) for r in rows) < 1e-2


def test_dynamics_commands(capsys):
    code, out, _ = run(capsys, "dynamics", "--kind", "example1", "--c", "3")
    assert code == 0 and "equivalent: true" in out
    code, out, _ = run(capsys, "dynamics", "--kind", "circle", "--t-final", "1")
    assert code == 0 and "rotation_rate" in out
    code, out, _ = run(capsys, "dynamics", "--kind", "quadratic")
    assert code == 0 and "augmented_energy" in out
    code, out, _ = run(capsys, "dynamics", "--kind", "drift")
    head, rows = _rows(out)
    assert abs(float(rows[0][head.index("ratio")]) - 16) < 3
    assert run(capsys, "dynamics", "--kind", "bogus")[0] == 2


def test_project_command(capsys, tmp_path):
    code, out, _ = run(capsys, "project")
    assert code == 0 and "rank: 1" in out
    path = tmp_path / "g.json"
    path.write_text(json.dumps(MatrixConstraintSet(spin_matrices(1.0)).to_json()))
    code, out, _ = run(capsys, "project", "--generators", str(path))
    assert code == 0 and "rank: 0" in out
    path.write_text(json.dumps({"dimension": 1, "generators": [[[[0.0, 0.0]]], [[[1.0, 0.0]]]]}))
    assert run(capsys, "project", "--generators", str(path))[0] == 0
    path.write_text(json.dumps({"dimension": 2, "generators": [[[[0, 0], [1, 0]], [[1, 0], [0, 0]]],
                                                              [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]]}))
    assert run(capsys, "project", "--generators", str(path))[0] == 2


def test_incommensurate_generator_is_input_error(capsys, tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"dimension": 3, "generators": [
        [[[0, 0], [0, 0], [0, 0]], [[0, 0], [1, 0], [0, 0]], [[0, 0], [0, 0], [2 ** 0.5, 0]]]]}))
    code, _, err = run(capsys, "project", "--generators", str(path))
    assert code == 2 and "NotCompact" in err


def test_numerical_failure_exit_code(capsys):
    # a stiff circle penalty with a huge step overflows
    code, _, err = run(capsys, "dynamics", "--kind", "circle", "--A", "1e6", "--dt", "1", "--t-final", "50")
    assert code == 3 and "StepRejected" in err


def test_verify_all_filter_and_injection(capsys):
    code, out, err = run(capsys, "verify-all", "--filter", "symbol")
    assert code == 0 and out.count("PASS") == 2 and "finished" in err
    code, out, _ = run(capsys, "verify-all", "--filter", "kernel", "--inject-kernel-scale", "1.01")
    assert code == 1 and "FAIL [ 5]" in out
    assert run(capsys, "verify-all", "--filter", "nope")[0] == 2


def test_verify_all_json_is_reproducible(capsys):
    _, a, _ = run(capsys, "verify-all", "--filter", "project", "--format", "json")
    _, b, _ = run(capsys, "verify-all", "--filter", "project", "--format", "json")
    assert a == b
    data = json.loads(a)
    assert [c["number"] for c in data["criteria"]] == [4, 9]
    assert all(c["passed"] for c in data["criteria"])
