import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from loewner_lab import acceptance, io
from loewner_lab.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _json(result):
    assert result.exit_code == 0, result.output
    return json.loads(result.stdout)


def test_trace_is_byte_identical(runner, tmp_path):
    args = ["trace", "--kappa", "4", "--steps", "64", "--seed", "9"]
    a = runner.invoke(main, args + ["--out", str(tmp_path / "a.json")])
    b = runner.invoke(main, args + ["--out", str(tmp_path / "b.json")])
    assert a.exit_code == b.exit_code == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    c = runner.invoke(main, ["trace", "--kappa", "4", "--steps", "64", "--seed", "10"])
    assert c.stdout != (tmp_path / "a.json").read_text()


def test_json_envelope_shape(runner):
    doc = _json(runner.invoke(main, ["spectrum", "--kappa", "2", "--beta", "0", "--format", "json"]))
    assert set(doc) == {"meta", "data"}
    assert {"params", "seed", "git_describe"} <= set(doc["meta"])
    assert doc["meta"]["params"]["kappa"] == 2.0


def test_f_bulk_marked_conjectural(runner):
    doc = _json(runner.invoke(main, ["spectrum", "--kappa", "2", "--points", "5", "--format", "json"]))
    assert doc["data"]["F_bulk_status"] == "conjectural"
    table = runner.invoke(main, ["spectrum", "--kappa", "2", "--points", "5"])
    assert '"F_bulk_status": "conjectural"' in table.stdout.splitlines()[0]


@pytest.mark.parametrize("kappa, peak", [(2, 1.25), (4, 1.5), (6, 1.75)])
def test_figure1_maxima(runner, kappa, peak):
    doc = _json(runner.invoke(main, ["spectrum", "--figure1", "--format", "json"]))
    cols = doc["data"]
    f = [v for k, v in zip(cols["kappa"], cols["F_tip"]) if k == kappa]
    assert max(f) == pytest.approx(peak, abs=1e-10)


def test_config_and_env_precedence(runner, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kappa": 6.0, "steps": 32, "seed": 4}))
    base = ["trace", "--config", str(cfg), "--format", "json"]
    doc = _json(runner.invoke(main, base))
    assert doc["meta"]["params"]["kappa"] == 6.0 and doc["meta"]["seed"] == 4
    doc = _json(runner.invoke(main, base + ["--kappa", "3"]))
    assert doc["meta"]["params"]["kappa"] == 3.0
    monkeypatch.setenv("LOEWNER_LAB_SEED", "17")
    doc = _json(runner.invoke(main, ["trace", "--steps", "8", "--format", "json"]))
    assert doc["meta"]["seed"] == 17


@pytest.mark.parametrize("args, field", [
    (["trace", "--kappa", "-1"], "kappa"),
    (["moments", "--samples", "10"], "samples"),
    (["counts", "--n-max", "9"], "n-max"),
    (["spectrum", "--kappa", "2", "--beta", "5"], "beta"),
])
def test_bad_parameters_exit_2(runner, args, field):
    res = runner.invoke(main, args)
    assert res.exit_code == 2
    assert field in res.output.lower()


def test_check_exit_code(runner, monkeypatch, tmp_path):
    def fake(numbers, seed, workers, echo=None):
        out = [acceptance.CriterionResult(n, "stub", n != 2, 0.0, 1.0, {}) for n in numbers]
        for r in out:
            echo(r.line())
        return out

    monkeypatch.setattr(acceptance, "run_criteria", fake)
    monkeypatch.setattr(acceptance, "warm_up", lambda: None)
    res = runner.invoke(main, ["check", "--out", str(tmp_path / "r.json")])
    assert res.exit_code == 3
    assert "[FAIL]" in res.output
    report = json.loads((tmp_path / "r.json").read_text())
    assert [r["number"] for r in report["data"] if not r["passed"]] == [2]


def test_clean_and_csv():
    assert io.clean({"x": np.float64(math.nan), "y": np.int64(3), "z": 1 + 2j,
                     "w": np.array([math.inf])}) == {"x": None, "y": 3, "z": [1.0, 2.0], "w": ["inf"]}
    text = io.dumps_csv({"a": [1.0, 0.1], "b": [1, 2]}, {"k": 1})
    lines = text.splitlines()
    assert lines[0] == '# {"k": 1}' and lines[1] == "a,b" and lines[3] == "0.1,2"
    with pytest.raises(ValueError):
        io.dumps_csv({"a": [1], "b": [1, 2]})


def test_atomic_write(tmp_path):
    p = io.atomic_write(tmp_path / "sub" / "f.txt", "hello\n")
    assert p.read_text() == "hello\n"
    io.atomic_write(p, "bye\n")
    assert p.read_text() == "bye\n"
    assert [q.name for q in p.parent.iterdir()] == ["f.txt"]
