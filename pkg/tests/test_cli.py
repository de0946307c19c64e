import json

import pytest

from wmsr_lab import cli
from wmsr_lab.adversary import Constant
from wmsr_lab.graph import Digraph
from wmsr_lab.sim import Scenario, run


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return str(path)

    return write


def _out(capsys):
    return json.loads(capsys.readouterr().out)


def test_check_robust(files, capsys):
    k2 = files("k2.json", {"n": 2, "edges": [[0, 1], [1, 0]]})
    assert cli.main(["check-robust", "--graph", k2, "--r", "1", "--s", "1"]) == 0
    assert _out(capsys)["robust"] is True
    empty = files("e3.json", {"n": 3, "edges": []})
    assert cli.main(["check-robust", "--graph", empty, "--r", "1", "--s", "1"]) == 1
    w = _out(capsys)["witness"]
    assert (w["s1"], w["s2"]) == ([0], [1])


def test_check_robust_input_errors(files, tmp_path, monkeypatch):
    assert cli.main(["check-robust", "--graph", str(tmp_path / "missing.json"), "--r", "1", "--s", "1"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["check-robust", "--graph", str(bad), "--r", "1", "--s", "1"]) == 2
    dup = files("dup.json", {"n": 2, "edges": [[0, 1], [0, 1]]})
    assert cli.main(["check-robust", "--graph", dup, "--r", "1", "--s", "1"]) == 2
    big = files("big.json", Digraph.complete(6).to_dict())
    assert cli.main(["check-robust", "--graph", big, "--r", "1", "--s", "1", "--cap", "5"]) == 2
    monkeypatch.setenv("WMSR_CAP", "5")
    assert cli.main(["check-robust", "--graph", big, "--r", "1", "--s", "1"]) == 2
    assert cli.main(["check-robust", "--graph", big]) == 2


def test_simulate_fixed_point(files, tmp_path, capsys):
    sc = files("fp.json", Scenario(Digraph.complete(3), 0, (), {}, (0.4,) * 3, horizon=5).to_dict())
    trace_path = tmp_path / "trace.jsonl"
    assert cli.main(["simulate", "--scenario", sc, "--out", str(trace_path)]) == 0
    summary = _out(capsys)
    assert summary["converged"] and summary["t_converged"] == 0
    rows = [json.loads(line) for line in trace_path.read_text().splitlines()]
    assert len(rows) == 6 and all(r["x"] == {"0": 0.4, "1": 0.4, "2": 0.4} for r in rows)


def test_simulate_rejects_too_many_adversaries(files, capsys):
    data = Scenario(Digraph.complete(3), 1, (), {}, (0.0, 0.0, 0.0)).to_dict()
    data["adversaries"] = [0, 1]
    data["programs"] = {"0": {"kind": "constant", "value": 1}, "1": {"kind": "constant", "value": 1}}
    assert cli.main(["simulate", "--scenario", files("bad.json", data)]) == 2
    assert "F-total" in capsys.readouterr().err


def test_counterexample_roundtrip(files, tmp_path, capsys):
    g = files("e3.json", {"n": 3, "edges": []})
    out = tmp_path / "cx.json"
    assert cli.main(["counterexample", "--graph", g, "--F", "0", "--horizon", "20", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["init"] == {"0": 0.0, "1": 1.0, "2": 0.5}
    assert cli.main(["simulate", "--scenario", str(out)]) == 0
    summary = _out(capsys)
    assert summary["final_gap"] == 1.0 and not summary["converged"]
    # the written scenario reproduces the in-memory one exactly
    parsed = Scenario.load(out)
    assert run(parsed)[0].steps[-1] == (0.0, 1.0, 0.5)


def test_counterexample_exit_codes(files, capsys):
    k4 = files("k4.json", Digraph.complete(4).to_dict())
    assert cli.main(["counterexample", "--graph", k4, "--F", "1"]) == 3
    cyc = files("c3.json", Digraph.cycle(3).to_dict())
    assert cli.main(["counterexample", "--graph", cyc, "--F", "1"]) == 0
    assert len(_out(capsys)["adversaries"]) <= 1
    assert cli.main(["counterexample", "--graph", "/nonexistent", "--F", "1"]) == 2


def test_verify(files, capsys):
    k4 = files("k4.json", Digraph.complete(4).to_dict())
    assert cli.main(["verify", "--graph", k4, "--F", "1", "--trials", "3", "--horizon", "100"]) == 0
    report = _out(capsys)
    assert report["robust"] and report["consistent"] and report["seed"] == 0
    e3 = files("e3.json", {"n": 3, "edges": []})
    assert cli.main(["verify", "--graph", e3, "--F", "0", "--horizon", "20"]) == 0
    assert _out(capsys)["necessity"]["diverged"]
    assert cli.main(["verify", "--graph", e3, "--F", "3"]) == 2


def test_verify_forged_mismatch(files, monkeypatch, capsys):
    from wmsr_lab import verify

    real = verify.theorem_report

    def forged(*args, **kwargs):
        rep = real(*args, **kwargs)
        rep.necessity.diverged = False
        return rep

    monkeypatch.setattr(cli, "theorem_report", forged)
    e3 = files("e3.json", {"n": 3, "edges": []})
    assert cli.main(["verify", "--graph", e3, "--F", "0", "--horizon", "10"]) == 1
    assert _out(capsys)["consistent"] is False


def test_analyze(files, capsys):
    sc = Scenario(
        Digraph.complete(5), 1, {4}, {4: Constant(3.0)}, (0.0, 0.3, 0.6, 0.9, 0.5), horizon=60
    )
    code = cli.main(["analyze", "--scenario", files("sc.json", sc.to_dict())])
    out = _out(capsys)
    assert out["applicable"] and out["ok"] and code == 0
    # two isolated nodes never approach each other, so no count can shrink
    cx = files("cxa.json", Scenario(Digraph.empty(2), 0, (), {}, (0.0, 1.0), horizon=5).to_dict())
    assert cli.main(["analyze", "--scenario", cx]) == 1
    assert _out(capsys)["ok"] is False
