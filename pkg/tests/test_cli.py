import json

import pytest

from genunif import cli, harness


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_test_command(capsys):
    code, out, _ = run(["test", "uniform:500", "--epsilon", "0.3", "--seed", "4"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["decision"] == "YES" and rep["seed"] == 4
    assert list(rep)[:4] == ["instance", "epsilon", "seed", "decision"]


def test_global_flags_before_command(capsys):
    code, out, _ = run(["--seed", "4", "test", "uniform:500", "--epsilon", "0.3"], capsys)
    assert code == 0 and json.loads(out)["seed"] == 4


def test_seed_env_fallback(capsys, monkeypatch):
    monkeypatch.setenv("GUT_SEED", "17")
    _, out, _ = run(["test", "uniform:50", "--epsilon", "0.3"], capsys)
    assert json.loads(out)["seed"] == 17
    _, out, _ = run(["test", "uniform:50", "--epsilon", "0.3", "--seed", "3"], capsys)
    assert json.loads(out)["seed"] == 3
    monkeypatch.setenv("GUT_SEED", "x")
    assert run(["test", "uniform:50", "--epsilon", "0.3"], capsys)[0] == 2


def test_experiment_to_file_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, _, _ = run(["experiment", "paired_bias:200,0.4", "--epsilon", "0.15", "--trials", "5",
                          "--jobs", "1", "--out", str(path)], capsys)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["trials"] == 5


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("amplification_rounds = 3\n")
    code, out, _ = run(["test", "uniform:300", "--epsilon", "0.3", "--amplified", "--config", str(cfg)], capsys)
    assert code == 0 and len(json.loads(out)["rounds"]) == 3
    cfg.write_text("bogus = 1\n")
    assert run(["test", "uniform:300", "--epsilon", "0.3", "--config", str(cfg)], capsys)[0] == 2


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["test", "uniform:5"])  # --epsilon missing
    assert exc.value.code == 2
    assert run(["test", "uniform:5", "--epsilon", "1.5"], capsys)[0] == 2
    assert run(["experiment", "uniform:5", "--epsilon", "0.2", "--trials", "0"], capsys)[0] == 2
    assert run(["scaling", "--grid", "100", "--epsilon", "0.3"], capsys)[0] == 2
    assert run(["oracle-check", "/nonexistent/path"], capsys)[0] == 2


def test_scaling_csv(capsys):
    code, out, err = run(["scaling", "--grid", "1000,2000,4000", "--epsilon", "0.3", "--trials", "3",
                          "--jobs", "1", "--expect-slope", "0.6667"], capsys)
    assert code == 0 and "slope" in err
    lines = out.splitlines()
    assert lines[0] == "n,epsilon,mean_samples,accept_rate,lo,hi" and len(lines) == 4
    code, _, _ = run(["scaling", "--grid", "1000,2000,4000", "--epsilon", "0.3", "--trials", "3",
                      "--jobs", "1", "--expect-slope", "2.0"], capsys)
    assert code == 1


def test_calibrate_exit_codes(capsys):
    code, out, _ = run(["calibrate", "--axis", "c_m=0.01", "--trials", "5", "--jobs", "1"], capsys)
    assert code == 1 and json.loads(out)["status"] == "no config passes"
    assert run(["calibrate", "--axis", "c_m"], capsys)[0] == 2


def test_gen_and_oracle_check(tmp_path, capsys, monkeypatch):
    corpus = tmp_path / "c.tsv"
    assert run(["gen", "--out", str(corpus)], capsys)[0] == 0
    code, out, _ = run(["oracle-check", str(corpus)], capsys)
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(["gen", "uniform:4", "paired_bias:4,0.5"], capsys)
    assert out.splitlines()[0] == "# uniform:4" and len(out.splitlines()) == 10
    (tmp_path / "e.tsv").write_text("")
    code, _, err = run(["oracle-check", str(tmp_path / "e.tsv")], capsys)
    assert code == 0 and "warning" in err
    (tmp_path / "bad.tsv").write_text("1\t0.5\n2\n")
    code, _, err = run(["oracle-check", str(tmp_path / "bad.tsv")], capsys)
    assert code == 2 and "bad.tsv:2:" in err
    # an invariant failure maps to exit code 1
    real = harness.check_distribution
    monkeypatch.setattr(harness, "check_distribution", lambda *a: {**real(*a), "passed": False})
    assert run(["oracle-check", str(corpus)], capsys)[0] == 1
