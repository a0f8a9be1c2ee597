import json
import subprocess
import sys

import pytest

from robustgen import cli


def run_cli(*args, cwd=None):
    proc = subprocess.run([sys.executable, "-m", "robustgen", *args], capture_output=True, text=True, cwd=cwd)
    return proc.returncode, proc.stdout, proc.stderr


def test_parse_overrides():
    inv = cli.parse_invocation(["regimes", "--set", "mu=1", "--set", "sigma=2", "--set", "epsilon=0.95"])
    assert inv.subcommand == "regimes"
    assert inv.overrides == ["mu=1", "sigma=2", "epsilon=0.95"]
    assert inv.output_path == cli.STDOUT and inv.format == "csv"


def test_parse_config_and_out():
    inv = cli.parse_invocation(["curve", "--config", "sweep.cfg", "--out", "curves.csv"])
    assert (inv.subcommand, inv.config_path, inv.output_path) == ("curve", "sweep.cfg", "curves.csv")


@pytest.mark.parametrize("argv", [["bogus"], ["curve", "--frobnicate"], ["curve", "--seed", "-3"],
                                  ["curve", "--format", "xml"], []])
def test_parse_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.parse_invocation(argv)
    assert exc.value.code == 2
    err = capsys.readouterr().err
    if argv:
        assert argv[-1].lstrip("-") in err or "bogus" in err


@pytest.mark.parametrize("sub", cli.SUBCOMMANDS)
def test_help_exits_zero(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.parse_invocation([sub, "--help"])
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out


def test_ranges():
    assert cli.parse_int_list("1:10:3") == [1, 4, 7, 10]
    assert cli.parse_float_list("0.1:0.5:0.2") == [0.1, 0.3, 0.5]
    assert cli.parse_float_list("0.1, 0.5") == [0.1, 0.5]
    with pytest.raises(ValueError):
        cli.parse_int_list("1:5")


def test_regimes_strong(capsys):
    code = cli.main(["regimes", "--set", "mu=1", "--set", "sigma=2", "--set", "epsilon=1.5"])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["label"] == "Strong"
    n5 = [t["n_value"] for t in out["thresholds"] if t["name"] == "N5"][0]
    assert 0 < n5 < 5
    lo, hi = out["critical_eps_prime"]
    assert 0 < hi - lo <= 1e-6


def test_config_file_then_overrides_in_order(tmp_path, capsys):
    cfg = tmp_path / "r.cfg"
    cfg.write_text("# regime probe\nmu = 1\nsigma=2  # inline comment\nepsilon=0.5\n")
    code = cli.main(["regimes", "--config", str(cfg), "--set", "epsilon=0.9", "--set", "epsilon=0.95"])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["config"]["epsilon"] == 0.95 and out["config"]["sigma"] == [2.0]
    assert out["label"] == "Medium"


def test_curve_trends(capsys):
    code = cli.main(["curve", "--format", "json"])
    assert code == 0
    captured = capsys.readouterr()
    out = json.loads(captured.out)
    labels = [t["label"] for t in out["trends"]]
    assert labels == ["Decreasing", "Decreasing", "DoubleDescentLike", "Increasing"]
    assert "DoubleDescentLike" in captured.err


def test_csv_to_file_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["manhattan", "--set", "sweep.replications=200", "--seed", "11"]
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "family,epsilon,n,mean_loss,stderr,replications,seed"


def test_unknown_key_exit_2(capsys):
    assert cli.main(["curve", "--set", "sweep.bogus=1"]) == 2
    assert "sweep.bogus" in capsys.readouterr().err


def test_bad_value_exit_2(capsys):
    assert cli.main(["zeroone", "--set", "policy=psychic"]) == 2
    assert cli.main(["curve", "--set", "sweep.n_values=3,2"]) == 2
    assert cli.main(["curve", "--set", "mu"]) == 2


def test_missing_config_exit_4(tmp_path):
    assert cli.main(["curve", "--config", str(tmp_path / "nope.cfg")]) == 4


def test_unwritable_output_exit_4(tmp_path):
    assert cli.main(["curve", "--set", "sweep.n_values=1:4:1", "--out", str(tmp_path / "no" / "x.csv")]) == 4


def test_divergence_exit_3(capsys):
    code = cli.main(["svm", "--set", "step_size=1e300", "--set", "iterations=3", "--set", "sweep.replications=2",
                     "--set", "sweep.epsilons=0.2", "--set", "sweep.n_values=5"])
    assert code == 3
    assert "n=5" in capsys.readouterr().err


def test_verify_quick(capsys):
    assert cli.main(["verify", "--set", "verify.quick=true"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert all(line.startswith("PASS") for line in lines[:-1])


def test_black_box_exit_codes(tmp_path):
    assert run_cli("bogus")[0] == 2
    code, out, _ = run_cli("regimes", "--set", "epsilon=0.1")
    assert code == 0 and json.loads(out)["label"] == "Weak"
    assert run_cli("curve", "--set", "nope=1")[0] == 2
    assert run_cli("curve", "--config", str(tmp_path / "missing"))[0] == 4
    code, out, err = run_cli("linreg", "--set", "sweep.replications=20", "--set", "sweep.epsilons=0.4")
    assert code == 0 and out.count("\n") == 5 and "trend=" in err


def test_black_box_identical_outputs():
    args = ("zeroone", "--set", "sweep.replications=100", "--seed", "5")
    assert run_cli(*args)[1] == run_cli(*args)[1]
