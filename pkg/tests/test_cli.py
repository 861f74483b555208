import pytest

from countpred.cli import main
from countpred.series import load_series


@pytest.fixture()
def data(tmp_path):
    path = tmp_path / "a.csv"
    assert main(["simulate", "--model", "poi-inar", "--alpha", "0.5", "--lambda", "1",
                 "--n", "300", "--seed", "7", "--out", str(path)]) == 0
    return path


def test_simulate_writes_series_and_is_deterministic(tmp_path, data):
    other = tmp_path / "b.csv"
    main(["simulate", "--model", "poi-inar", "--alpha", "0.5", "--lambda", "1",
          "--n", "300", "--seed", "7", "--out", str(other)])
    assert data.read_bytes() == other.read_bytes()
    assert len(load_series(data)) == 300


def test_missing_parameter_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--model", "poi-inar", "--lambda", "1", "--n", "10"])
    assert info.value.code == 2
    assert "--alpha" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


@pytest.mark.parametrize("cmd", ["simulate", "fit", "predict", "ci-asymptotic", "ci-bootstrap",
                                 "mc-experiment", "analyze"])
def test_help_for_every_subcommand(cmd):
    with pytest.raises(SystemExit) as info:
        main([cmd, "--help"])
    assert info.value.code == 0


def test_fit_and_predict(data, tmp_path, capsys):
    assert main(["fit", "--data", str(data), "--model", "inarch",
                 "--out", str(tmp_path / "f.csv")]) == 0
    assert (tmp_path / "f.csv").read_text().startswith("family,beta,alpha")
    assert main(["predict", "--data", str(data), "--model", "npara", "--set-ray", "2"]) == 0
    assert "{x : x ≥ 2}" in capsys.readouterr().out


def test_six_significant_digits(data, capsys):
    main(["predict", "--data", str(data), "--model", "poi-inar", "--set", "1,2"])
    value = capsys.readouterr().out.split("=")[-1].split()[0]
    assert len(value.replace("0.", "", 1).lstrip("0")) <= 6


def test_ci_commands(data, tmp_path):
    assert main(["ci-asymptotic", "--data", str(data), "--model", "npara", "--set", "0",
                 "--out", str(tmp_path / "asy.csv")]) == 0
    assert main(["ci-bootstrap", "--data", str(data), "--model", "poi-inar", "--generator",
                 "npara", "--set", "1,2", "--B", "100", "--out", str(tmp_path / "b.csv"),
                 "--dump-replicates", str(tmp_path / "r.txt")]) == 0
    assert len((tmp_path / "r.txt").read_text().splitlines()) == 100


def test_runtime_error_exit_code(data, capsys):
    assert main(["ci-bootstrap", "--data", str(data), "--model", "npara", "--set", "1",
                 "--x-n", "99", "--B", "100"]) == 1
    assert "never occurs" in capsys.readouterr().err
    assert main(["predict", "--data", "/nonexistent.csv", "--model", "npara", "--set", "1"]) == 1


def test_analyze_ranges_and_roundtrip(data, tmp_path):
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    args = ["--model", "npara", "--set", "0", "--B", "100", "--seed", "3", "--asymptotic"]
    assert main(["analyze", "--data", str(data), *args, "--out", str(out1)]) == 0
    copy = tmp_path / "copy.csv"
    copy.write_text(data.read_text())
    assert main(["analyze", "--data", str(copy), *args, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    rows = [line.split(",") for line in out1.read_text().splitlines()[1:]]
    assert [r[2] for r in rows] == ["asymptotic-nonparametric", "bootstrap-basic",
                                    "bootstrap-percentile"]
    point, lo, hi = (float(v) for v in rows[2][5:8])
    assert 0 <= point <= 1 and 0 <= lo <= hi <= 1


def test_analyze_accepts_both_generators(data):
    for gen in ("poi-inar", "npara"):
        assert main(["analyze", "--data", str(data), "--model", "poi-inar", "--generator", gen,
                     "--set-ray", "2", "--B", "100"]) == 0


def test_mc_experiment_threads_and_config(tmp_path):
    base = ["mc-experiment", "--dgp", "poi-inar", "--alpha", "0.5", "--lambda", "1",
            "--prediction", "npara", "--n", "60", "--K", "10", "--seed", "1"]
    assert main(base + ["--threads", "1", "--out", str(tmp_path / "1.csv")]) == 0
    assert main(base + ["--threads", "2", "--out", str(tmp_path / "2.csv")]) == 0
    assert (tmp_path / "1.csv").read_bytes() == (tmp_path / "2.csv").read_bytes()
    cfg = tmp_path / "e.ini"
    cfg.write_text("[dgp]\nfamily = inarch\nbeta = 1\nalpha = 0.5\n\n"
                   "[experiment]\nprediction = inarch\nn = 60\nK = 10\n")
    assert main(["mc-experiment", "--config", str(cfg), "--out", str(tmp_path / "c.csv")]) == 0
    assert len((tmp_path / "c.csv").read_text().splitlines()) == 2
