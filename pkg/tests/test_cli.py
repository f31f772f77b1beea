import numpy as np
import pytest

from tsizer.cli import main
from tsizer.io import load_csv, read_report


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_command(capsys):
    code, _, err = run([], capsys)
    assert code == 1 and "usage" in err


def test_analyze_without_input(capsys):
    code, _, err = run(["analyze"], capsys)
    assert code == 1 and "usage" in err


def test_unknown_flag(capsys):
    code, _, err = run(["analyze", "x.csv", "--bogus"], capsys)
    assert code == 1 and "usage" in err


def test_runtime_error_exit(tmp_path, capsys):
    code, _, err = run(["analyze", str(tmp_path / "missing.csv")], capsys)
    assert code == 2 and "missing.csv" in err


def test_simulate_length(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(["simulate", "--trend", "eq7", "--noise", "ar2", "--n", "200",
                      "--seed", "7", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "value" and len(lines) == 201


def test_simulate_params_and_csv_trend(tmp_path, capsys):
    trend = tmp_path / "t.csv"
    trend.write_text("\n".join(str(v) for v in np.linspace(0, 1, 30)))
    out = tmp_path / "s.csv"
    code, _, _ = run(["simulate", "--trend", "csv", "--trend-csv", str(trend), "--noise", "ma1",
                      "--params", "theta=0.5", "sigma=0.001", "--seed", "1", "--out", str(out)],
                     capsys)
    assert code == 0
    y = load_csv(out).values
    assert y.size == 30 and np.allclose(y, np.linspace(0, 1, 30), atol=0.01)


@pytest.mark.parametrize("extra", [["--params", "kappa=1"], ["--params", "theta"],
                                   ["--trend", "csv"]])
def test_simulate_bad_params(tmp_path, capsys, extra):
    argv = ["simulate", "--trend", "eq9", "--noise", "ma1", "--out", str(tmp_path / "o.csv")]
    code, _, err = run(argv + extra, capsys)
    assert code == 1 and "usage" in err


def test_evaluate_deterministic(tmp_path, capsys):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        code, stdout, _ = run(["evaluate", "--noise", "white", "--reps", "2", "--n", "120",
                               "--seed", "1", "--out", str(path)], capsys)
        assert code == 0 and "hp1" in stdout
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[0].startswith("noise,rank,type1_mean") and len(lines) == 5


@pytest.fixture
def series_csv(tmp_path):
    rng = np.random.default_rng(2)
    t = np.arange(1, 97)
    y = 10 + 0.2 * t + 3 * np.sin(2 * np.pi * t / 12) + np.sin(2 * np.pi * t / 48) \
        + 0.3 * rng.normal(size=96)
    path = tmp_path / "monthly.csv"
    path.write_text("date,value\n" + "\n".join(f"m{i},{float(v)!r}" for i, v in enumerate(y)) + "\n")
    return path


def test_analyze_outputs(series_csv, tmp_path, capsys):
    js, sv = tmp_path / "r.json", tmp_path / "r.svg"
    argv = ["analyze", str(series_csv), "--column", "value", "--deseasonalize", "12",
            "--detrend", "--ascii", "--json", str(js), "--svg", str(sv)]
    code, stdout, _ = run(argv, capsys)
    assert code == 0
    doc = read_report(js)
    assert doc["meta"]["preprocessing"] == ["deseasonalize(period=12)", "linear_detrend"]
    assert len(doc["selection"]["chosen"]) == 4
    assert stdout.count("hp(") == 4
    first = (js.read_bytes(), sv.read_bytes())
    code, _, _ = run(argv, capsys)
    assert (js.read_bytes(), sv.read_bytes()) == first


def test_config_file_and_override(series_csv, tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# defaults\nalpha = 0.2\nmode = first-plot\ncount = 5\ndetrend = true\n")
    js = tmp_path / "r.json"
    code, _, _ = run(["--config", str(cfg), "analyze", str(series_csv), "--json", str(js)], capsys)
    assert code == 0
    doc = read_report(js)
    assert doc["meta"]["alpha"] == 0.2 and doc["selection"]["mode"] == "first-plot"
    assert len(doc["grid"]) == 5 and doc["meta"]["preprocessing"] == ["linear_detrend"]
    code, _, _ = run(["--config", str(cfg), "analyze", str(series_csv), "--alpha", "0.01",
                      "--count", "7", "--json", str(js)], capsys)
    doc = read_report(js)
    assert doc["meta"]["alpha"] == 0.01 and len(doc["grid"]) == 7


def test_config_unknown_key(series_csv, tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("colour = red\n")
    code, _, err = run(["--config", str(cfg), "analyze", str(series_csv)], capsys)
    assert code == 1 and "colour" in err


def test_even_count_is_usage_error(series_csv, capsys):
    code, _, _ = run(["analyze", str(series_csv), "--count", "4"], capsys)
    assert code == 1


def test_help_lists_defaults(capsys):
    assert main(["analyze", "--help"]) == 0
    assert "default 0.05" in capsys.readouterr().out
