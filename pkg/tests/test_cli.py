import json

import pandas as pd
import pytest
from click.testing import CliRunner

from src.cli import heatflow

QUBIT_RUN = {
    "kind": "custom_lindblad",
    "hamiltonian": [[0.5, 0], [0, -0.5]],
    "channels": [
        {"operator": [[0, 1], [0, 0]], "rate": 0.0025},
        {"operator": [[0, 0], [1, 0]], "rate": 0.0075},
    ],
    "measurement": {"gamma": 0.01, "state": [0.7071067811865476, 0.7071067811865476]},
}


@pytest.fixture
def runner():
    return CliRunner()


def _read_csv(path):
    return pd.read_csv(path, comment="#")


def test_fig2b_csv_layout(runner, tmp_path):
    out = tmp_path / "fig2b.csv"
    result = runner.invoke(heatflow, ["fig2b", "--theta-points", "7", "--out", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text(encoding="utf-8").split("\n")
    assert lines[0] == "# units: hbar=kB=Delta=1"
    assert lines[1].startswith("# params: {")
    assert json.loads(lines[1][len("# params: "):])["theta_points"] == 7
    assert lines[2] == "theta,J_M_gamma1,J_M_gamma2,J_M_gamma3"
    frame = _read_csv(out)
    assert len(frame) == 7
    assert (frame.iloc[:, 1:] >= 0).all().all()
    for column in frame.columns[1:]:
        values = frame[column].to_numpy()
        assert values == pytest.approx(values[::-1], rel=1e-12, abs=1e-20)


@pytest.mark.parametrize("args", [
    ["fig2b", "--theta-points", "11", "--gamma", "0.01"],
    ["fig4a", "--t-end", "50"],
    ["fig4b", "--t-end", "50"],
    ["qex", "--theta-points", "5"],
    ["lambda", "--gamma", "0.001", "--gamma", "0.01"],
])
def test_identical_runs_give_identical_files(runner, tmp_path, args):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (first, second):
        result = runner.invoke(heatflow, args + ["--out", str(path)])
        assert result.exit_code == 0, result.output
    assert first.read_bytes() == second.read_bytes()


def test_gnuplot_script_next_to_csv(runner, tmp_path):
    out = tmp_path / "lambda.csv"
    result = runner.invoke(heatflow, ["lambda", "--gamma", "0.001", "--gamma", "0.01", "--out", str(out), "--gnuplot-script"])
    assert result.exit_code == 0, result.output
    script = (tmp_path / "lambda.gp").read_text(encoding="utf-8")
    assert "'lambda.csv'" in script
    frame = _read_csv(out)
    assert list(frame.columns) == ["gamma", "J_M", "rho00", "rho11", "rho22", "inversion_flag"]
    assert (frame["J_M"] < 0).all()


def test_json_summary_on_stdout(runner):
    result = runner.invoke(heatflow, ["fig2b", "--theta-points", "3", "--gamma", "0.01", "--format", "json"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["name"] == "fig2b"
    assert payload["summary"]["J_M_max"][0] == pytest.approx(0.01 * 0.005 / (4 * 0.01 + 2 * 0.01))


def test_custom_qubit_matches_steady_sweep(runner, tmp_path):
    config = tmp_path / "qubit.json"
    config.write_text(json.dumps(QUBIT_RUN), encoding="utf-8")
    result = runner.invoke(heatflow, ["run", "--config", str(config), "--out", str(tmp_path / "run.csv")])
    assert result.exit_code == 0, result.output
    result = runner.invoke(heatflow, ["fig2b", "--theta-points", "3", "--gamma", "0.01", "--out", str(tmp_path / "f.csv")])
    assert result.exit_code == 0, result.output
    custom = _read_csv(tmp_path / "run.csv")["J_M"].iloc[0]
    sweep = _read_csv(tmp_path / "f.csv")["J_M_gamma1"].iloc[1]
    assert custom == pytest.approx(sweep, rel=1e-9)


def test_config_errors_exit_2(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"theta_points": 1}', encoding="utf-8")
    result = runner.invoke(heatflow, ["fig2b", "--config", str(bad)])
    assert result.exit_code == 2
    assert "theta_points" in result.output

    result = runner.invoke(heatflow, ["run"])
    assert result.exit_code == 2

    result = runner.invoke(heatflow, ["fig4a", "--gamma", "0.01", "--gamma", "0.02"])
    assert result.exit_code == 2


def test_unconverged_points_exit_3(runner, tmp_path):
    out = tmp_path / "qex.csv"
    result = runner.invoke(heatflow, ["qex", "--theta-points", "3", "--t-end", "20", "--dt", "0.05", "--out", str(out)])
    assert result.exit_code == 3
    assert "error" in _read_csv(out).columns


def test_archive_and_history(runner, tmp_path):
    archive = tmp_path / "runs.duckdb"
    result = runner.invoke(heatflow, ["fig2b", "--theta-points", "3", "--archive", str(archive)])
    assert result.exit_code == 0, result.output
    result = runner.invoke(heatflow, ["history", "--archive", str(archive)])
    assert result.exit_code == 0, result.output
    assert "fig2b-" in result.output


@pytest.mark.slow
def test_selftest_passes(runner):
    result = runner.invoke(heatflow, ["selftest"])
    assert result.exit_code == 0, result.output
    assert "all checks passed" in result.output


@pytest.mark.slow
def test_selftest_report_is_reproducible(runner):
    first = runner.invoke(heatflow, ["selftest"])
    second = runner.invoke(heatflow, ["selftest"])
    assert first.exit_code == second.exit_code == 0
    assert first.output == second.output
