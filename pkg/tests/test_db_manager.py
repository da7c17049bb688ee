import pandas as pd
import pytest

from src.db_manager import RunArchive


@pytest.fixture
def archive(tmp_path):
    archive = RunArchive(str(tmp_path / "runs" / "archive.duckdb"))
    archive.initialize_schema()
    yield archive
    archive.close()


def test_round_trip_keeps_values_and_column_order(archive):
    frame = pd.DataFrame({"theta": [0.0, 0.5, 1.0], "J_M": [0.0, 1.25e-3, -2.5e-17]})
    archive.save_run("fig2b-1", "fig2b", {"gammas": [0.01]}, frame)
    restored = archive.query_run("fig2b-1")
    assert list(restored.columns) == ["theta", "J_M"]
    pd.testing.assert_frame_equal(restored, frame, check_dtype=False)


def test_non_numeric_columns_are_skipped(archive):
    frame = pd.DataFrame({"gamma": [0.01, 0.02], "inversion_flag": [True, False], "error": ["", "boom"]})
    archive.save_run("lambda-1", "lambda", {}, frame)
    restored = archive.query_run("lambda-1")
    assert list(restored.columns) == ["gamma", "inversion_flag"]
    assert restored["inversion_flag"].tolist() == [1.0, 0.0]


def test_history_lists_runs(archive):
    frame = pd.DataFrame({"t": [0.0, 1.0]})
    archive.save_run("a", "fig4a", {}, frame)
    archive.save_run("b", "fig4b", {}, frame)
    history = archive.query_run_history(limit=10)
    assert sorted(history["run_id"]) == ["a", "b"]
    assert set(history.columns) >= {"run_id", "kind", "n_rows", "created_at"}
    assert len(archive.query_run_history(limit=1)) == 1


def test_unknown_run(archive):
    with pytest.raises(KeyError):
        archive.query_run("missing")
