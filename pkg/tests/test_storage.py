import numpy as np
import pandas as pd

from app.models import SweepRow
from app.services import storage_service as storage


def test_csv_keeps_every_digit(tmp_path):
    rng = np.random.default_rng(7)
    x = np.linspace(0.0, 1.0, 51)
    values = rng.random(51) * 10.0 ** rng.integers(-12, 12, 51)
    path = storage.write_frame(storage.profile_frame(x, {"U": values}), tmp_path, "profile.csv")
    back = storage.read_frame(path)
    assert list(back.columns) == ["x", "U"]
    assert np.array_equal(back["U"].to_numpy(), values)
    assert np.array_equal(back["x"].to_numpy(), x)


def test_files_are_deterministic(tmp_path):
    frame = storage.profile_frame([0.0, 0.5], {"u": [0.1, 1.0 / 3.0]})
    first = storage.write_frame(frame, tmp_path / "a", "t.csv").read_bytes()
    second = storage.write_frame(frame, tmp_path / "b", "t.csv").read_bytes()
    assert first == second
    assert b"\r" not in first

    report = {"b": 1.0 / 3.0, "a": [1, 2]}
    one = storage.write_json(report, tmp_path / "a", "r.json").read_text()
    two = storage.write_json(dict(reversed(list(report.items()))), tmp_path / "b", "r.json").read_text()
    assert one == two
    assert storage.read_json(tmp_path / "a" / "r.json") == report


def test_filenames_cannot_escape_the_directory(tmp_path):
    path = storage.write_frame(pd.DataFrame({"x": [1.0]}), tmp_path, "../outside.csv")
    assert path.parent == tmp_path


def test_models_are_written_by_alias(tmp_path):
    row = SweepRow(chi=20.0, lambda_=0.5)
    path = storage.write_json(row, tmp_path, "row.json")
    assert storage.read_json(path)["lambda"] == 0.5


def test_sweep_frame_columns():
    rows = [SweepRow(chi=20.0, lambda_=0.5, midpoint=0.75), SweepRow(chi=40.0, error="BracketError: x")]
    frame = storage.sweep_frame(rows)
    assert list(frame.columns) == storage.SWEEP_COLUMNS
    assert frame.loc[0, "lambda"] == 0.5
    assert frame.loc[1, "error"] == "BracketError: x"
    assert pd.isna(frame.loc[1, "lambda"])


def test_snapshot_filename():
    assert storage.snapshot_filename(25.0) == "snapshot_t25.000000.csv"
    assert storage.snapshot_filename(0.0005) == "snapshot_t0.000500.csv"
