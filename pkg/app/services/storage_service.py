"""File storage for run artifacts: CSV tables and JSON reports."""

import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..config import get_settings

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

SWEEP_COLUMNS = ["chi", "lambda", "plateau_v0", "midpoint", "width", "l1_u_vs_limit", "alpha", "error"]


def get_output_directory(out_dir: Optional[Union[str, Path]] = None) -> Path:
    """Resolve the output directory, creating it if needed."""
    directory = Path(out_dir or get_settings().out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def write_frame(frame: pd.DataFrame, directory: Path, filename: str) -> Path:
    """
    Write a table as CSV with 17 significant digits.

    Args:
        frame: The table to write
        directory: Target directory, created if missing
        filename: Bare file name, no path components

    Returns:
        The path of the written file
    """
    path = get_output_directory(directory) / Path(filename).name
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {path}")
    return path


def read_frame(path: Union[str, Path]) -> pd.DataFrame:
    """Read a CSV written by write_frame without losing digits."""
    return pd.read_csv(path, float_precision="round_trip")


def _jsonable(payload: Any) -> Any:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json", by_alias=True)
    if isinstance(payload, (list, tuple)):
        return [_jsonable(item) for item in payload]
    if isinstance(payload, dict):
        return {key: _jsonable(value) for key, value in payload.items()}
    return payload


def write_json(payload: Any, directory: Path, filename: str) -> Path:
    """Write a model, dict or list as JSON with sorted keys."""
    path = get_output_directory(directory) / Path(filename).name
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def read_json(path: Union[str, Path]) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def profile_frame(x: np.ndarray, columns: dict) -> pd.DataFrame:
    """Table with an x column followed by the given named columns."""
    data = {"x": np.asarray(x, dtype=float)}
    data.update({name: np.asarray(values, dtype=float) for name, values in columns.items()})
    return pd.DataFrame(data)


def snapshot_filename(t: float) -> str:
    return f"snapshot_t{t:.6f}.csv"


def sweep_frame(rows: Iterable[BaseModel]) -> pd.DataFrame:
    records = [row.model_dump(by_alias=True) for row in rows]
    return pd.DataFrame(records, columns=SWEEP_COLUMNS)
