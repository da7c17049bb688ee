"""
CSV / JSON artifact emission.

CSV files start with two comment lines (units, parameter echo), then a header row.
Floats are written with 17 significant digits and LF line endings so identical
runs give byte-identical files.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.figure_runner import RunResult

logger = logging.getLogger(__name__)

UNITS_LINE = "# units: hbar=kB=Delta=1"
FLOAT_FORMAT = "%.17g"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    return value


def params_line(result: RunResult) -> str:
    return "# params: " + json.dumps(_jsonable(result.params), sort_keys=True, separators=(",", ":"))


def render_csv(result: RunResult) -> str:
    body = result.frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return "\n".join([UNITS_LINE, params_line(result), body])


def render_json(result: RunResult) -> str:
    payload = {
        "name": result.name,
        "params": result.params,
        "summary": result.summary,
        "units": "hbar=kB=Delta=1",
    }
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


def render(result: RunResult, fmt: str = "csv") -> str:
    if fmt == "csv":
        return render_csv(result)
    if fmt == "json":
        return render_json(result)
    raise ValueError(f"unknown output format '{fmt}'")


def gnuplot_script(csv_path: Union[str, Path], result: RunResult) -> str:
    """Plot every column against the first one."""
    csv_name = Path(csv_path).name
    columns = list(result.frame.select_dtypes(include="number").columns)
    x_label = columns[0]
    lines = [
        f"# plots {csv_name}",
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{x_label}'",
        f"plot for [i=2:{len(columns)}] '{csv_name}' using 1:i with lines",
        "",
    ]
    return "\n".join(lines)


def write_artifact(
    result: RunResult,
    path: Optional[Union[str, Path]],
    fmt: str = "csv",
    with_gnuplot: bool = False,
) -> str:
    """
    Write the rendered artifact (and optionally a gnuplot script next to it).

    Args:
        result: Runner output
        path: Output file; None returns the text without writing
        fmt: "csv" or "json"
        with_gnuplot: Also write <path>.gp (csv only)

    Returns:
        The rendered text
    """
    text = render(result, fmt)
    if path is None:
        return text
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    logger.info("wrote %s (%d rows)", path, len(result.frame))
    if with_gnuplot and fmt == "csv":
        script_path = path.with_suffix(".gp")
        with open(script_path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(gnuplot_script(path, result))
        logger.info("wrote %s", script_path)
    return text
