"""Output path management and deterministic table writers."""

import json
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from . import __version__


def header_line(config_sha256: str) -> str:
    """First line of every output file."""
    return f"# soft2hard {__version__} config_sha256={config_sha256}"


def resolve_output_path(output_dir: Path, name: str) -> Path:
    """
    Resolve an output file path and create its directory.

    Existing files are overwritten so that reruns of the same config
    reproduce the same tree.

    Args:
        output_dir: Directory of the command's outputs
        name: File name inside it

    Returns:
        Path of the output file
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    return output_dir / name


def format_float(value: float) -> str:
    """17 significant digits, '.' decimal point, round-trip exact."""
    return "%.17g" % float(value)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value).replace(",", ";").replace("\n", " ")


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence],
    config_sha256: str,
) -> Path:
    """
    Write a comma-separated table preceded by the header line.

    Args:
        path: Destination file
        columns: Column names
        rows: Row values (floats are written with 17 significant digits)
        config_sha256: Hash of the producing config

    Returns:
        The written path
    """
    lines: List[str] = [header_line(config_sha256), ",".join(columns)]
    for row in rows:
        cells = [_cell(v) for v in row]
        if len(cells) != len(columns):
            raise ValueError(f"Row has {len(cells)} cells, expected {len(columns)}")
        lines.append(",".join(cells))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    return path


def write_array_csv(path: Path, columns: Sequence[str], array: np.ndarray, config_sha256: str) -> Path:
    """Write a 2-D float array as a CSV table."""
    array = np.atleast_2d(np.asarray(array, dtype=float))
    return write_csv(path, columns, array.tolist(), config_sha256)


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
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no NaN/inf
        return value if np.isfinite(value) else str(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path: Path, payload: dict, config_sha256: str) -> Path:
    """
    Write a JSON document with sorted keys.

    The header fields ``tool``, ``version`` and ``config_sha256`` are added
    to the top-level object.
    """
    document = dict(_jsonable(payload))
    document.update({"tool": "soft2hard", "version": __version__, "config_sha256": config_sha256})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def to_jsonable(payload):
    """JSON-ready copy of nested dicts holding numpy values."""
    return _jsonable(payload)


def read_csv(path: Path):
    """
    Read a file written by :func:`write_csv`.

    Returns:
        (header line, column names, float array)
    """
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        columns = f.readline().rstrip("\n").split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    return header, columns, data
