"""CSV and JSON input/output.

Point CSVs: one row per point, every column numeric, header optional.
Weighted CSVs: ``d`` coordinate columns followed by a ``weight`` column.
Floats are written with ``repr`` so a fixed seed gives byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ._validation import DataError
from .core_types import WeightedDataset


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _read_rows(path, allow_empty=False):
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DataError(f"{path}: empty input")
    header = None
    if not all(_is_number(cell) for cell in rows[0]):
        header, rows = [cell.strip() for cell in rows[0]], rows[1:]
    if not rows:
        if allow_empty and header is not None:
            return header, np.empty((0, len(header)))
        raise DataError(f"{path}: empty input")
    width = len(header) if header else len(rows[0])
    values = np.empty((len(rows), width))
    first_data_row = 2 if header else 1
    for i, row in enumerate(rows):
        lineno = i + first_data_row
        if len(row) != width:
            raise DataError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
        try:
            values[i] = [float(cell) for cell in row]
        except ValueError as exc:
            raise DataError(f"{path}: row {lineno}: {exc}") from exc
        if not np.all(np.isfinite(values[i])):
            raise DataError(f"{path}: row {lineno}: non-finite value")
    return header, values


def read_points_csv(path):
    """Load an ``(n, d)`` array of points."""
    _, values = _read_rows(path)
    return values


def read_weighted_csv(path):
    """Load a weighted dataset; the last column holds the weights.

    A header-only file is an empty (fully filtered) release.
    """
    header, values = _read_rows(path, allow_empty=True)
    if values.shape[1] < 2:
        raise DataError(f"{path}: a weighted CSV needs at least one coordinate and a weight column")
    if header is not None and header[-1] != "weight":
        raise DataError(f"{path}: last column must be named 'weight', got {header[-1]!r}")
    try:
        if values.shape[0] == 0:
            return WeightedDataset.empty(values.shape[1] - 1)
        return WeightedDataset(values[:, :-1], values[:, -1])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def read_dataset_csv(path):
    """Points or weighted points, depending on a trailing ``weight`` header."""
    header, values = _read_rows(path, allow_empty=True)
    if header is not None and header[-1] == "weight":
        return read_weighted_csv(path)
    if values.shape[0] == 0:
        raise DataError(f"{path}: empty input")
    return values


def _fmt(value):
    return repr(float(value))


def coordinate_header(dim):
    return [f"x{i}" for i in range(dim)]


def write_points_csv(path, X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(coordinate_header(X.shape[1]))
        for row in X:
            writer.writerow([_fmt(v) for v in row])


def write_weighted_csv(path, data):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(coordinate_header(data.dim) + ["weight"])
        for center, weight in zip(data.centers, data.weights):
            writer.writerow([_fmt(v) for v in center] + [_fmt(weight)])


def write_rows_csv(path, header, rows):
    """Tidy table; ``rows`` is a list of dicts keyed by ``header``."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row.get(key)) for key in header])


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return _fmt(value)
    return str(value)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        # JSON has no infinity; keep the information as a string
        return value if math.isfinite(value) else str(value)
    return obj


def to_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    Path(path).write_text(to_json(obj))


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise DataError(f"{path}: no such file") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
