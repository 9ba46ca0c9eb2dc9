"""CSV readers/writers and a deterministic JSON emitter.

Every float is written with 17 significant digits, which round-trips IEEE
doubles exactly and makes output files byte-comparable.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .exceptions import InputError
from .model import Dataset

__all__ = [
    "format_float",
    "dumps_json",
    "read_table",
    "read_combined_csv",
    "read_split_csv",
    "write_combined_csv",
    "write_rows",
]


def format_float(v) -> str:
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {v!r} cannot be written")
    return "%.17g" % v


def _json_value(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return {None: "null", True: "true", False: "false"}[obj]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_json_value(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _json_value(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj, indent=2) -> str:
    """Serialize ``obj`` to JSON; non-finite floats become ``null``."""
    return _json_value(obj, indent, 0) + "\n"


def _is_number(field):
    try:
        float(field)
    except ValueError:
        return False
    return True


def read_table(path):
    """Parse a numeric CSV into a 2-D array.

    A first line containing any non-numeric field is taken as a header and
    skipped. Blank lines are ignored.

    Returns
    -------
    values : ndarray, shape (rows, cols)
    header : list of str or None
    lines : ndarray of int
        1-based file line number of every returned row.
    """
    rows, lines, header = [], [], None
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            for rec in reader:
                lineno = reader.line_num
                if not rec or all(not f.strip() for f in rec):
                    continue
                if not rows and header is None and not all(_is_number(f) for f in rec):
                    header = [f.strip() for f in rec]
                    continue
                vals = []
                for col, f in enumerate(rec, start=1):
                    try:
                        v = float(f)
                    except ValueError:
                        raise InputError(f"{path}: line {lineno}, column {col}: "
                                         f"cannot parse {f!r} as a number") from None
                    if not math.isfinite(v):
                        raise InputError(f"{path}: line {lineno}, column {col}: "
                                         f"non-finite value {f!r}")
                    vals.append(v)
                if rows and len(vals) != len(rows[0]):
                    raise InputError(f"{path}: line {lineno}: expected {len(rows[0])} "
                                     f"fields, found {len(vals)}")
                if header is not None and not rows and len(vals) != len(header):
                    raise InputError(f"{path}: line {lineno}: expected {len(header)} "
                                     f"fields to match the header, found {len(vals)}")
                rows.append(vals)
                lines.append(lineno)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except csv.Error as exc:
        raise InputError(f"{path}: line {reader.line_num}: {exc}") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64), header, np.array(lines)


def _check_responses(path, b, lines):
    bad = np.flatnonzero(~(b > 0))
    if bad.size:
        i = bad[0]
        raise InputError(f"{path}: line {lines[i]}: response must be positive, got {b[i]!r}")


def read_combined_csv(path) -> Dataset:
    """Dataset from a CSV whose first column is the response ``b``."""
    table, _, lines = read_table(path)
    if table.shape[1] < 2:
        raise InputError(f"{path}: need a response column and at least one predictor")
    b = table[:, 0]
    _check_responses(path, b, lines)
    return Dataset(table[:, 1:], b)


def read_split_csv(design_path, response_path) -> Dataset:
    """Dataset from a design-matrix CSV and a single-column response CSV."""
    A, _, _ = read_table(design_path)
    b, _, lines = read_table(response_path)
    if b.shape[1] != 1:
        raise InputError(f"{response_path}: expected one column, found {b.shape[1]}")
    b = b[:, 0]
    if b.shape[0] != A.shape[0]:
        raise InputError(f"{design_path} has {A.shape[0]} rows but {response_path} "
                         f"has {b.shape[0]}")
    _check_responses(response_path, b, lines)
    return Dataset(A, b)


def write_rows(path, header, rows):
    """Write a CSV table; floats use 17 significant digits."""
    def cell(v):
        if isinstance(v, (float, np.floating)):
            return format_float(v) if math.isfinite(v) else "nan"
        return str(v)

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for r in rows:
            w.writerow([cell(v) for v in r])


def write_combined_csv(data: Dataset, path, header=True):
    """Inverse of :func:`read_combined_csv`."""
    names = ["b"] + [f"x{j + 1}" for j in range(data.n_features)] if header else None
    rows = [[float(b), *map(float, a)] for b, a in zip(data.responses, data.design)]
    write_rows(path, names, rows)
