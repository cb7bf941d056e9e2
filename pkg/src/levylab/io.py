"""Atomic, deterministic writers for JSON reports and CSV columns.

Every file carries the configuration hash and seed: JSON documents in a
``meta`` block, CSV files in leading ``#`` comment lines.  Non-finite floats
are written as the strings ``"inf"``, ``"-inf"`` and ``"nan"`` so that the
JSON stays standard.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np


def to_jsonable(obj):
    """Plain JSON types from numpy scalars/arrays, enums, tuples and dataclass-like objects."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(payload) -> str:
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def atomic_write(path: str | Path, text: str) -> Path:
    """Write via a temporary file in the same directory and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, payload, config_hash: str, seed: int) -> Path:
    doc = {"meta": {"config_hash": config_hash, "seed": seed}, "data": payload}
    return atomic_write(path, dumps(doc))


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def csv_text(columns: dict, config_hash: str, seed: int) -> str:
    """Columns of equal length as CSV with a ``#`` header carrying hash and seed."""
    names = list(columns)
    cols = [np.asarray(columns[k]).ravel() for k in names]
    if len({c.size for c in cols}) > 1:
        raise ValueError("CSV columns must have equal length")
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash}\n# seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_csv(path, columns: dict, config_hash: str, seed: int) -> Path:
    return atomic_write(path, csv_text(columns, config_hash, seed))
