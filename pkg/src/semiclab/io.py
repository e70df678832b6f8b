"""Deterministic CSV / JSON artifacts."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def csv_text(columns, rows) -> str:
    """Header plus one line per row; columns in the given order, LF endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(row[c]) for c in columns])
    return buf.getvalue()


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(columns, rows))
    return path


def _parse_cell(s):
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_csv(path):
    """Inverse of ``write_csv``: (columns, rows as dicts)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        columns = next(r)
        rows = [dict(zip(columns, map(_parse_cell, line))) for line in r]
    return columns, rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no nan/inf; keep them readable
        return v if math.isfinite(v) else format_value(v)
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json_text(obj))
    return path


def artifact_path(out_dir, subcommand, digest, name, ext) -> Path:
    """``<out>/<subcommand>/<subcommand>_<digest>_<name>.<ext>``."""
    return Path(out_dir) / subcommand / f"{subcommand}_{digest}_{name}.{ext}"
