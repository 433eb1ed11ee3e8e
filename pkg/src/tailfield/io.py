"""CSV and JSON serialization.

Numbers are written with 17 significant digits and a '.' decimal separator
so that floats survive a write/read round trip unchanged. Files are written
to a temporary name and moved into place, never left half-written.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .sim import FunctionalSample, Grid


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _atomic_write(path, write):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])

    _atomic_write(path, write)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def write_json(path, payload):
    _atomic_write(path, lambda fh: (json.dump(_jsonable(payload), fh, indent=2), fh.write("\n")))


def metadata_path(path):
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_sample(path, sample, extra=None):
    """Write grid locations as the first row, then one trajectory per row,
    plus a sidecar ``<path>.meta.json`` holding seed and model."""
    write_csv(path, [fmt(v) for v in sample.grid.locations], sample.values)
    meta = {"model": sample.model_tag, "n": sample.n, "locations": sample.grid.locations,
            "seed": sample.seed, **sample.meta, **(extra or {})}
    write_json(metadata_path(path), meta)


def _parse_float(text, row, col):
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"row {row}, column {col}: cannot parse {text!r} as a number") \
            from None
    if not np.isfinite(value):
        raise ValidationError(f"row {row}, column {col}: non-finite value {text!r}")
    return value


def read_sample(path, model_tag="data"):
    """Read a sample written by :func:`write_sample` (rows and columns 1-based in errors)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ValidationError(f"{path}: need a header row of locations and at least one trajectory")
    header = [_parse_float(c, 1, j + 1) for j, c in enumerate(rows[0])]
    width = len(header)
    values = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ValidationError(f"row {i}: expected {width} columns, found {len(row)}")
        values.append([_parse_float(c, i, j + 1) for j, c in enumerate(row)])
    try:
        grid = Grid(header)
    except ValidationError as exc:
        raise ValidationError(f"row 1: {exc}") from None
    meta_file = metadata_path(path)
    seed = None
    if meta_file.exists():
        with open(meta_file, encoding="utf-8") as fh:
            meta = json.load(fh)
        seed = meta.get("seed")
        model_tag = meta.get("model", model_tag)
    return FunctionalSample(np.array(values), grid, seed, model_tag)


def read_csv_table(path):
    """Header and float rows of a numeric CSV table."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(c) for c in r] for r in rows[1:]]
