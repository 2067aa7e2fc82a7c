"""File formats: series CSV, grid CSV + PGM heatmaps, JSON reports."""
from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path

import numpy as np

from .series import ObservableSeries

FLOAT_FMT = "{:.17g}"


def _fmt(v) -> str:
    return FLOAT_FMT.format(float(v))


def write_series_csv(series: ObservableSeries, path) -> Path:
    """``t`` first, then channels in insertion order; 17 significant digits."""
    path = Path(path)
    names = series.names
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *names])
        cols = [series.t] + [series[n] for n in names]
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])
    return path


def read_series_csv(path) -> ObservableSeries:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[0] != "t":
        raise ValueError("first column must be 't'")
    data = np.array([[float(v) for v in r] for r in body]).reshape(len(body), len(header))
    return ObservableSeries(data[:, 0], {name: data[:, i] for i, name in enumerate(header) if i})


def write_grid_csv(array2d, path, x=None, y=None) -> Path:
    """Row per fixed ``y`` (first column), columns ordered by ``x`` (header row)."""
    a = np.asarray(array2d, dtype=float)
    ny, nx = a.shape
    x = np.arange(nx, dtype=float) if x is None else np.asarray(x, dtype=float)
    y = np.arange(ny, dtype=float) if y is None else np.asarray(y, dtype=float)
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y\\x", *(_fmt(v) for v in x)])
        for yv, row in zip(y, a):
            w.writerow([_fmt(yv), *(_fmt(v) for v in row)])
    return path


def read_grid_csv(path):
    """Returns ``(array, x, y)``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    x = np.array([float(v) for v in rows[0][1:]])
    y = np.array([float(r[0]) for r in rows[1:]])
    a = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return a, x, y


def pgm_bytes(array2d) -> tuple[bytes, bool]:
    """Binary P5 image scaled to the array maximum; second value is False for an all-zero array."""
    a = np.asarray(array2d, dtype=float)
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise ValueError("heatmap needs a finite non-negative array")
    peak = a.max() if a.size else 0.0
    ok = peak > 0
    pix = np.zeros(a.shape, dtype=np.uint8) if not ok else np.rint(255 * a / peak).astype(np.uint8)
    h, w = a.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pix.tobytes(), ok


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


def emit_heatmap(array2d, path, x=None, y=None) -> tuple[Path, Path]:
    """Write ``<path>.csv`` and ``<path>.pgm``; warns if the array is all zero."""
    base = Path(path)
    if base.suffix in (".csv", ".pgm"):
        base = base.with_suffix("")
    csv_path = write_grid_csv(array2d, base.with_suffix(".csv"), x, y)
    raw, ok = pgm_bytes(array2d)
    if not ok:
        warnings.warn(f"heatmap {base.name} has zero maximum; PGM is all black", RuntimeWarning, stacklevel=2)
    pgm_path = base.with_suffix(".pgm")
    pgm_path.write_bytes(raw)
    return csv_path, pgm_path


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialise {type(o).__name__}")
