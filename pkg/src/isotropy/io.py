"""CSV ingestion and emission for spatial datasets.

Input format: header ``x,y,value``, one observation per row, UTF-8,
decimal points.  Ingestion auto-detects complete rectangular grids and
attaches the grid structure.
"""

from __future__ import annotations

import csv
import io
import warnings
from pathlib import Path

import numpy as np

from .core import GridSpec, SpatialDataset

__all__ = ["DataFormatError", "read_dataset_csv", "write_dataset_csv", "detect_grid"]

GRID_DETECT_TOL = 1e-6


class DataFormatError(ValueError):
    """Malformed or inconsistent input data."""


def detect_grid(locations: np.ndarray) -> GridSpec | None:
    """GridSpec if the locations form a complete rectangular grid with a
    common spacing in both directions (within 1e-6), else None."""
    xs = np.unique(locations[:, 0])
    ys = np.unique(locations[:, 1])
    if len(xs) < 2 or len(ys) < 2:
        return None
    if len(xs) * len(ys) != locations.shape[0]:
        return None
    dx = np.diff(xs)
    dy = np.diff(ys)
    s = dx.min()
    if s <= 0:
        return None
    if np.max(np.abs(dx - s)) > GRID_DETECT_TOL or np.max(np.abs(dy - s)) > GRID_DETECT_TOL:
        return None
    # every cell must be observed exactly once
    ix = np.rint((locations[:, 0] - xs[0]) / s)
    iy = np.rint((locations[:, 1] - ys[0]) / s)
    if np.max(np.abs(locations[:, 0] - (xs[0] + ix * s))) > GRID_DETECT_TOL:
        return None
    if np.max(np.abs(locations[:, 1] - (ys[0] + iy * s))) > GRID_DETECT_TOL:
        return None
    flat = (iy * len(xs) + ix).astype(int)
    if len(np.unique(flat)) != locations.shape[0]:
        return None
    return GridSpec(len(xs), len(ys), float(s))


def read_dataset_csv(path) -> SpatialDataset:
    """Parse an ``x,y,value`` CSV into a dataset, attaching grid structure
    when the locations form a complete lattice."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = [c.strip().lower() for c in rows[0]]
    if header[:3] != ["x", "y", "value"]:
        raise DataFormatError(
            f"{path}: expected header 'x,y,value', got {','.join(rows[0])!r}"
        )
    locations, values = [], []
    seen: dict[tuple[float, float], int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 3:
            raise DataFormatError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
        try:
            x, y, v = float(row[0]), float(row[1]), float(row[2])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(v)):
            raise DataFormatError(f"{path}:{lineno}: non-finite entry")
        key = (x, y)
        if key in seen:
            raise DataFormatError(
                f"{path}:{lineno}: duplicate location ({x:g}, {y:g}), "
                f"first seen on line {seen[key]}"
            )
        seen[key] = lineno
        locations.append((x, y))
        values.append(v)
    if len(values) < 2:
        raise DataFormatError(f"{path}: need at least 2 observations, got {len(values)}")
    if len(values) < 10:
        warnings.warn(
            f"{path}: only {len(values)} observations; results will be unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    locations = np.asarray(locations, dtype=float)
    values = np.asarray(values, dtype=float)
    try:
        return SpatialDataset(locations, values, grid=detect_grid(locations))
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def write_dataset_csv(dataset: SpatialDataset, path) -> None:
    """Emit a dataset in the ingestion format, full float precision."""
    lines = ["x,y,value"]
    for (x, y), v in zip(dataset.locations, dataset.values):
        lines.append(f"{x:.17g},{y:.17g},{v:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
