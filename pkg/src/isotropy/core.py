"""Shared domain types: datasets, grids, lag sets and contrast matrices.

Conventions used throughout the package:

* locations are rows of an ``(n, 2)`` float array, ``(x, y)``;
* a lag ``(dx, dy)`` is the displacement from one location to another,
  so the pair ``(i, j)`` matches lag ``h`` when ``loc[j] - loc[i] == h``;
* all containers are immutable after construction and safe to share
  between threads or processes.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "GridSpec",
    "SpatialDataset",
    "LagSet",
    "ContrastMatrix",
    "default_lag_set",
    "default_contrast",
    "enumerate_lag_pairs",
]

# Matching tolerance for lag-pair lookup on gridded data, in units of the
# grid spacing.  Non-gridded data never uses exact matching.
GRID_MATCH_TOL = 1e-9

# Two sampling locations closer than this are considered duplicates.
DUPLICATE_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid layout: ``n_cols`` x ``n_rows`` points, fixed spacing."""

    n_cols: int
    n_rows: int
    spacing: float = 1.0

    def __post_init__(self):
        if self.n_cols < 1 or self.n_rows < 1:
            raise ValueError("grid dimensions must be positive")
        if not (self.spacing > 0):
            raise ValueError("grid spacing must be positive")

    @property
    def size(self) -> int:
        return self.n_cols * self.n_rows

    def locations(self, x0: float = 0.0, y0: float = 0.0) -> np.ndarray:
        """All grid locations, x varying fastest, as an ``(n, 2)`` array."""
        ii, jj = np.meshgrid(
            np.arange(self.n_cols), np.arange(self.n_rows), indexing="xy"
        )
        pts = np.column_stack([ii.ravel(), jj.ravel()]).astype(float) * self.spacing
        pts[:, 0] += x0
        pts[:, 1] += y0
        return pts


@dataclass(frozen=True)
class SpatialDataset:
    """Sampling locations with observed values, optionally on a grid.

    Parameters
    ----------
    locations : (n, 2) array
        Sampling coordinates.
    values : (n,) array
        Observed field values, same order as ``locations``.
    grid : GridSpec, optional
        Declared grid structure.  When present, every location must lie
        on the grid and the grid must be completely observed.
    """

    locations: np.ndarray
    values: np.ndarray
    grid: GridSpec | None = None
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool = True):
        loc = np.atleast_2d(np.asarray(self.locations, dtype=float))
        val = np.asarray(self.values, dtype=float).ravel()
        if loc.ndim != 2 or loc.shape[1] != 2:
            raise ValueError("locations must be an (n, 2) array")
        if loc.shape[0] != val.shape[0]:
            raise ValueError(
                f"{loc.shape[0]} locations but {val.shape[0]} values"
            )
        if loc.shape[0] < 1:
            raise ValueError("dataset must contain at least one observation")
        if validate:
            if not np.all(np.isfinite(loc)):
                raise ValueError("locations must be finite")
            if not np.all(np.isfinite(val)):
                raise ValueError("values must be finite")
            if loc.shape[0] > 1:
                d, _ = cKDTree(loc).query(loc, k=2)
                nearest = d[:, 1].min()
                if nearest < DUPLICATE_TOL:
                    raise ValueError(
                        f"duplicate sampling locations (minimum separation {nearest:g})"
                    )
        object.__setattr__(self, "locations", _readonly(loc))
        object.__setattr__(self, "values", _readonly(val))
        if self.grid is not None:
            self._check_grid()

    def _check_grid(self):
        g = self.grid
        if g.size != self.n:
            raise ValueError(
                f"grid declares {g.size} points but dataset has {self.n}"
            )
        x0 = self.locations[:, 0].min()
        y0 = self.locations[:, 1].min()
        idx = (self.locations - (x0, y0)) / g.spacing
        rounded = np.rint(idx)
        if np.max(np.abs(idx - rounded)) > 1e-6:
            raise ValueError("locations do not lie on the declared grid")
        cols = rounded[:, 0].astype(int)
        rows = rounded[:, 1].astype(int)
        if cols.min() < 0 or cols.max() >= g.n_cols or rows.min() < 0 or rows.max() >= g.n_rows:
            raise ValueError("locations fall outside the declared grid")
        flat = rows * g.n_cols + cols
        if len(np.unique(flat)) != self.n:
            raise ValueError("grid cells observed more than once")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the sampling locations."""
        return (
            float(self.locations[:, 0].min()),
            float(self.locations[:, 1].min()),
            float(self.locations[:, 0].max()),
            float(self.locations[:, 1].max()),
        )

    def field_matrix(self) -> np.ndarray:
        """Values arranged as an ``(n_cols, n_rows)`` array (requires grid)."""
        if self.grid is None:
            raise ValueError("dataset has no grid structure")
        g = self.grid
        x0 = self.locations[:, 0].min()
        y0 = self.locations[:, 1].min()
        cols = np.rint((self.locations[:, 0] - x0) / g.spacing).astype(int)
        rows = np.rint((self.locations[:, 1] - y0) / g.spacing).astype(int)
        out = np.empty((g.n_cols, g.n_rows), dtype=float)
        out[cols, rows] = self.values
        return out

    def take(self, indices: np.ndarray) -> "SpatialDataset":
        """Subset the dataset by observation indices (grid structure dropped)."""
        # subsets of a validated dataset cannot introduce duplicates
        return SpatialDataset(
            self.locations[indices], self.values[indices], validate=False
        )


@dataclass(frozen=True)
class LagSet:
    """Ordered set of distinct spatial lags used for a contrast hypothesis."""

    lags: np.ndarray

    def __post_init__(self):
        lags = np.atleast_2d(np.asarray(self.lags, dtype=float))
        if lags.shape[1] != 2:
            raise ValueError("lags must be (k, 2)")
        if lags.shape[0] < 2:
            raise ValueError("a lag set needs at least two lags")
        if np.any(np.all(np.abs(lags) < 1e-12, axis=1)):
            raise ValueError("the zero lag is not allowed in a lag set")
        for i in range(lags.shape[0]):
            for j in range(i + 1, lags.shape[0]):
                if np.allclose(lags[i], lags[j], atol=1e-12):
                    raise ValueError(f"duplicate lag {tuple(lags[i])}")
        object.__setattr__(self, "lags", _readonly(lags))

    @property
    def k(self) -> int:
        return self.lags.shape[0]

    def __iter__(self):
        return ((float(dx), float(dy)) for dx, dy in self.lags)


@dataclass(frozen=True)
class ContrastMatrix:
    """Full-row-rank matrix of zero-sum contrasts defining the null."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        r, k = m.shape
        if r > k - 1:
            raise ValueError(f"{r} contrasts over {k} lags cannot be independent")
        if np.max(np.abs(m.sum(axis=1))) > 1e-12:
            raise ValueError("every contrast row must sum to zero")
        if np.linalg.matrix_rank(m) != r:
            raise ValueError("contrast matrix is not full row rank")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def r(self) -> int:
        return self.matrix.shape[0]

    @property
    def k(self) -> int:
        return self.matrix.shape[1]


# Orientation-supplementing lag pair at ~22.5 and ~112.5 degrees.
_EXTRA_PAIR = ((1.132, 0.469), (-0.469, 1.132))


def default_lag_set(scale: float = 1.0, extra_pair: bool = False) -> LagSet:
    """The standard four-lag set for unit-spaced designs, optionally scaled.

    Returns the lags ``(1,0), (0,1), (1,1), (-1,1)`` multiplied by
    ``scale``.  With ``extra_pair=True`` a fifth and sixth lag at
    roughly 22.5/112.5 degrees are appended (only meaningful at
    ``scale=1``; they are scaled along with the rest).
    """
    if not (scale > 0):
        raise ValueError("scale must be positive")
    base = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (-1.0, 1.0)]
    if extra_pair:
        base.extend(_EXTRA_PAIR)
    return LagSet(np.asarray(base) * scale)


def default_contrast(lag_set: LagSet) -> ContrastMatrix:
    """Contrast consecutive lag pairs: row i compares lag 2i to lag 2i+1.

    The lag set must hold an even number of lags arranged as orthogonal
    pairs, as produced by :func:`default_lag_set`.
    """
    k = lag_set.k
    if k % 2 != 0:
        raise ValueError(
            f"cannot pair {k} lags: an even count of orthogonal pairs is required"
        )
    m = np.zeros((k // 2, k))
    for i in range(k // 2):
        m[i, 2 * i] = 1.0
        m[i, 2 * i + 1] = -1.0
    return ContrastMatrix(m)


def enumerate_lag_pairs(
    dataset: SpatialDataset, lag: tuple[float, float], tol: float | None = None
) -> np.ndarray:
    """All ordered index pairs ``(i, j)`` with ``loc[j] - loc[i]`` within
    ``tol`` of ``lag`` (Euclidean).

    Each direction is counted once: the reversed pair is found under the
    negated lag.  Returns an ``(m, 2)`` integer array (possibly empty).
    """
    if tol is None:
        spacing = dataset.grid.spacing if dataset.grid is not None else 1.0
        tol = GRID_MATCH_TOL * spacing
    loc = dataset.locations
    target = loc + np.asarray(lag, dtype=float)
    tree = cKDTree(loc)
    dist, j = tree.query(target, k=1, distance_upper_bound=tol * 1.001 + 1e-300)
    hit = np.isfinite(dist) & (dist <= tol)
    i = np.nonzero(hit)[0]
    return np.column_stack([i, j[hit]]).astype(np.intp)
