"""Plot-ready diagnostic summaries: directional semivariograms and
equal-correlation contours.  Both emit rows suitable for CSV output; no
rendering is done here."""

from __future__ import annotations

import numpy as np

from .core import SpatialDataset
from .grf import AnisotropyParams, ExponentialCovariance

__all__ = ["directional_semivariogram", "equicorrelation_contours"]


def directional_semivariogram(
    dataset: SpatialDataset,
    n_directions: int = 4,
    n_bins: int = 10,
    max_dist: float | None = None,
) -> list[tuple[float, float, float, int]]:
    """Classical semivariogram binned by direction sector and distance.

    Directions partition the half-circle [0, 180) into ``n_directions``
    sectors centered on k*180/n_directions degrees.  Returns rows
    ``(direction_deg, distance, gamma, n_pairs)``; empty bins report a
    zero pair count and NaN gamma.
    """
    if dataset.n < 2:
        raise ValueError("directional semivariogram needs at least two points")
    if n_directions < 1 or n_bins < 1:
        raise ValueError("need at least one direction and one distance bin")
    loc = dataset.locations
    dx = loc[:, 0][None, :] - loc[:, 0][:, None]
    dy = loc[:, 1][None, :] - loc[:, 1][:, None]
    iu = np.triu_indices(dataset.n, k=1)
    dx, dy = dx[iu], dy[iu]
    sqdiff = (dataset.values[None, :] - dataset.values[:, None])[iu] ** 2
    dist = np.hypot(dx, dy)
    if max_dist is None:
        max_dist = float(dist.max()) / 2.0
    angle = np.mod(np.arctan2(dy, dx), np.pi)
    sector_width = np.pi / n_directions
    sector = np.mod(np.rint(angle / sector_width).astype(int), n_directions)
    edges = np.linspace(0.0, max_dist, n_bins + 1)
    rows = []
    for s in range(n_directions):
        direction_deg = s * 180.0 / n_directions
        in_sector = sector == s
        for b in range(n_bins):
            sel = in_sector & (dist > edges[b]) & (dist <= edges[b + 1])
            count = int(np.count_nonzero(sel))
            gamma = float(sqdiff[sel].mean() / 2.0) if count else float("nan")
            center = float((edges[b] + edges[b + 1]) / 2.0)
            rows.append((direction_deg, center, gamma, count))
    return rows


def equicorrelation_contours(
    cov: ExponentialCovariance,
    aniso: AnisotropyParams | None = None,
    levels: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9),
    n_points: int = 360,
) -> list[tuple[float, float, float]]:
    """Contours of equal correlation of the (possibly anisotropic) model.

    Each contour is the set of lags h with corr(h) = level; under
    geometric anisotropy it is the ellipse obtained by mapping the
    isotropic circle back through the inverse coordinate transform.
    Returns rows ``(level, x, y)``.  Levels at or above the
    correlation limit at zero distance (sigma2 / sill) yield no rows.
    """
    rows = []
    t = np.linspace(0.0, 2 * np.pi, n_points, endpoint=False)
    circle = np.column_stack([np.cos(t), np.sin(t)])
    if aniso is not None and not aniso.is_isotropic:
        # inverse of the location transform maps the isotropic circle to
        # the equicorrelation ellipse in original coordinates
        back = np.linalg.inv(aniso.matrix())
    else:
        back = np.eye(2)
    for level in levels:
        if not (0 < level < 1):
            raise ValueError(f"correlation level {level} outside (0, 1)")
        ratio = level * cov.sill / cov.sigma2
        if ratio >= 1:
            continue  # unreachable under the nugget
        d = -np.log(ratio) / cov.phi
        pts = (d * circle) @ back
        rows.extend((float(level), float(x), float(y)) for x, y in pts)
    return rows
