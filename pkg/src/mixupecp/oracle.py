"""Brute-force Euler characteristics of ball unions and their intersections.

These routines share no code path with the Delaunay/Alpha pipeline and
serve as independent references for it:

* :func:`cech_chi_oracle` enumerates subsets of centres and applies the
  nerve theorem to equal-radius balls via minimum enclosing balls.
* :func:`grid_chi_2d` rasterises a planar region and counts cells, edges
  and vertices of the occupied cubical complex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionUnsupported, NoConvergence, TooManyPoints
from .geometry import PointCloud, _welzl, within_ball

MAX_CECH_POINTS = 20


def _points(cloud) -> np.ndarray:
    return cloud.points if isinstance(cloud, PointCloud) else PointCloud(cloud).points


def cech_subset_radii(cloud, r_max: float = np.inf):
    """Enclosing radii of all point subsets whose radius is at most ``r_max``.

    Returns
    -------
    radii : ndarray
        Minimum enclosing ball radius of each enumerated subset.
    sizes : ndarray of int
        Cardinality of the corresponding subset.
    """
    pts_arr = _points(cloud)
    n, dim = pts_arr.shape
    if n > MAX_CECH_POINTS:
        raise TooManyPoints(f"subset enumeration is limited to {MAX_CECH_POINTS} points, got {n}")
    pts = [tuple(p) for p in pts_arr.tolist()]
    radii, sizes = [], []

    # depth-first over subsets in increasing index order; enclosing radii
    # only grow along a branch, so a branch is cut at the first overshoot
    stack = [([i], pts[i], 0.0) for i in range(n - 1, -1, -1)]
    while stack:
        members, center, rad = stack.pop()
        radii.append(rad)
        sizes.append(len(members))
        member_pts = [pts[i] for i in members]
        for j in range(n - 1, members[-1], -1):
            q = pts[j]
            if within_ball(center, rad, q):
                c2, r2 = center, rad
            else:
                c2, r2 = _welzl(member_pts, len(member_pts), [q], dim)
            if r2 <= r_max:
                stack.append((members + [j], c2, r2))
    return np.array(radii), np.array(sizes)


def cech_chi_curve(cloud, radii) -> np.ndarray:
    """:func:`cech_chi_oracle` evaluated at several radii at once."""
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    sub_r, sub_k = cech_subset_radii(cloud, float(radii.max()))
    signs = np.where(sub_k % 2 == 1, 1, -1)
    order = np.argsort(sub_r, kind="stable")
    csum = np.concatenate([[0], np.cumsum(signs[order])])
    return csum[np.searchsorted(sub_r[order], radii, side="right")]


def cech_chi_oracle(cloud, r: float) -> int:
    """Euler characteristic of the union of closed radius-``r`` balls.

    Sums ``(-1)^(|S|+1)`` over nonempty centre subsets ``S`` whose minimum
    enclosing ball has radius at most ``r``.

    Raises
    ------
    TooManyPoints
        For more than 20 points.
    """
    return int(cech_chi_curve(cloud, [r])[0])


@dataclass(frozen=True)
class GridSpec:
    """Square-cell raster over an axis-aligned box.

    Attributes
    ----------
    lo, hi : tuple of float
        Lower-left and upper-right corners.
    resolution : int
        Cells along each axis.
    """

    lo: tuple
    hi: tuple
    resolution: int

    def __post_init__(self):
        if self.resolution < 16:
            raise ValueError("resolution must be at least 16")
        if not all(h > l for l, h in zip(self.lo, self.hi)):
            raise ValueError("box must have positive extent")

    @classmethod
    def around(cls, points: np.ndarray, r: float, resolution: int = 256) -> "GridSpec":
        """Square box containing every radius-``r`` ball with ``r`` of margin."""
        lo = points.min(axis=0) - 2 * r
        hi = points.max(axis=0) + 2 * r
        side = float((hi - lo).max())
        mid = (lo + hi) / 2
        return cls(tuple(mid - side / 2), tuple(mid + side / 2), resolution)

    def doubled(self) -> "GridSpec":
        return GridSpec(self.lo, self.hi, self.resolution * 2)

    def centers(self):
        res = self.resolution
        xs = self.lo[0] + (np.arange(res) + 0.5) * (self.hi[0] - self.lo[0]) / res
        ys = self.lo[1] + (np.arange(res) + 0.5) * (self.hi[1] - self.lo[1]) / res
        return xs, ys


def _covered(points: np.ndarray, r: float, grid: GridSpec) -> np.ndarray:
    xs, ys = grid.centers()
    dx2 = (xs[None, :] - points[:, 0:1]) ** 2  # (n, res)
    dy2 = (ys[None, :] - points[:, 1:2]) ** 2
    occ = np.zeros((len(ys), len(xs)), dtype=bool)
    r2 = r * r
    for i in range(len(points)):
        occ |= (dy2[i][:, None] + dx2[i][None, :]) <= r2
    return occ


def cubical_chi(occupied: np.ndarray) -> int:
    """Euler characteristic of the closed union of occupied unit squares."""
    o = np.pad(np.asarray(occupied, dtype=bool), 1)
    faces = int(o.sum())
    verts = int((o[:-1, :-1] | o[1:, :-1] | o[:-1, 1:] | o[1:, 1:]).sum())
    edges = int((o[:-1, :] | o[1:, :]).sum() + (o[:, :-1] | o[:, 1:]).sum())
    return verts - edges + faces


def _in_region(clouds, r, mode, q: np.ndarray) -> np.ndarray:
    hits = [(cdist(q, c) <= r).any(axis=1) for c in clouds]
    return np.logical_and.reduce(hits) if mode == "intersection" else np.logical_or.reduce(hits)


def _raster_chi(clouds, r, grid, mode):
    occ = _covered(clouds[0], r, grid)
    if mode == "intersection":
        occ &= _covered(clouds[1], r, grid)
    elif len(clouds) > 1:
        for c in clouds[1:]:
            occ |= _covered(c, r, grid)
    # Two cells meeting only at a corner are joined through that corner in
    # the closed-square complex. Near thin wedges this joins or splits the
    # region at pixel scale whatever the resolution, so each such contact
    # is settled by testing the corner point itself: when it lies outside,
    # dropping it from the complex raises the Euler characteristic by one.
    o = np.pad(occ, 1)
    a, b, c, d = o[:-1, :-1], o[:-1, 1:], o[1:, :-1], o[1:, 1:]
    rows, cols = np.nonzero((a & d & ~b & ~c) | (b & c & ~a & ~d))
    chi = cubical_chi(occ)
    if len(rows):
        step = (np.array(grid.hi) - np.array(grid.lo)) / grid.resolution
        corners = np.column_stack([grid.lo[0] + cols * step[0], grid.lo[1] + rows * step[1]])
        chi += int(np.count_nonzero(~_in_region(clouds, r, mode, corners)))
    return chi


def grid_chi_2d(clouds, r: float, grid: GridSpec | None = None, mode: str = "union",
                max_doublings: int = 3) -> int:
    """Euler characteristic of a rasterised union or intersection of discs.

    A cell is occupied when its centre lies in the region. The resolution
    is doubled until the values at three consecutive resolutions agree.

    Parameters
    ----------
    clouds : PointCloud or sequence of PointCloud
        One cloud (union mode) or two clouds (intersection mode uses
        ``U(X; r) & U(Y; r)``; union mode uses the union of all discs).
    r : float
        Disc radius.
    grid : GridSpec, optional
        Starting grid; by default a 256-cell box padded by ``2r``.
    mode : {'union', 'intersection'}

    Raises
    ------
    NoConvergence
        If the value keeps changing after ``max_doublings`` doublings.
    """
    if isinstance(clouds, (PointCloud, np.ndarray)):
        clouds = [clouds]
    arrs = [_points(c) for c in clouds]
    if any(a.shape[1] != 2 for a in arrs):
        raise DimensionUnsupported("the raster oracle is planar only")
    if mode not in ("union", "intersection"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "intersection" and len(arrs) != 2:
        raise ValueError("intersection mode needs exactly two clouds")
    if grid is None:
        grid = GridSpec.around(np.vstack(arrs), r)
    history = [_raster_chi(arrs, r, grid, mode)]
    for _ in range(max_doublings):
        grid = grid.doubled()
        history.append(_raster_chi(arrs, r, grid, mode))
        if len(history) >= 3 and history[-1] == history[-2] == history[-3]:
            return history[-1]
    raise NoConvergence(f"raster Euler characteristic did not settle: {history}")
