"""Euler characteristic curves and the mixup profile of two point clouds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, TooFewPoints
from .geometry import Filtration, PointCloud, alpha_filtration, circumspheres, merge_duplicates

# Relative size of the offset applied to points of the second cloud that
# coincide with a point of the first.
JITTER_SCALE = 1e-9
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous integer step function on [0, inf).

    ``values[i]`` holds on ``[breakpoints[i], breakpoints[i + 1])`` and the
    last value holds from the last breakpoint on. The first breakpoint is
    always 0.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=np.int64)
        if b.ndim != 1 or b.shape != v.shape or len(b) == 0:
            raise ValueError("breakpoints and values must be equal-length 1-d arrays")
        if b[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def canonical(cls, breakpoints, values) -> "StepFunction":
        """Build from possibly redundant breakpoints (sorted, distinct)."""
        b = np.asarray(breakpoints, dtype=float)
        v = np.asarray(values, dtype=np.int64)
        keep = np.ones(len(b), dtype=bool)
        keep[1:] = v[1:] != v[:-1]
        return cls(b[keep], v[keep])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.breakpoints, r, side="right") - 1
        out = self.values[np.clip(idx, 0, None)]
        return int(out) if out.ndim == 0 else out

    def _combine(self, other: "StepFunction", sign: int) -> "StepFunction":
        grid = np.union1d(self.breakpoints, other.breakpoints)
        return StepFunction.canonical(grid, self(grid) + sign * other(grid))

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def max_abs(self) -> int:
        return int(np.abs(self.values).max())

    def to_csv_rows(self) -> list:
        return [(repr(float(b)), int(v)) for b, v in zip(self.breakpoints, self.values)]


@dataclass(frozen=True)
class MixupProfile:
    """Mixup Euler characteristic profile of a pair of clouds.

    Attributes
    ----------
    profile : StepFunction
        ``chi_X + chi_Y - chi_{X u Y}`` as a function of scale.
    dmin : float
        Smallest distance between a point of X and a point of Y.
    s_stat : int
        ``max_r |profile(r)|``.
    """

    profile: StepFunction
    dmin: float
    s_stat: int


@dataclass(frozen=True)
class VarianceStats:
    """Spread of a cloud and the diameter bound it implies."""

    variance: float
    diameter: float
    support_bound: float
    n: int


def ecc(filtration: Filtration, n: int | None = None) -> StepFunction:
    """Euler characteristic curve of a filtration.

    Parameters
    ----------
    filtration : Filtration
    n : int, optional
        Vertex count, checked against the filtration when given.

    Returns
    -------
    StepFunction
        ``chi(r) = sum over simplices with value <= r of (-1)^dim``.
    """
    if n is not None and n != filtration.n:
        raise ValueError(f"filtration has {filtration.n} vertices, expected {n}")
    vals, dims = filtration.flat()
    uniq, inv = np.unique(vals, return_inverse=True)
    signs = np.where(dims % 2 == 0, 1, -1)
    steps = np.bincount(inv.reshape(-1), weights=signs, minlength=len(uniq))
    chi = np.cumsum(np.rint(steps).astype(np.int64))
    return StepFunction.canonical(uniq, chi)


def _jitter_direction(i: int, dim: int) -> np.ndarray:
    # deterministic, index-keyed unit vector
    angles = [2 * math.pi * ((i + 1) * _GOLDEN * (k + 1) % 1.0) for k in range(dim - 1)]
    if dim == 2:
        return np.array([math.cos(angles[0]), math.sin(angles[0])])
    theta, phi = angles[0], math.acos(1 - 2 * ((i + 1) * _GOLDEN * 3 % 1.0))
    return np.array([math.sin(phi) * math.cos(theta), math.sin(phi) * math.sin(theta), math.cos(phi)])


def separate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Offset points of ``y`` that coincide with a point of ``x``.

    Each offending point moves by ``JITTER_SCALE * max(1, extent)`` along a
    direction determined by its index, so repeated calls agree.
    """
    if len(x) == 0 or len(y) == 0:
        return y
    extent = float(np.ptp(np.vstack([x, y]), axis=0).max())
    step = JITTER_SCALE * max(1.0, extent)
    out = y
    for _ in range(8):
        d = cdist(out, x).min(axis=1)
        bad = np.flatnonzero(d < step * 0.5)
        if len(bad) == 0:
            break
        if out is y:
            out = y.copy()
        for i in bad:
            out[i] = out[i] + step * _jitter_direction(int(i), y.shape[1])
    return out


def prepare_pair(X, Y):
    """Duplicate-free coordinate arrays for X and Y with X and Y disjoint."""
    xp = X.points if isinstance(X, PointCloud) else PointCloud(X).points
    yp = Y.points if isinstance(Y, PointCloud) else PointCloud(Y).points
    if xp.shape[1] != yp.shape[1]:
        raise DimensionMismatch(f"X has dimension {xp.shape[1]}, Y has {yp.shape[1]}")
    xu, _, _ = merge_duplicates(xp)
    yu, _, _ = merge_duplicates(yp)
    return xu, separate(xu, yu)


def window_ecc(points):
    """Duplicate-free copy of ``points`` and its Euler characteristic curve."""
    uniq, _, _ = merge_duplicates(points)
    return uniq, ecc(alpha_filtration(uniq, merge=False))


def _cross_gap(xu: np.ndarray, ys: np.ndarray) -> float:
    """Closest X-to-Y distance, rounded exactly like the edge entry values.

    The nearest cross pair is always an edge of the union complex entering
    at half its length, so sharing the arithmetic keeps that breakpoint at
    exactly ``dmin / 2``.
    """
    pts = np.vstack([xu, ys])
    i, j = np.meshgrid(np.arange(len(xu)), len(xu) + np.arange(len(ys)), indexing="ij")
    _, r2 = circumspheres(pts, np.column_stack([i.ravel(), j.ravel()]))
    return 2.0 * float(np.sqrt(r2.min()))


def mixup_from_curves(xu: np.ndarray, chi_x: StepFunction, yu: np.ndarray,
                      chi_y: StepFunction) -> MixupProfile:
    """Mixup profile from duplicate-free clouds with precomputed curves.

    The curve of Y is recomputed when Y has to be nudged off X.
    """
    if xu.shape[1] != yu.shape[1]:
        raise DimensionMismatch(f"X has dimension {xu.shape[1]}, Y has {yu.shape[1]}")
    ys = separate(xu, yu)
    if ys is not yu:
        chi_y = ecc(alpha_filtration(ys, merge=False))
    chi_u = ecc(alpha_filtration(np.vstack([xu, ys]), merge=False))
    grid = np.union1d(np.union1d(chi_x.breakpoints, chi_y.breakpoints), chi_u.breakpoints)
    profile = StepFunction.canonical(grid, chi_x(grid) + chi_y(grid) - chi_u(grid))
    dmin = _cross_gap(xu, ys)
    return MixupProfile(profile=profile, dmin=dmin, s_stat=profile.max_abs())


def mixup_ecp(X, Y) -> MixupProfile:
    """Mixup profile ``chi_X + chi_Y - chi_{X u Y}`` of two point clouds.

    Duplicates within each cloud are merged; points of Y coinciding with
    points of X are nudged apart (see :func:`separate`).

    Parameters
    ----------
    X, Y : PointCloud or array_like
        Clouds in the same ambient dimension.

    Returns
    -------
    MixupProfile
    """
    xp = X.points if isinstance(X, PointCloud) else PointCloud(X).points
    yp = Y.points if isinstance(Y, PointCloud) else PointCloud(Y).points
    if xp.shape[1] != yp.shape[1]:
        raise DimensionMismatch(f"X has dimension {xp.shape[1]}, Y has {yp.shape[1]}")
    xu, chi_x = window_ecc(xp)
    yu, chi_y = window_ecc(yp)
    return mixup_from_curves(xu, chi_x, yu, chi_y)


def detection_stat(profile) -> int:
    """Largest absolute value of a mixup profile.

    Accepts a :class:`MixupProfile`, a :class:`StepFunction` or a plain
    sequence of interval values.
    """
    if isinstance(profile, MixupProfile):
        return profile.s_stat
    if isinstance(profile, StepFunction):
        return profile.max_abs()
    vals = np.asarray(profile)
    return int(np.abs(vals).max()) if vals.size else 0


def centroid_variance(points: np.ndarray) -> float:
    """Mean squared distance from the centroid."""
    pts = np.asarray(points, dtype=float)
    return float(((pts - pts.mean(axis=0)) ** 2).sum(axis=1).mean())


def variance_stats(cloud) -> VarianceStats:
    """Variance, diameter and the variance-implied bound on the diameter.

    The bound ``2 * sqrt(V * n / (n - 1))`` always dominates the diameter.

    Raises
    ------
    TooFewPoints
        If fewer than two distinct points remain after merging.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else PointCloud(cloud).points
    uniq, _, _ = merge_duplicates(pts)
    if len(uniq) < 2:
        raise TooFewPoints("variance statistics need at least two distinct points")
    n = pts.shape[0]
    var = centroid_variance(pts)
    diam = float(cdist(pts, pts).max())
    bound = 2.0 * math.sqrt(var * n / (n - 1))
    return VarianceStats(variance=var, diameter=diam, support_bound=bound, n=n)
