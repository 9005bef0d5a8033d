"""Delay-coordinate embedding and selection of its delay and dimension."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateSeries, SelectionWarning, SeriesTooShort
from .geometry import PointCloud

# False nearest neighbour thresholds (relative distance growth, and growth
# relative to the attractor size) and the convergence fraction.
FNN_RTOL = 10.0
FNN_ATOL = 2.0
FNN_FRACTION = 0.02

# Shuffled copies used to estimate the mutual information of an
# independent sequence.
MI_SURROGATES = 8
MI_SURROGATE_SEED = 20240601

# Sub-bin offsets per axis averaged in the mutual information histogram.
MI_SHIFTS = 6


@dataclass(frozen=True)
class TimeSeries:
    """Scalar observations with optional strictly increasing time labels."""

    values: np.ndarray
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size < 2:
            raise SeriesTooShort("a time series needs at least two values")
        if not np.all(np.isfinite(v)):
            raise DegenerateSeries("time series values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.timestamps is not None:
            t = np.array(self.timestamps, dtype=float).reshape(-1)
            if t.shape != v.shape:
                raise ValueError("timestamps and values differ in length")
            if np.any(np.diff(t) <= 0):
                raise ValueError("timestamps must be strictly increasing")
            t.setflags(write=False)
            object.__setattr__(self, "timestamps", t)

    @property
    def N(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.N

    def slice(self, start: int, stop: int) -> "TimeSeries":
        ts = None if self.timestamps is None else self.timestamps[start:stop]
        return TimeSeries(self.values[start:stop], ts)


@dataclass(frozen=True)
class EmbeddingParams:
    """Delay ``tau`` (in samples) and embedding dimension ``d``."""

    tau: int
    d: int

    def __post_init__(self):
        if int(self.tau) != self.tau or self.tau < 1:
            raise ValueError(f"tau must be a positive integer, got {self.tau}")
        if self.d not in (2, 3):
            raise ValueError(f"embedding dimension must be 2 or 3, got {self.d}")

    @property
    def span(self) -> int:
        """Samples covered by one embedded point beyond its first."""
        return (self.d - 1) * self.tau


def _values(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    return TimeSeries(series).values


def delay_vectors(x: np.ndarray, tau: int, d: int) -> np.ndarray:
    """Rows ``(x[i], x[i + tau], ..., x[i + (d - 1) tau])``; no dimension cap."""
    m = x.size - (d - 1) * tau
    if m < 1:
        raise SeriesTooShort(f"{x.size} samples cannot hold one point at tau={tau}, d={d}")
    return np.stack([x[j * tau: j * tau + m] for j in range(d)], axis=1)


def takens_embed(series, params: EmbeddingParams) -> PointCloud:
    """Delay-coordinate embedding of a scalar series.

    Returns ``N - (d - 1) * tau`` points, point ``i`` being
    ``(x[i], x[i + tau], ..., x[i + (d - 1) * tau])``.

    Raises
    ------
    SeriesTooShort
        If ``N <= (d - 1) * tau``.
    """
    x = _values(series)
    if x.size <= params.span:
        raise SeriesTooShort(f"series of length {x.size} is too short for tau={params.tau}, d={params.d}")
    return PointCloud(delay_vectors(x, params.tau, params.d))


def _bin_layout(x: np.ndarray) -> tuple:
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        raise DegenerateSeries("constant series has no mutual information structure")
    bins = math.ceil(math.sqrt(x.size))
    return lo, (hi - lo) / bins, bins


def _shifted_bins(v: np.ndarray, lo: float, width: float, bins: int) -> list:
    # bin index of every value on each offset grid; offsets reach into one
    # extra bin so every grid still covers [lo, hi]
    return [np.minimum(np.floor((v - lo) / width + j / MI_SHIFTS).astype(np.int64), bins)
            for j in range(MI_SHIFTS)]


def _shifted_histogram_mi(ia: list, ib: list, bins: int) -> float:
    side = bins + 1
    total = 0.0
    for a in ia:
        for b in ib:
            p = np.bincount(a * side + b, minlength=side * side).reshape(side, side) / a.size
            outer = np.outer(p.sum(axis=1), p.sum(axis=0))
            nz = p > 0
            total += float((p[nz] * np.log(p[nz] / outer[nz])).sum())
    return total / MI_SHIFTS ** 2


def mutual_information_curve(series, tau_max: int) -> np.ndarray:
    """Histogram mutual information ``I(x_t; x_{t+tau})`` for tau = 1..tau_max.

    Each axis uses ``ceil(sqrt(N))`` equal-width bins spanning the series
    range. The plug-in estimate is averaged over ``MI_SHIFTS`` sub-bin
    offsets of the grid on each axis independently (an averaged shifted
    histogram), which removes the ripple a single fixed grid puts on the
    curve. Entry ``k`` of the result corresponds to delay ``k + 1``.
    """
    x = _values(series)
    lo, width, bins = _bin_layout(x)
    idx = _shifted_bins(x, lo, width, bins)
    n = x.size
    return np.array([
        _shifted_histogram_mi([i[: n - t] for i in idx], [i[t:] for i in idx], bins)
        for t in range(1, tau_max + 1)
    ])


def _surrogate_level(x: np.ndarray) -> tuple:
    lo, width, bins = _bin_layout(x)
    rng = np.random.default_rng(MI_SURROGATE_SEED)
    vals = []
    for _ in range(MI_SURROGATES):
        idx = _shifted_bins(rng.permutation(x), lo, width, bins)
        vals.append(_shifted_histogram_mi([i[:-1] for i in idx], [i[1:] for i in idx], bins))
    return float(np.mean(vals)), float(np.std(vals))


def select_delay_mi(series, tau_max: int = 20) -> int:
    """Delay at the first local minimum of the mutual information.

    A sequence whose lag-one mutual information is indistinguishable from
    that of shuffled copies carries no serial structure and gets delay 1.
    When no interior minimum exists below ``tau_max``, ``tau_max`` is
    returned with a :class:`SelectionWarning`.

    Raises
    ------
    SeriesTooShort
        If ``N < 4 * tau_max``.
    DegenerateSeries
        For a constant series.
    """
    x = _values(series)
    if tau_max < 1:
        raise ValueError("tau_max must be positive")
    if x.size < 4 * tau_max:
        raise SeriesTooShort(f"need at least {4 * tau_max} samples for tau_max={tau_max}, got {x.size}")
    mi = mutual_information_curve(x, tau_max)
    mean0, sd0 = _surrogate_level(x)
    if mi[0] <= mean0 + 3.0 * sd0:
        warnings.warn("no serial dependence detected; using delay 1", SelectionWarning, stacklevel=2)
        return 1
    for k in range(1, tau_max - 1):
        if mi[k] < mi[k - 1] and mi[k] <= mi[k + 1]:
            return k + 1
    warnings.warn(f"no mutual information minimum below tau_max={tau_max}", SelectionWarning, stacklevel=2)
    return tau_max


def fnn_fraction(series, tau: int, d: int, rtol: float = FNN_RTOL, atol: float = FNN_ATOL) -> float:
    """Fraction of nearest neighbours in dimension ``d`` that are false.

    A neighbour is false when adding coordinate ``d + 1`` stretches the pair
    by more than ``rtol`` times their distance, or makes the pair farther
    apart than ``atol`` standard deviations of the series.
    """
    x = _values(series)
    m = x.size - d * tau
    if m < 2:
        raise SeriesTooShort(f"series too short for FNN at tau={tau}, d={d}")
    emb = delay_vectors(x[: m + (d - 1) * tau], tau, d)
    extra = x[d * tau: d * tau + m]
    dist, idx = cKDTree(emb).query(emb, k=2)
    self_first = idx[:, 0] == np.arange(m)
    nbr = np.where(self_first, idx[:, 1], idx[:, 0])
    rd = np.where(self_first, dist[:, 1], dist[:, 0])
    gap = np.abs(extra - extra[nbr])
    with np.errstate(divide="ignore", invalid="ignore"):
        stretch = np.where(rd > 0, gap / rd, np.where(gap > 0, np.inf, 0.0))
    spread = float(np.std(x))
    if spread == 0.0:
        raise DegenerateSeries("constant series")
    grown = np.sqrt(rd**2 + gap**2) / spread
    return float(np.mean((stretch > rtol) | (grown > atol)))


def select_dim_fnn(series, tau: int, d_max: int = 3) -> int:
    """Smallest dimension whose false-neighbour fraction is below 2 percent.

    Returns ``d_max`` with a :class:`SelectionWarning` when no dimension up
    to ``d_max`` qualifies.

    Raises
    ------
    SeriesTooShort
        If ``N < d_max * tau + 10``.
    """
    x = _values(series)
    if x.size < d_max * tau + 10:
        raise SeriesTooShort(f"need at least {d_max * tau + 10} samples, got {x.size}")
    for d in range(1, d_max + 1):
        if fnn_fraction(x, tau, d) < FNN_FRACTION:
            return d
    warnings.warn(f"false neighbours persist up to d_max={d_max}", SelectionWarning, stacklevel=2)
    return d_max
