"""Sliding-window change signals and their fusion into one onset estimate.

Candidate times ``t`` are indices into the embedded cloud, which coincide
with raw-series indices because embedded point ``i`` starts at sample
``x[i]``. Topological (S) and variance (G) signals compare the embedded
windows ``[t - 2w, t - w]`` and ``[t, t + w]``; the fractal (F) and mean
(RM) signals compare the raw windows ``x[t - w_raw : t]`` and
``x[t : t + w_raw]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .ecc import centroid_variance, mixup_ecp, mixup_from_curves, window_ecc
from .embedding import TimeSeries
from .errors import (DegenerateSeries, EmptySearchWindow, NoAlarmWarning, OutOfRange,
                     SeriesTooShort, TooFewPoints)
from .geometry import PointCloud

SIGNAL_KINDS = ("S", "G", "F", "RM", "CUSUM")


@dataclass(frozen=True)
class WindowPair:
    """Pre- and post-windows of embedded points around candidate time ``t``."""

    t: int
    X: PointCloud
    Y: PointCloud
    w: int


@dataclass(frozen=True)
class SignalTrace:
    """A detection signal sampled at increasing candidate indices."""

    kind: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}")
        t = np.asarray(self.times, dtype=np.int64)
        v = np.asarray(self.values, dtype=np.int64 if self.kind == "S" else float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be equal-length 1-d arrays")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal values must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.times)

    def within(self, start: int, end: int) -> "SignalTrace":
        keep = (self.times >= start) & (self.times <= end)
        return SignalTrace(self.kind, self.times[keep], self.values[keep])

    def to_csv_rows(self) -> list:
        conv = int if self.kind == "S" else float
        return [(int(t), conv(v)) for t, v in zip(self.times, self.values)]


@dataclass(frozen=True)
class DetectionReport:
    """Per-signal onsets, their rounded mean, and the searched index range.

    Onsets of disabled signals are ``None`` and excluded from the mean.
    """

    t_S: int | None
    t_G: int | None
    t_F: int | None
    t_RM: int | None
    t_star: int
    search_window: tuple

    def to_dict(self) -> dict:
        return {
            "t_S": self.t_S,
            "t_G": self.t_G,
            "t_F": self.t_F,
            "t_RM": self.t_RM,
            "t_star": self.t_star,
            "search_window": [int(self.search_window[0]), int(self.search_window[1])],
        }


@dataclass(frozen=True)
class HiguchiParams:
    """Largest interval length used in the curve-length regression."""

    p_max: int = 8

    def __post_init__(self):
        if int(self.p_max) != self.p_max or self.p_max < 2:
            raise ValueError(f"p_max must be an integer >= 2, got {self.p_max}")

    @classmethod
    def for_window(cls, w_raw: int) -> "HiguchiParams":
        """Default scale: 8 for windows of 64 samples or more, else w_raw // 8."""
        return cls(8 if w_raw >= 64 else max(2, w_raw // 8))


@dataclass(frozen=True)
class CusumResult:
    """Outcome of a one-sided CUSUM scan over a search window.

    Attributes
    ----------
    onset : int
        First index reaching the threshold, or the index of the largest
        statistic when the threshold is never reached.
    alarm : bool
        Whether the threshold was reached.
    trace : SignalTrace
        The CUSUM statistic over the window.
    """

    onset: int
    alarm: bool
    trace: SignalTrace


def _cloud_points(embedded) -> np.ndarray:
    return embedded.points if isinstance(embedded, PointCloud) else PointCloud(embedded).points


def _raw(series) -> np.ndarray:
    return series.values if isinstance(series, TimeSeries) else TimeSeries(series).values


def window_pair(embedded, t: int, w: int) -> WindowPair:
    """Windows ``X = points[t-2w ..= t-w]`` and ``Y = points[t ..= t+w]``.

    Raises
    ------
    OutOfRange
        Unless ``t - 2w >= 0`` and ``t + w`` is a valid index.
    """
    pts = _cloud_points(embedded)
    if w < 1:
        raise OutOfRange(f"window size must be positive, got {w}")
    if t - 2 * w < 0 or t + w >= len(pts):
        raise OutOfRange(f"t={t} with w={w} needs indices {t - 2 * w}..{t + w} in 0..{len(pts) - 1}")
    return WindowPair(t=t, X=PointCloud(pts[t - 2 * w: t - w + 1]), Y=PointCloud(pts[t: t + w + 1]), w=w)


def subsample_indices(size: int, n: int | None) -> np.ndarray:
    """Evenly spaced indices selecting ``n`` of ``size`` items, in order."""
    if n is None or n >= size:
        return np.arange(size)
    if n < 1:
        raise ValueError("subsample size must be positive")
    return np.unique(np.rint(np.linspace(0, size - 1, n)).astype(np.int64))


def candidate_times(n_points: int, w: int, stride: int = 1, t_range=None) -> np.ndarray:
    """Valid window-pair indices on the stride grid, optionally clipped."""
    lo, hi = 2 * w, n_points - 1 - w
    if t_range is not None:
        lo, hi = max(lo, int(t_range[0])), min(hi, int(t_range[1]))
    if hi < lo:
        raise SeriesTooShort(f"{n_points} embedded points leave no valid window pair for w={w}")
    return np.arange(lo, hi + 1, stride)


def s_value(X, Y, subsample: int | None = None) -> int:
    """Detection statistic of one window pair after optional subsampling."""
    xp, yp = _cloud_points(X), _cloud_points(Y)
    xp = xp[subsample_indices(len(xp), subsample)]
    yp = yp[subsample_indices(len(yp), subsample)]
    return mixup_ecp(xp, yp).s_stat


def signal_S(embedded, w: int, stride: int = 1, subsample: int | None = None,
             t_range=None) -> SignalTrace:
    """Topological statistic ``S(t)`` along the embedded cloud.

    Each window is reduced to ``subsample`` evenly spaced points when given.
    """
    pts = _cloud_points(embedded)
    times = candidate_times(len(pts), w, stride, t_range)
    sel = subsample_indices(w + 1, subsample)
    # a window serves as the post-window at t and the pre-window at t + 2w
    # so its curve is computed once
    cache = {}

    def window_curve(start):
        if start not in cache:
            cache[start] = window_ecc(pts[start: start + w + 1][sel])
        return cache[start]

    vals = []
    for t in times:
        xs, ys = t - 2 * w, t
        xu, chi_x = window_curve(xs)
        yu, chi_y = window_curve(ys)
        vals.append(mixup_from_curves(xu, chi_x, yu, chi_y).s_stat)
        cache.pop(xs, None)
    return SignalTrace("S", times, np.array(vals, dtype=np.int64))


def signal_G(embedded, w: int, stride: int = 1, t_range=None,
             per_coordinate: bool = False) -> SignalTrace:
    """Variance change ``G(t) = |Var(Y_t) - Var(X_t)|``.

    ``Var`` is the mean squared distance to the centroid. With
    ``per_coordinate`` it is divided by the ambient dimension, i.e. the
    average variance of a single coordinate.
    """
    pts = _cloud_points(embedded)
    if w < 1:
        raise TooFewPoints("variance windows need at least two points")
    times = candidate_times(len(pts), w, stride, t_range)
    scale = 1.0 / pts.shape[1] if per_coordinate else 1.0
    vals = [scale * abs(centroid_variance(pts[t: t + w + 1]) - centroid_variance(pts[t - 2 * w: t - w + 1]))
            for t in times]
    return SignalTrace("G", times, np.array(vals))


def higuchi_curve(series, p_max: int) -> np.ndarray:
    """Mean normalised curve length ``L(p)`` for ``p = 1..p_max``."""
    x = _raw(series)
    n = x.size
    out = np.empty(p_max)
    for p in range(1, p_max + 1):
        lengths = []
        for m in range(1, p + 1):
            k = (n - m) // p
            if k < 1:
                continue
            seg = x[m - 1:: p][: k + 1]
            lengths.append(np.abs(np.diff(seg)).sum() * (n - 1) / (k * p) / p)
        out[p - 1] = np.mean(lengths)
    return out


def higuchi_fd(series, params: HiguchiParams | None = None) -> float:
    """Higuchi fractal dimension: minus the log-log slope of ``L(p)``.

    Raises
    ------
    SeriesTooShort
        If ``N < 4 * p_max``.
    DegenerateSeries
        If fewer than two curve lengths are positive (e.g. a constant series).

    Notes
    -----
    Scales at which the curve length is exactly zero, as happens at
    multiples of the period of a noise-free periodic series, are left out
    of the fit.
    """
    x = _raw(series)
    if params is None:
        params = HiguchiParams.for_window(x.size)
    if x.size < 4 * params.p_max:
        raise SeriesTooShort(f"need at least {4 * params.p_max} samples for p_max={params.p_max}")
    curve = higuchi_curve(x, params.p_max)
    keep = curve > 0
    if np.count_nonzero(keep) < 2:
        raise DegenerateSeries("curve length vanishes at all but at most one scale")
    logp = np.log(np.arange(1, params.p_max + 1))
    slope = np.polyfit(logp[keep], np.log(curve[keep]), 1)[0]
    return float(-slope)


def raw_times(n: int, w_raw: int, stride: int = 1, t_range=None) -> np.ndarray:
    """Indices ``t`` with full raw windows ``x[t-w_raw:t]`` and ``x[t:t+w_raw]``."""
    if w_raw < 1:
        raise SeriesTooShort("raw window must hold at least one sample")
    lo, hi = w_raw, n - w_raw
    if t_range is not None:
        lo, hi = max(lo, int(t_range[0])), min(hi, int(t_range[1]))
    if hi < lo:
        raise SeriesTooShort(f"series of length {n} leaves no raw window pair for w_raw={w_raw}")
    return np.arange(lo, hi + 1, stride)


def signal_F(series, w_raw: int, stride: int = 1, params: HiguchiParams | None = None,
             t_range=None) -> SignalTrace:
    """Fractal-dimension change ``|HFD(post) - HFD(pre)|`` on raw windows."""
    x = _raw(series)
    if params is None:
        params = HiguchiParams.for_window(w_raw)
    if w_raw < 4 * params.p_max:
        raise SeriesTooShort(f"raw window of {w_raw} samples is too short for p_max={params.p_max}")
    times = raw_times(x.size, w_raw, stride, t_range)
    cache = {}

    def hfd(start):
        if start not in cache:
            cache[start] = higuchi_fd(x[start: start + w_raw], params)
        return cache[start]

    vals = [abs(hfd(t) - hfd(t - w_raw)) for t in times]
    return SignalTrace("F", times, np.array(vals))


def signal_RM(series, w_raw: int, stride: int = 1, t_range=None) -> SignalTrace:
    """Signed rolling-mean change ``mean(post) - mean(pre)`` on raw windows."""
    x = _raw(series)
    times = raw_times(x.size, w_raw, stride, t_range)
    # every window mean is summed the same way, so equal windows cancel exactly
    means = sliding_window_view(x, w_raw).mean(axis=1)
    return SignalTrace("RM", times, means[times] - means[times - w_raw])


def _pick(trace: SignalTrace, start: int, end: int, mode: str) -> int:
    sub = trace.within(start, end)
    if len(sub) == 0:
        raise EmptySearchWindow(f"{trace.kind} trace has no samples in [{start}, {end}]")
    vals = sub.values
    if mode == "min":
        i = int(np.argmin(vals))
    elif mode == "absmax":
        i = int(np.argmax(np.abs(vals)))
    else:
        i = int(np.argmax(vals))
    return int(sub.times[i])


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def combined_onset(traces: dict, search_window, s_mode: str = "trough",
                   rm_mode: str = "signed") -> DetectionReport:
    """Fuse per-signal onsets inside ``search_window`` (inclusive) by averaging.

    ``S`` contributes its trough (or peak with ``s_mode='peak'``); ``G``,
    ``F`` and ``RM`` contribute their peaks (``RM`` by absolute value with
    ``rm_mode='abs'``). Ties go to the earliest index and the mean is
    rounded half up. Signals missing from ``traces`` are skipped.

    Raises
    ------
    EmptySearchWindow
        If the window is empty or a trace has no sample inside it.
    """
    start, end = int(search_window[0]), int(search_window[1])
    if end < start:
        raise EmptySearchWindow(f"search window [{start}, {end}] is empty")
    modes = {
        "S": "min" if s_mode == "trough" else "max",
        "G": "max",
        "F": "max",
        "RM": "absmax" if rm_mode == "abs" else "max",
    }
    picks = {k: _pick(traces[k], start, end, m) for k, m in modes.items() if traces.get(k) is not None}
    if not picks:
        raise EmptySearchWindow("no signal traces supplied")
    t_star = round_half_up(sum(picks.values()) / len(picks))
    return DetectionReport(
        t_S=picks.get("S"), t_G=picks.get("G"), t_F=picks.get("F"), t_RM=picks.get("RM"),
        t_star=t_star, search_window=(start, end),
    )


def cusum_baseline(series, search_window, k: float = 0.5, h: float = 5.0,
                   min_baseline: int = 10) -> CusumResult:
    """One-sided upward CUSUM over a search window.

    Values are standardised with the mean and standard deviation of the
    samples preceding the window (or of the window itself when fewer than
    ``min_baseline`` precede it). The statistic is
    ``C_t = max(0, C_{t-1} + z_t - k)`` started at the window start.
    """
    x = _raw(series)
    start, end = int(search_window[0]), min(int(search_window[1]), x.size - 1)
    if start < 0 or end < start:
        raise EmptySearchWindow(f"search window [{start}, {end}] is empty")
    ref = x[:start] if start >= min_baseline else x[start: end + 1]
    mu, sd = float(np.mean(ref)), float(np.std(ref))
    if sd == 0.0:
        sd = float(np.std(x[start: end + 1])) or 1.0
    z = (x[start: end + 1] - mu) / sd
    stat = np.empty(z.size)
    c = 0.0
    for i, zi in enumerate(z):
        c = max(0.0, c + zi - k)
        stat[i] = c
    times = np.arange(start, end + 1)
    hits = np.flatnonzero(stat >= h)
    trace = SignalTrace("CUSUM", times, stat)
    if hits.size:
        return CusumResult(onset=int(times[hits[0]]), alarm=True, trace=trace)
    warnings.warn("CUSUM never reached its threshold; reporting the maximum", NoAlarmWarning, stacklevel=2)
    return CusumResult(onset=int(times[int(np.argmax(stat))]), alarm=False, trace=trace)
