"""Onset-detection benchmark over year-keyed index data.

Every method reports an onset day of year inside the same search window;
the benchmark scores each by its mean absolute error against ground truth.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingParams, takens_embed
from .errors import DataError, EmptySearchWindow, NoAlarmWarning, TooFewPoints
from .inference import MultiDelayParams, signal_S_multi
from .io import OnsetDataset, YearSeries
from .signals import (HiguchiParams, combined_onset, cusum_baseline, signal_F, signal_G, signal_RM,
                      signal_S)

METHODS = ("RM", "CUSUM", "S-only", "combined", "combined multi-tau")


@dataclass(frozen=True)
class BenchSettings:
    """Detector settings shared by all years.

    ``search`` is a pair of days of year (inclusive). ``w_raw`` defaults to
    ``tau * w``.
    """

    search: tuple
    tau: int = 6
    d: int = 3
    w: int = 20
    n: int | None = 20
    w_raw: int | None = None
    taus: tuple = ()
    p_max: int | None = None
    rm_mode: str = "signed"
    per_coordinate_variance: bool = False
    cusum_k: float = 0.5
    cusum_h: float = 5.0

    @property
    def raw_window(self) -> int:
        return self.w_raw if self.w_raw is not None else self.tau * self.w


def _window_indices(ys: YearSeries, search) -> tuple:
    lo = ys.index_of(search[0])
    hi = int(np.searchsorted(ys.doy, search[1], side="right")) - 1
    if hi < lo:
        raise EmptySearchWindow(f"year {ys.year}: no samples between days {search[0]} and {search[1]}")
    return lo, hi


def detect_year(ys: YearSeries, settings: BenchSettings) -> dict:
    """Onset day of year for every method on one year."""
    s = settings
    if s.search is None:
        raise EmptySearchWindow(
            "onset data needs a search window; set [search] start and end (days of year)"
        )
    lo, hi = _window_indices(ys, s.search)
    x = ys.series()
    emb = takens_embed(x, EmbeddingParams(s.tau, s.d))
    rng_ = (lo, hi)
    hp = HiguchiParams(s.p_max) if s.p_max else None
    traces = {
        "S": signal_S(emb, s.w, 1, s.n, rng_),
        "G": signal_G(emb, s.w, 1, rng_, per_coordinate=s.per_coordinate_variance),
        "F": signal_F(x, s.raw_window, 1, hp, rng_),
        "RM": signal_RM(x, s.raw_window, 1, rng_),
    }
    combined = combined_onset(traces, rng_, rm_mode=s.rm_mode)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoAlarmWarning)
        cusum = cusum_baseline(x, rng_, k=s.cusum_k, h=s.cusum_h)
    picks = {
        "RM": combined.t_RM,
        "CUSUM": cusum.onset,
        "S-only": combined.t_S,
        "combined": combined.t_star,
    }
    if s.taus:
        multi, _ = signal_S_multi(x, MultiDelayParams(s.taus, s.d, s.w, s.n), 1, rng_)
        picks["combined multi-tau"] = combined_onset({**traces, "S": multi}, rng_, rm_mode=s.rm_mode).t_star
    return {m: float(ys.doy[i]) for m, i in picks.items()}


def loo_mean_errors(truth: dict) -> dict:
    """Error of predicting each year's onset as the mean of the other years."""
    if len(truth) < 2:
        raise TooFewPoints("leave-one-out needs at least two years of ground truth")
    years = sorted(truth)
    vals = np.array([truth[y] for y in years], dtype=float)
    total = vals.sum()
    preds = (total - vals) / (len(vals) - 1)
    return {y: float(abs(p - v)) for y, p, v in zip(years, preds, vals)}


def run_bench(data: OnsetDataset, settings: BenchSettings) -> dict:
    """Per-year detections and per-method MAE.

    Returns
    -------
    dict
        ``{"mae": {method: float}, "years": {year: {method: doy}},
        "truth": {year: doy}}``; the supervised leave-one-out mean predictor
        appears as method ``"LOO mean"``.
    """
    if data.truth is None:
        raise DataError("benchmarking needs ground-truth onsets (columns year, onset_doy)")
    loo = loo_mean_errors(data.truth)
    per_year = {y: detect_year(data.series[y], settings) for y in data.years}
    methods = [m for m in METHODS if all(m in per_year[y] for y in data.years)]
    mae = {m: float(np.mean([abs(per_year[y][m] - data.truth[y]) for y in data.years])) for m in methods}
    mae["LOO mean"] = float(np.mean(list(loo.values())))
    return {
        "mae": mae,
        "years": {str(y): per_year[y] for y in data.years},
        "truth": {str(y): float(data.truth[y]) for y in data.years},
    }


def step_onset_dataset(years: int = 20, onset_doy: int = 150, seed: int = 0,
                       first_year: int = 2000) -> OnsetDataset:
    """Synthetic onset data whose index steps up on a known day.

    Before the onset the index is a small 9-day oscillation with faint
    noise; from the onset day on it sits one unit higher with white noise
    of standard deviation 0.1. Truth is ``onset_doy`` every year.
    """
    doy = np.arange(1, 366, dtype=float)
    series, truth = {}, {}
    for k in range(years):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), k]))
        phase = rng.uniform(0, 2 * np.pi)
        pre = 0.1 * np.sin(2 * np.pi * doy / 9.0 + phase) + rng.normal(0, 0.01, doy.size)
        post = 1.0 + rng.normal(0, 0.1, doy.size)
        y = first_year + k
        series[y] = YearSeries(y, doy, np.where(doy < onset_doy, pre, post))
        truth[y] = float(onset_doy)
    return OnsetDataset(tuple(sorted(series)), series, truth)
