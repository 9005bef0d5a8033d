"""Low-side permutation test and the multi-delay statistic."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ecc import mixup_ecp
from .embedding import EmbeddingParams, TimeSeries, delay_vectors
from .errors import DimensionMismatch, SeriesTooShort, SizeMismatch
from .geometry import PointCloud
from .signals import SignalTrace, candidate_times, s_value, subsample_indices, window_pair

# Recorded with every permutation result so a run can be replayed exactly.
RNG_ALGORITHM = "philox4x64-10"


def permutation_rng(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for permutation ``index`` under ``seed``.

    The key is the pair ``(seed, index)``, so permutations can be drawn in
    any order or in parallel and still agree.
    """
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class PermutationResult:
    """Observed statistic, its permutation null and the low-side p-value."""

    s_obs: int
    null_samples: np.ndarray
    B: int
    p_value: float
    null_mean: float
    null_sd: float
    seed: int = 0
    rng: str = RNG_ALGORITHM

    def rejects(self, alpha: float = 0.05) -> bool:
        """Reject the same-regime null when ``p <= alpha``."""
        return self.p_value <= alpha

    def to_dict(self, include_null: bool = True) -> dict:
        out = {
            "s_obs": int(self.s_obs),
            "B": int(self.B),
            "p_value": float(self.p_value),
            "null_mean": float(self.null_mean),
            "null_sd": float(self.null_sd),
            "seed": int(self.seed),
            "rng": self.rng,
        }
        if include_null:
            out["null_samples"] = [int(v) for v in self.null_samples]
        return out


def _cloud(c) -> np.ndarray:
    return c.points if isinstance(c, PointCloud) else PointCloud(c).points


def perm_test(X, Y, B: int = 100, seed: int = 0) -> PermutationResult:
    """Permutation test of ``S(X, Y)`` against balanced re-splits of ``X u Y``.

    The ``2n`` pooled points are split uniformly at random into two groups
    of ``n``, ``B`` times. The p-value is the fraction of splits whose
    statistic is at most the observed one, so small values of ``S``
    (weak overlap between the windows) are evidence of a transition.

    Raises
    ------
    SizeMismatch
        If the clouds differ in size.
    DimensionMismatch
        If they differ in dimension.
    """
    xp, yp = _cloud(X), _cloud(Y)
    if xp.shape[0] != yp.shape[0]:
        raise SizeMismatch(f"X has {xp.shape[0]} points, Y has {yp.shape[0]}")
    if xp.shape[1] != yp.shape[1]:
        raise DimensionMismatch(f"X has dimension {xp.shape[1]}, Y has {yp.shape[1]}")
    if B < 1:
        raise ValueError("B must be positive")
    n = xp.shape[0]
    pooled = np.vstack([xp, yp])
    s_obs = mixup_ecp(xp, yp).s_stat
    null = np.empty(B, dtype=np.int64)
    for b in range(B):
        perm = permutation_rng(seed, b).permutation(2 * n)
        null[b] = mixup_ecp(pooled[perm[:n]], pooled[perm[n:]]).s_stat
    p = float(np.count_nonzero(null <= s_obs)) / B
    return PermutationResult(
        s_obs=int(s_obs), null_samples=null, B=B, p_value=p,
        null_mean=float(null.mean()), null_sd=float(null.std()), seed=int(seed),
    )


def perm_test_at(embedded, t: int, w: int, n: int | None = None, B: int = 100,
                 seed: int = 0) -> PermutationResult:
    """:func:`perm_test` on the window pair at ``t``, each window subsampled to ``n``."""
    pair = window_pair(embedded, t, w)
    sel = subsample_indices(w + 1, n)
    return perm_test(pair.X.points[sel], pair.Y.points[sel], B=B, seed=seed)


@dataclass(frozen=True)
class MultiDelayParams:
    """Delay set and window settings shared by all delay channels."""

    taus: tuple
    d: int = 3
    w: int = 20
    n: int | None = 20

    def __post_init__(self):
        taus = tuple(int(t) for t in self.taus)
        if not taus:
            raise ValueError("the delay set must be nonempty")
        if len(set(taus)) != len(taus) or any(t < 1 for t in taus):
            raise ValueError("delays must be distinct positive integers")
        object.__setattr__(self, "taus", tuple(sorted(taus)))
        EmbeddingParams(taus[0], self.d)


@dataclass(frozen=True)
class MultiDelayResult:
    """``S*`` at one time, the delay attaining it and every channel's value."""

    s_star: int
    tau_star: int
    per_tau: dict = field(default_factory=dict)


def _raw(series) -> np.ndarray:
    return series.values if isinstance(series, TimeSeries) else TimeSeries(series).values


def multi_delay_stat(series, t: int, params: MultiDelayParams) -> MultiDelayResult:
    """Largest single-delay statistic over the delay set at time ``t``.

    Ties keep the smallest delay.

    Raises
    ------
    SeriesTooShort
        If some delay leaves no full window pair at ``t``; the message names
        that delay.
    """
    x = _raw(series)
    per_tau = {}
    for tau in params.taus:
        m = x.size - (params.d - 1) * tau
        if t - 2 * params.w < 0 or t + params.w >= m:
            raise SeriesTooShort(f"delay tau={tau} leaves no window pair at t={t} (w={params.w})")
        emb = delay_vectors(x, tau, params.d)
        per_tau[tau] = s_value(emb[t - 2 * params.w: t - params.w + 1], emb[t: t + params.w + 1], params.n)
    tau_star = max(params.taus, key=lambda k: (per_tau[k], -k))
    return MultiDelayResult(s_star=per_tau[tau_star], tau_star=tau_star, per_tau=per_tau)


def signal_S_multi(series, params: MultiDelayParams, stride: int = 1, t_range=None):
    """``S*(t)`` over the times valid for every delay.

    Returns
    -------
    trace : SignalTrace
        Kind ``'S'`` holding ``S*``.
    taus : ndarray
        Delay attaining the maximum at each time.
    """
    x = _raw(series)
    m = x.size - (params.d - 1) * max(params.taus)
    times = candidate_times(m, params.w, stride, t_range)
    vals, taus = [], []
    for t in times:
        res = multi_delay_stat(x, int(t), params)
        vals.append(res.s_star)
        taus.append(res.tau_star)
    return SignalTrace("S", times, np.array(vals, dtype=np.int64)), np.array(taus)
