import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixupecp.config import convert_fields, load_config
from mixupecp.ecc import mixup_ecp
from mixupecp.embedding import EmbeddingParams, takens_embed
from mixupecp.errors import DimensionMismatch, SeriesTooShort, SizeMismatch
from mixupecp.inference import (MultiDelayParams, multi_delay_stat, perm_test, perm_test_at,
                                permutation_rng, signal_S_multi)
from mixupecp.signals import s_value, signal_S
from mixupecp.systems import LogisticParams, gen_logistic

from conftest import CONFIG_DIR


def _clouds(seed, n=12, dim=2, shift=0.0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, dim)), rng.normal(size=(n, dim)) + shift


# -- permutation test ---------------------------------------------------------


def test_rng_streams_do_not_depend_on_draw_order():
    forward = [permutation_rng(7, i).permutation(10) for i in range(5)]
    backward = [permutation_rng(7, i).permutation(10) for i in reversed(range(5))][::-1]
    assert all(np.array_equal(a, b) for a, b in zip(forward, backward))
    assert not np.array_equal(permutation_rng(7, 0).permutation(50), permutation_rng(8, 0).permutation(50))


def test_same_seed_same_null():
    x, y = _clouds(0)
    a, b = perm_test(x, y, B=30, seed=5), perm_test(x, y, B=30, seed=5)
    assert np.array_equal(a.null_samples, b.null_samples)
    assert a.p_value == b.p_value
    assert not np.array_equal(a.null_samples, perm_test(x, y, B=30, seed=6).null_samples)


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.integers(1, 40))
def test_p_value_counts_null_at_or_below_observed(seed, B):
    x, y = _clouds(seed, n=8)
    res = perm_test(x, y, B=B, seed=seed)
    assert res.null_samples.shape == (B,)
    assert res.p_value * B == pytest.approx(np.count_nonzero(res.null_samples <= res.s_obs))
    assert 0 <= res.p_value <= 1
    assert res.null_mean == pytest.approx(res.null_samples.mean())


def test_null_is_built_from_balanced_resplits():
    x, y = _clouds(3, n=6)
    pooled = np.vstack([x, y])
    res = perm_test(x, y, B=10, seed=2)
    for b in range(10):
        perm = permutation_rng(2, b).permutation(12)
        assert res.null_samples[b] == mixup_ecp(pooled[perm[:6]], pooled[perm[6:]]).s_stat


def test_separated_clouds_reject():
    # far apart windows barely overlap, so S is small against the pooled null
    x, y = _clouds(1, n=20, shift=6.0)
    res = perm_test(x, y, B=50, seed=0)
    assert res.rejects(0.05)
    assert res.s_obs < res.null_mean


def test_rejection_rule_includes_the_boundary():
    x, y = _clouds(1, n=20)
    res = perm_test(x, y, B=50, seed=0)
    assert 0 < res.p_value < 1
    assert res.rejects(res.p_value)
    assert not res.rejects(np.nextafter(res.p_value, 0))


@pytest.mark.parametrize("x, y, err", [
    (np.zeros((5, 2)), np.ones((6, 2)), SizeMismatch),
    (np.zeros((5, 2)), np.ones((5, 3)), DimensionMismatch),
])
def test_perm_test_rejects_mismatched_clouds(x, y, err):
    with pytest.raises(err):
        perm_test(x, y)


def test_perm_test_needs_a_null_sample():
    x, y = _clouds(0)
    with pytest.raises(ValueError):
        perm_test(x, y, B=0)


def test_result_serialises():
    x, y = _clouds(0, n=6)
    res = perm_test(x, y, B=5, seed=1)
    d = res.to_dict()
    assert d["rng"] == res.rng and d["seed"] == 1 and len(d["null_samples"]) == 5
    assert "null_samples" not in res.to_dict(include_null=False)


def test_perm_test_at_uses_the_window_pair():
    x = np.sin(np.arange(200) * 0.37) + 0.1 * np.random.default_rng(0).normal(size=200)
    emb = takens_embed(x, EmbeddingParams(2, 2))
    res = perm_test_at(emb, t=80, w=20, n=10, B=5, seed=0)
    pts = emb.points
    sel = np.round(np.linspace(0, 20, 10)).astype(int)
    direct = perm_test(pts[40:61][sel], pts[80:101][sel], B=5, seed=0)
    assert res.s_obs == direct.s_obs
    assert np.array_equal(res.null_samples, direct.null_samples)


def _power(cfg, params, n, trials):
    hits = 0
    for k in range(trials):
        x0 = float(np.random.default_rng(k).uniform(0.1, 0.9))
        series = gen_logistic(LogisticParams(**{**params.__dict__, "x0": x0}), seed=k)
        emb = takens_embed(series, EmbeddingParams(cfg.tau, cfg.d))
        hits += perm_test_at(emb, cfg.t, cfg.w, n, cfg.B, seed=k).rejects(0.05)
    return hits / trials


@pytest.mark.slow
def test_power_grows_with_sample_size():
    cfg = load_config(CONFIG_DIR / "logistic_permtest.cfg")
    params = convert_fields(LogisticParams, cfg.section("logistic"), "logistic")
    small, large = _power(cfg, params, 15, 200), _power(cfg, params, 30, 200)
    assert large >= small


# -- multi-delay --------------------------------------------------------------


def test_multi_delay_params_validation():
    assert MultiDelayParams((9, 3, 6)).taus == (3, 6, 9)
    for bad in [(), (3, 3), (0, 2)]:
        with pytest.raises(ValueError):
            MultiDelayParams(bad)


def _noisy_sine(n=400, seed=0):
    rng = np.random.default_rng(seed)
    return np.sin(2 * np.pi * np.arange(n) / 23.7) + 0.2 * rng.normal(size=n)


def test_single_delay_matches_plain_statistic():
    x = _noisy_sine()
    params = MultiDelayParams((6,), d=3, w=20, n=20)
    emb = takens_embed(x, EmbeddingParams(6, 3)).points
    for t in (40, 100, 250):
        res = multi_delay_stat(x, t, params)
        assert res.tau_star == 6
        assert res.s_star == s_value(emb[t - 40: t - 19], emb[t: t + 21], 20)
    trace, taus = signal_S_multi(x, params, stride=10)
    plain = signal_S(emb, 20, stride=10, subsample=20)
    assert np.array_equal(trace.times, plain.times)
    assert np.array_equal(trace.values, plain.values)
    assert set(taus.tolist()) == {6}


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_multi_delay_is_the_channel_maximum(seed):
    x = _noisy_sine(300, seed)
    res = multi_delay_stat(x, 120, MultiDelayParams((1, 4, 7), d=2, w=15, n=12))
    assert res.s_star == max(res.per_tau.values())
    assert res.per_tau[res.tau_star] == res.s_star
    assert res.tau_star == min(k for k, v in res.per_tau.items() if v == res.s_star)


def test_too_short_names_the_delay():
    x = _noisy_sine(120)
    with pytest.raises(SeriesTooShort, match="tau=30"):
        multi_delay_stat(x, 60, MultiDelayParams((1, 30), d=3, w=20, n=None))


def test_multi_trace_covers_times_valid_for_every_delay():
    x = _noisy_sine(300)
    trace, _ = signal_S_multi(x, MultiDelayParams((2, 8), d=3, w=20, n=10), stride=5)
    assert trace.times.min() >= 40
    assert trace.times.max() + 20 < 300 - 2 * 8
