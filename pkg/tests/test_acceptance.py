"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a one-line verdict that the terminal summary prints
under "acceptance criteria".
"""

import math
import time

import numpy as np
import pytest

from conftest import CONFIG_DIR
from mixupecp.bench import run_bench
from mixupecp.cli import _bench_data, _bench_settings, _protocol, cmd_detect, run, synthesize
from mixupecp.config import convert_fields, load_config
from mixupecp.ecc import ecc, mixup_ecp, variance_stats
from mixupecp.embedding import EmbeddingParams, TimeSeries, takens_embed
from mixupecp.errors import NoConvergence
from mixupecp.geometry import alpha_filtration
from mixupecp.inference import MultiDelayParams, multi_delay_stat, perm_test_at
from mixupecp.oracle import GridSpec, cech_chi_curve, grid_chi_2d
from mixupecp.signals import higuchi_fd, s_value, signal_S, window_pair
from mixupecp.systems import (LogisticParams, LorenzParams, gen_logistic, gen_lorenz,
                              lorenz_fixed_points, lyapunov_logistic, noise_sweep, sweep_logistic)


def _radii(rng, pts, k):
    diam = float(np.max(np.linalg.norm(pts[:, None] - pts[None], axis=-1)))
    return np.sort(rng.uniform(0.0, diam, size=k))


def _random_pair_2d(rng):
    x = rng.uniform(size=(int(rng.integers(1, 9)), 2))
    y = rng.uniform(size=(int(rng.integers(1, 9)), 2))
    return x, y


def test_c01_alpha_matches_cech(criterion):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    mismatches = 0
    for i in range(200):
        dim = 2 if i % 2 == 0 else 3
        pts = rng.normal(size=(int(rng.integers(1, 11)), dim))
        radii = _radii(rng, pts, 20) if len(pts) > 1 else rng.uniform(0, 1, 20)
        got = ecc(alpha_filtration(pts))(radii)
        ref = cech_chi_curve(pts, radii)
        mismatches += int(np.count_nonzero(got != ref))
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    criterion(1, "oracle equivalence", ok, f"{mismatches} mismatches over 4000 evaluations in {elapsed:.1f} s")
    assert mismatches == 0
    assert elapsed < 60


def test_c02_intersection_theorem_on_grid(criterion):
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    mismatches = resampled = near_breakpoint = 0
    for _ in range(50):
        x, y = _random_pair_2d(rng)
        prof = mixup_ecp(x, y).profile
        done = 0
        while done < 5:
            r = float(rng.uniform(0.01, 0.6))
            box = GridSpec.around(np.vstack([x, y]), r)
            finest_cell = (box.hi[0] - box.lo[0]) / (box.resolution * 8)
            if np.min(np.abs(prof.breakpoints - r)) <= finest_cell:
                # the criterion only covers radii a grid cell clear of a breakpoint
                near_breakpoint += 1
                continue
            try:
                ref = grid_chi_2d([x, y], r, mode="intersection")
            except NoConvergence:
                # raster never settles on a thin lens; draw another radius
                resampled += 1
                continue
            mismatches += int(prof(r) != ref)
            done += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 120
    criterion(2, "intersection theorem", ok,
              f"{mismatches} mismatches over 250 radii, {resampled} unsettled and "
              f"{near_breakpoint} near-breakpoint radii redrawn, {elapsed:.1f} s")
    assert mismatches == 0
    assert elapsed < 120


def test_c03_dead_zone(criterion):
    rng = np.random.default_rng(303)
    violations = tested = 0
    for i in range(200):
        if i < 100:
            x, y = _random_pair_2d(rng)
        else:
            x = rng.normal(size=(int(rng.integers(1, 12)), 3))
            y = rng.normal(size=(int(rng.integers(1, 12)), 3)) + rng.normal(size=3)
        prof = mixup_ecp(x, y)
        half = prof.dmin / 2
        rs = np.concatenate([rng.uniform(0, half, 10), [np.nextafter(half, 0)]])
        rs = rs[rs < half]
        # the profile is constant between breakpoints, so checking every
        # breakpoint below dmin/2 covers the whole zone
        rs = np.concatenate([rs, prof.profile.breakpoints[prof.profile.breakpoints < half]])
        violations += int(np.count_nonzero(prof.profile(rs) != 0))
        tested += rs.size
    criterion(3, "dead zone", violations == 0, f"{violations} nonzero values at {tested} radii below dmin/2")
    assert violations == 0


def _disk(rng, n):
    r = np.sqrt(rng.uniform(size=n))
    a = rng.uniform(0, 2 * np.pi, size=n)
    return np.column_stack([r * np.cos(a), r * np.sin(a)])


def test_c04_same_attractor_limit(criterion):
    rng = np.random.default_rng(404)
    good = 0
    for _ in range(100):
        x, y = _disk(rng, 30), _disk(rng, 30)
        prof = mixup_ecp(x, y).profile
        bound = variance_stats(np.vstack([x, y])).support_bound
        rs = np.concatenate([[bound], prof.breakpoints[prof.breakpoints >= bound]])
        good += int(np.all(prof(rs) == 1))
    ok = good >= 95
    criterion(4, "same-attractor limit", ok, f"{good}/100 trials have delta-chi = 1 beyond the bound")
    assert ok


def test_c05_variance_bounds_support(criterion):
    rng = np.random.default_rng(505)
    violations, worst = 0, 0.0
    for i in range(1000):
        dim = 2 if i % 2 == 0 else 3
        pts = rng.normal(size=(int(rng.integers(2, 31)), dim))
        st = variance_stats(pts)
        if st.diameter > st.support_bound:
            violations += 1
            worst = max(worst, st.diameter / st.support_bound)
    criterion(5, "variance bounds the support", violations == 0,
              f"{violations}/1000 clouds exceed 2 sqrt(V n/(n-1)); worst ratio {worst:.3f}")
    assert violations == 0


def _trial_params(cfg_name):
    cfg = load_config(CONFIG_DIR / cfg_name)
    return cfg, convert_fields(LogisticParams, cfg.section("logistic"), "logistic")


def _logistic_trial(cfg, params, trial):
    x0 = float(np.random.default_rng(trial).uniform(0.1, 0.9))
    series = gen_logistic(LogisticParams(**{**params.__dict__, "x0": x0}), seed=trial)
    emb = takens_embed(series, EmbeddingParams(cfg.tau, cfg.d))
    return perm_test_at(emb, cfg.t, cfg.w, cfg.n, cfg.B, seed=trial)


def test_c06_permutation_level(criterion):
    cfg, params = _trial_params("logistic_level.cfg")
    assert params.lam == 3.5 and cfg.n == 20 and cfg.B == 100
    start = time.perf_counter()
    rejections = sum(_logistic_trial(cfg, params, k).rejects(0.05) for k in range(500))
    elapsed = time.perf_counter() - start
    rate = rejections / 500
    ok = rate <= 0.08 and elapsed < 600
    criterion(6, "permutation level", ok, f"rejection rate {rate:.3f} at alpha 0.05 over 500 trials, {elapsed:.0f} s")
    assert rate <= 0.08
    assert elapsed < 600


def test_c07_regime_discrimination(criterion):
    cfg, params = _trial_params("logistic_permtest.cfg")
    cross = [_logistic_trial(cfg, params, k) for k in range(100)]
    separated = sum(r.s_obs <= r.null_mean - 3 * r.null_sd and r.p_value < 0.01 for r in cross)
    cfg_s, params_s = _trial_params("logistic_same_regime.cfg")
    same = [_logistic_trial(cfg_s, params_s, k) for k in range(100)]
    calm = sum(r.p_value >= 0.5 for r in same)
    ok = separated >= 95 and calm >= 95
    ref = (f"reference: S_obs {np.mean([r.s_obs for r in cross]):.2f}, null "
           f"{np.mean([r.null_mean for r in cross]):.1f} +- {np.mean([r.null_sd for r in cross]):.1f}")
    criterion(7, "regime discrimination", ok,
              f"cross-regime separated {separated}/100, same-regime p >= 0.5 {calm}/100; {ref}")
    assert separated >= 95
    assert calm >= 95


def test_c08_lorenz_localization(criterion):
    cfg = load_config(CONFIG_DIR / "lorenz.cfg")
    hits, troughs = 0, []
    for seed in range(20):
        series, states = synthesize("lorenz", cfg, seed)
        trace = signal_S(states, cfg.w, cfg.stride, cfg.n)
        t_min = float(series.timestamps[trace.times[int(np.argmin(trace.values))]])
        troughs.append(t_min)
        hits += abs(t_min - 50.0) <= 5.0
    # equilibrium check on a run that stays at rho = 20
    steady = gen_lorenz(LorenzParams(rho_pre=20, rho_post=20, switch_time=50, duration=200, burn_in=10))
    ref = lorenz_fixed_points(20.0)
    err = float(np.min(np.abs(ref - steady.states[-1]).max(axis=1)))
    ok = hits >= 18 and err <= 1e-3
    criterion(8, "Lorenz localization", ok,
              f"trough within 5 of t=50 in {hits}/20 runs (median {np.median(troughs):.2f}); "
              f"fixed-point error {err:.1e}")
    assert hits >= 18
    assert err <= 1e-3
    assert np.allclose(np.abs(ref[0]), (7.118, 7.118, 19.0), atol=1e-3)


def test_c09_lyapunov_agreement(criterion):
    cfg = load_config(CONFIG_DIR / "logistic_sweep.cfg")
    raw = cfg.section("sweep")
    lo, hi, step = float(raw["lam_lo"]), float(raw["lam_hi"]), float(raw["step"])
    grid = np.round(np.arange(lo, hi + step / 2, step), 10)
    rows = sweep_logistic(grid, _protocol(cfg), trials=int(raw["trials"]), seed=0,
                          lyapunov_iter=int(raw["lyapunov_iter"]))
    r = float(np.corrcoef([row.s for row in rows], [row.lambda1 for row in rows])[0, 1])
    l4 = lyapunov_logistic(4.0, n_iter=1_000_000).lambda1
    ok = r >= 0.5 and abs(l4 - math.log(2)) <= 0.01
    criterion(9, "Lyapunov agreement", ok, f"Pearson r = {r:.3f} over {len(rows)} grid values; lambda1(4) = {l4:.4f}")
    assert r >= 0.5
    assert abs(l4 - math.log(2)) <= 0.01


def test_c10_noise_robustness(criterion):
    cfg = load_config(CONFIG_DIR / "noise_sweep.cfg")
    raw = cfg.section("noise")
    sigmas = [float(v) for v in raw["sigmas"].split(",")]
    rows = {round(r.sigma, 4): r for r in noise_sweep(
        sigmas, trials=int(raw["trials"]), protocol=_protocol(cfg), seed=0,
        lam_pre=float(raw["lam_pre"]), lam_post=float(raw["lam_post"]))}
    targets = {0.0: 4.0, 0.05: 10.3, 0.10: 19.3, 0.15: 24.0}
    s_means = [rows[s].mean_s for s in targets]
    within = all(abs(rows[s].mean_s - t) <= 0.3 * t for s, t in targets.items())
    monotone = all(a <= b for a, b in zip(s_means, s_means[1:]))
    g_band = all(0.03 <= rows[s].mean_g <= 0.055 for s in rows if s <= 0.30)
    g_rise = rows[0.5].mean_g > rows[0.3].mean_g
    ok = within and monotone and g_band and g_rise
    detail = ("S " + " / ".join(f"{v:.2f}" for v in s_means)
              + "; G " + " / ".join(f"{rows[s].mean_g:.4f}" for s in sorted(rows)))
    criterion(10, "noise robustness", ok, detail)
    assert within
    assert monotone
    assert g_band
    assert g_rise


def test_c11_higuchi(criterion):
    line = higuchi_fd(np.linspace(0.0, 5.0, 2000))
    rng = np.random.default_rng(1111)
    noise = float(np.mean([higuchi_fd(rng.normal(size=2000)) for _ in range(50)]))
    ok = abs(line - 1.0) <= 0.02 and abs(noise - 2.0) <= 0.1
    criterion(11, "Higuchi dimension", ok, f"line {line:.4f}, white noise mean {noise:.4f}")
    assert abs(line - 1.0) <= 0.02
    assert abs(noise - 2.0) <= 0.1


def _multi_delay_cases():
    rng = np.random.default_rng(1212)
    yield gen_logistic(LogisticParams(lam=3.6, lam_post=3.9, t0=150, n_samples=300)).values, (1, 2, 3), 3, 15
    yield rng.normal(size=300), (1, 3, 6), 2, 12
    yield np.sin(np.arange(300) * 0.3) + 0.05 * rng.normal(size=300), (2, 5, 8), 3, 10
    lz = gen_lorenz(LorenzParams(duration=30, switch_time=15, sample_every=5))
    yield lz.states[:, 0], (1, 4, 7), 3, 20


def test_c12_power_dominance(criterion):
    evaluations = violations = 0
    for x, taus, d, w in _multi_delay_cases():
        params = MultiDelayParams(taus, d, w, 20)
        m = x.size - (d - 1) * max(taus)
        for t in range(2 * w, m - w, 7):
            res = multi_delay_stat(x, t, params)
            for tau in taus:
                # each channel rebuilt from its own embedding
                pair = window_pair(takens_embed(x, EmbeddingParams(tau, d)), t, w)
                single = s_value(pair.X, pair.Y, 20)
                evaluations += 1
                violations += int(not (res.s_star >= single and res.per_tau[tau] == single))
    criterion(12, "power dominance", violations == 0, f"{violations} violations over {evaluations} delay channels")
    assert violations == 0


def test_c13_synthetic_onset_bench(criterion, tmp_path):
    cfg = load_config(CONFIG_DIR / "bench_synthetic.cfg")
    res = run_bench(_bench_data(cfg, 0), _bench_settings(cfg))
    rm, comb = res["mae"]["RM"], res["mae"]["combined"]
    # the same table from user-supplied CSV files through the command line
    assert run(["synth", "onset", "--config", str(CONFIG_DIR / "bench_synthetic.cfg"), "--out", str(tmp_path)]) == 0
    truth = tmp_path / "truth.csv"
    truth.write_text("year,onset_doy\n" + "".join(f"{y},150\n" for y in range(2000, 2020)))
    user_cfg = tmp_path / "user.cfg"
    text = (CONFIG_DIR / "bench_synthetic.cfg").read_text().replace("dataset = synthetic-step", "")
    user_cfg.write_text(f"[input]\npath = onset.csv\ntruth = truth.csv\n{text}")
    code = run(["bench", "--config", str(user_cfg), "--out", str(tmp_path / "out")])
    import json
    from_csv = json.loads((tmp_path / "out" / "bench.json").read_text())["mae"]
    ok = rm == 0 and comb <= 2 and code == 0 and from_csv == res["mae"]
    criterion(13, "synthetic onset benchmark", ok,
              f"RM MAE {rm:.2f}, combined MAE {comb:.2f}, multi-delay {res['mae']['combined multi-tau']:.2f}; "
              f"CSV route {'matches' if from_csv == res['mae'] else 'differs'}")
    assert rm == 0
    assert comb <= 2
    assert code == 0 and from_csv == res["mae"]


def _outputs(folder):
    return {p.name: p.read_bytes() for p in sorted(folder.rglob("*")) if p.is_file()}


def test_c14_determinism(criterion, tmp_path, capsys):
    cmds = [
        ["detect", "--config", str(CONFIG_DIR / "eeg.cfg")],
        ["detect", "--config", str(CONFIG_DIR / "lorenz.cfg"), "--stride", "25"],
        ["permtest", "--config", str(CONFIG_DIR / "logistic_permtest.cfg"), "--dump-null"],
        ["bench", "--config", str(CONFIG_DIR / "bench_synthetic.cfg")],
        ["sweep", "--config", str(CONFIG_DIR / "logistic_sweep.cfg")],
        ["noise-sweep", "--config", str(CONFIG_DIR / "noise_sweep.cfg")],
        ["synth", "lorenz"], ["synth", "logistic"], ["synth", "eeg"], ["synth", "onset"],
        ["verify"],
    ]
    differing = []
    for cmd in cmds:
        runs = []
        for rep in range(2):
            out = tmp_path / f"{cmd[0]}_{len(differing)}_{rep}_{cmd[-1].replace('/', '_')[-20:]}"
            code = run(cmd + ["--seed", "3", "--out", str(out)])
            stdout = capsys.readouterr().out
            assert code == 0, cmd
            runs.append((stdout, _outputs(out)))
        if runs[0] != runs[1]:
            differing.append(" ".join(cmd[:2]))
    ok = not differing
    criterion(14, "determinism", ok, f"{len(cmds) - len(differing)}/{len(cmds)} commands byte-identical on re-run")
    assert not differing


def test_c15_performance(criterion, tmp_path):
    rng = np.random.default_rng(1515)
    day = np.arange(365)
    series = TimeSeries(np.where(day < 150, 0.0, 1.0) + rng.normal(0, 0.3, 365))
    csv = tmp_path / "year.csv"
    csv.write_text("t,value\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(series.values.tolist())))
    cfg_file = tmp_path / "perf.cfg"
    cfg_file.write_text(f"[input]\npath = {csv}\n[embedding]\ntau = 6\nd = 3\n[windows]\nw = 20\nn = 20\nstride = 1\n")
    cfg = load_config(cfg_file)
    start = time.perf_counter()
    cmd_detect(cfg, 0, tmp_path / "out")
    t_detect = time.perf_counter() - start
    x = rng.normal(size=(20, 3))
    y = rng.normal(size=(20, 3)) + 0.5
    from mixupecp.inference import perm_test
    start = time.perf_counter()
    perm_test(x, y, B=100, seed=0)
    t_perm = time.perf_counter() - start
    ok = t_detect < 5 and t_perm < 2
    criterion(15, "performance", ok, f"detect on 365 samples {t_detect:.2f} s, perm_test B=100 {t_perm:.2f} s")
    assert t_detect < 5
    assert t_perm < 2
