"""Command line interface.

Every command prints a canonical JSON report on stdout and, where it
produces traces or tables, writes them as CSV under the output folder.
Exit status is 0 on success, 1 for usage errors and 2 for data errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchSettings, detect_year, run_bench, step_onset_dataset
from .config import ConfigError, RunConfig, convert_fields, load_config
from .embedding import (EmbeddingParams, TimeSeries, fnn_fraction, mutual_information_curve,
                        select_delay_mi, select_dim_fnn, takens_embed)
from .errors import DataError, EmptySearchWindow, MixupError, UsageError
from .geometry import PointCloud
from .inference import MultiDelayParams, perm_test_at, signal_S_multi
from .io import (OnsetDataset, csv_text, dataset_rows, ingest_csv, json_text, load_dataset,
                 series_rows, write_csv, write_json)
from .signals import HiguchiParams, combined_onset, signal_F, signal_G, signal_RM, signal_S
from .systems import (EEGParams, LogisticParams, LorenzParams, TransitionProtocol, gen_eeg,
                      gen_logistic, gen_lorenz, noise_sweep, seeded_lorenz, sweep_logistic)
from .verify import run_checks

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- inputs


def _lorenz_params(cfg: RunConfig) -> LorenzParams:
    return convert_fields(LorenzParams, cfg.section("lorenz"), "lorenz")


def _logistic_params(cfg: RunConfig) -> LogisticParams:
    return convert_fields(LogisticParams, cfg.section("logistic"), "logistic")


def _eeg_params(cfg: RunConfig) -> EEGParams:
    raw = cfg.section("eeg")
    base = EEGParams()
    span = (float(raw.pop("seizure_start", base.seizure_span[0])),
            float(raw.pop("seizure_end", base.seizure_span[1])))
    return dataclasses.replace(convert_fields(EEGParams, raw, "eeg"), seizure_span=span)


def synthesize(kind: str, cfg: RunConfig, seed: int):
    """``(series, native_cloud_or_None)`` for a synthetic input."""
    if kind == "lorenz":
        traj = gen_lorenz(seeded_lorenz(seed, _lorenz_params(cfg)))
        return traj.x, traj.states
    if kind == "logistic":
        return gen_logistic(_logistic_params(cfg), seed=seed), None
    if kind == "eeg":
        return gen_eeg(_eeg_params(cfg), seed=seed), None
    raise ConfigError(f"unknown generator {kind!r}")


def load_input(cfg: RunConfig, seed: int):
    """Series (or onset dataset) named by the configuration."""
    if cfg.synth is not None:
        return synthesize(cfg.synth, cfg, seed)
    if cfg.input is None:
        raise ConfigError("no input: set [input] path or [input] synth, or pass --input")
    data = ingest_csv(cfg.input)
    if isinstance(data, OnsetDataset):
        if cfg.truth is not None:
            data = load_dataset(cfg.input, cfg.truth)
        return data, None
    if not isinstance(data, TimeSeries):
        raise DataError(f"{cfg.input} holds ground truth, not a series")
    return data, None


def resolve_embedding(series: TimeSeries, cfg: RunConfig) -> tuple:
    """``(tau, d)`` with ``auto`` entries chosen by mutual information and FNN."""
    tau = cfg.tau
    if tau == "auto":
        tau = select_delay_mi(series, min(cfg.tau_max, max(1, series.N // 4)))
    d = cfg.d
    if d == "auto":
        d = min(max(select_dim_fnn(series, tau, cfg.d_max), 2), 3)
    return int(tau), int(d)


def _cloud(series, native, cfg: RunConfig):
    if cfg.native:
        if native is None:
            raise ConfigError("native = true needs a generator with a state trajectory (lorenz)")
        return PointCloud(native), 1, native.shape[1]
    tau, d = resolve_embedding(series, cfg)
    return takens_embed(series, EmbeddingParams(tau, d)), tau, d


# -------------------------------------------------------------- commands


def _trace_rows(trace, series):
    ts = series.timestamps
    return [(int(t), float(ts[t]) if ts is not None else int(t), v)
            for t, v in zip(trace.times.tolist(), trace.values.tolist())]


def cmd_detect(cfg: RunConfig, seed: int, out: Path) -> dict:
    """Four signals, the combined onset and trace CSVs."""
    series, native = load_input(cfg, seed)
    if isinstance(series, OnsetDataset):
        return _detect_dataset(series, cfg, out)
    cloud, tau, d = _cloud(series, native, cfg)
    w_raw = cfg.w_raw or tau * cfg.w
    hp = HiguchiParams(cfg.p_max) if cfg.p_max else None
    traces, tau_trace = {}, None
    if "S" in cfg.signals:
        if cfg.taus and not cfg.native:
            traces["S"], tau_trace = signal_S_multi(series, MultiDelayParams(cfg.taus, d, cfg.w, cfg.n),
                                                    cfg.stride)
        else:
            traces["S"] = signal_S(cloud, cfg.w, cfg.stride, cfg.n)
    if "G" in cfg.signals:
        traces["G"] = signal_G(cloud, cfg.w, cfg.stride, per_coordinate=cfg.per_coordinate_variance)
    if "F" in cfg.signals:
        traces["F"] = signal_F(series, w_raw, cfg.stride, hp)
    if "RM" in cfg.signals:
        traces["RM"] = signal_RM(series, w_raw, cfg.stride)
    window = cfg.search_window or (0, series.N - 1)
    report = combined_onset(traces, window, s_mode=cfg.s_mode, rm_mode=cfg.rm_mode)
    for kind, trace in traces.items():
        write_csv(out / f"trace_{kind}.csv", ("t", "time", "value"), _trace_rows(trace, series))
    if tau_trace is not None:
        write_csv(out / "trace_tau_star.csv", ("t", "tau"), list(zip(traces["S"].times.tolist(), tau_trace.tolist())))
    result = report.to_dict()
    if series.timestamps is not None:
        result["times"] = {k: (None if v is None else float(series.timestamps[v]))
                           for k, v in result.items() if k.startswith("t_")}
    result.update(
        command="detect", seed=seed, signals=sorted(traces),
        embedding={"tau": tau, "d": d, "native": cfg.native},
        windows={"w": cfg.w, "n": cfg.n, "stride": cfg.stride, "w_raw": w_raw, "taus": list(cfg.taus)},
    )
    write_json(out / "report.json", result)
    return result


def _bench_settings(cfg: RunConfig) -> BenchSettings:
    if cfg.search_window is None:
        raise EmptySearchWindow(
            "onset data needs a search window: set [search] start and end as days of year"
        )
    if cfg.tau == "auto" or cfg.d == "auto":
        raise ConfigError("onset benchmarks need explicit tau and d")
    raw = cfg.section("cusum")
    return BenchSettings(
        search=cfg.search_window, tau=cfg.tau, d=cfg.d, w=cfg.w, n=cfg.n, w_raw=cfg.w_raw,
        taus=cfg.taus, p_max=cfg.p_max, rm_mode=cfg.rm_mode,
        per_coordinate_variance=cfg.per_coordinate_variance,
        cusum_k=float(raw.get("k", 0.5)), cusum_h=float(raw.get("h", 5.0)),
    )


def _detect_dataset(data: OnsetDataset, cfg: RunConfig, out: Path) -> dict:
    settings = _bench_settings(cfg)
    years = {str(y): detect_year(data.series[y], settings) for y in data.years}
    result = {"command": "detect", "years": years, "search_window": list(settings.search)}
    write_json(out / "report.json", result)
    return result


def _bench_data(cfg: RunConfig, seed: int) -> OnsetDataset:
    raw = cfg.section("bench")
    if raw.get("dataset", "").strip().lower() == "synthetic-step":
        return step_onset_dataset(years=int(raw.get("years", 20)), onset_doy=int(raw.get("onset_doy", 150)),
                                  seed=seed)
    if cfg.input is None:
        raise ConfigError("bench needs [input] path (year, doy, value) and truth, or [bench] dataset = synthetic-step")
    if cfg.truth is None:
        raise ConfigError("bench needs a ground-truth file: set [input] truth")
    return load_dataset(cfg.input, cfg.truth)


def cmd_bench(cfg: RunConfig, seed: int, out: Path) -> dict:
    """MAE per method plus the leave-one-out mean predictor."""
    data = _bench_data(cfg, seed)
    res = run_bench(data, _bench_settings(cfg))
    rows = [(m, v) for m, v in res["mae"].items()]
    write_csv(out / "mae.csv", ("method", "mae_days"), rows)
    result = {"command": "bench", "seed": seed, "n_years": len(data), **res}
    write_json(out / "bench.json", result)
    return result


def cmd_permtest(cfg: RunConfig, seed: int, out: Path, t: int | None, dump_null: bool) -> dict:
    series, native = load_input(cfg, seed)
    if isinstance(series, OnsetDataset):
        raise UsageError("permtest works on a single series")
    t = cfg.t if t is None else t
    if t is None:
        raise ConfigError("permtest needs a candidate index: pass --t or set [permutation] t")
    cloud, tau, d = _cloud(series, native, cfg)
    res = perm_test_at(cloud, int(t), cfg.w, cfg.n, cfg.B, seed)
    result = {"command": "permtest", "t": int(t), "alpha": cfg.alpha, "rejects": res.rejects(cfg.alpha),
              "embedding": {"tau": tau, "d": d, "native": cfg.native},
              "windows": {"w": cfg.w, "n": cfg.n}, **res.to_dict(include_null=True)}
    write_json(out / "permtest.json", result)
    if dump_null:
        write_csv(out / "null_samples.csv", ("index", "s"), list(enumerate(res.null_samples.tolist())))
    return result


def _protocol(cfg: RunConfig) -> TransitionProtocol:
    return convert_fields(TransitionProtocol, cfg.section("transition"), "transition")


def cmd_sweep(cfg: RunConfig, seed: int, out: Path) -> dict:
    raw = cfg.section("sweep")
    lo, hi, step = float(raw.get("lam_lo", 2.8)), float(raw.get("lam_hi", 4.0)), float(raw.get("step", 0.05))
    grid = np.round(np.arange(lo, hi + step / 2, step), 10)
    rows = sweep_logistic(grid, _protocol(cfg), trials=int(raw.get("trials", 5)), seed=seed,
                          lyapunov_iter=int(raw.get("lyapunov_iter", 100_000)))
    s = np.array([r.s for r in rows])
    lyap = np.array([r.lambda1 for r in rows])
    pearson = float(np.corrcoef(s, lyap)[0, 1]) if len(rows) > 1 and s.std() > 0 else None
    write_csv(out / "sweep.csv", ("lambda", "S", "lambda1"), [(r.lam, r.s, r.lambda1) for r in rows])
    result = {"command": "sweep", "seed": seed, "pearson": pearson,
              "rows": [{"lambda": r.lam, "S": r.s, "lambda1": r.lambda1} for r in rows]}
    write_json(out / "sweep.json", result)
    return result


def cmd_noise_sweep(cfg: RunConfig, seed: int, out: Path) -> dict:
    raw = cfg.section("noise")
    sigmas = [float(v) for v in raw.get("sigmas", "0, 0.05, 0.10, 0.15, 0.30, 0.50").split(",")]
    rows = noise_sweep(sigmas, trials=int(raw.get("trials", 20)), protocol=_protocol(cfg), seed=seed,
                       lam_pre=float(raw.get("lam_pre", 3.2)), lam_post=float(raw.get("lam_post", 3.8)))
    table = [{"sigma": r.sigma, "mean_S": r.mean_s, "sd_S": r.sd_s, "mean_G": r.mean_g, "sd_G": r.sd_g}
             for r in rows]
    write_csv(out / "noise_sweep.csv", ("sigma", "mean_S", "sd_S", "mean_G", "sd_G"),
              [(r.sigma, r.mean_s, r.sd_s, r.mean_g, r.sd_g) for r in rows])
    result = {"command": "noise-sweep", "seed": seed, "rows": table}
    write_json(out / "noise_sweep.json", result)
    return result


def cmd_synth(kind: str, cfg: RunConfig, seed: int, out_file: str | None, full: bool) -> str:
    if kind == "onset":
        raw = cfg.section("bench")
        data = step_onset_dataset(years=int(raw.get("years", 20)), onset_doy=int(raw.get("onset_doy", 150)),
                                  seed=seed)
        text = csv_text(("year", "doy", "value"), dataset_rows(data))
    else:
        series, native = synthesize(kind, cfg, seed)
        if full and native is not None:
            text = csv_text(("t", "x", "y", "z"), [(t, *p) for t, p in zip(series.timestamps.tolist(), native.tolist())])
        else:
            text = csv_text(("t", "value"), series_rows(series))
    if out_file:
        Path(out_file).parent.mkdir(parents=True, exist_ok=True)
        Path(out_file).write_text(text)
    return text


def cmd_verify(seed: int) -> dict:
    checks = run_checks(seed)
    return {"command": "verify", "seed": seed, "checks": checks,
            "passed": all(c["passed"] for c in checks.values())}


def cmd_embed_select(cfg: RunConfig, seed: int) -> dict:
    series, _ = load_input(cfg, seed)
    if isinstance(series, OnsetDataset):
        raise UsageError("embed-select works on a single series")
    tau_max = min(cfg.tau_max, max(1, series.N // 4))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tau = select_delay_mi(series, tau_max)
        d = select_dim_fnn(series, tau, cfg.d_max)
    return {
        "command": "embed-select", "tau": tau, "d": d, "tau_max": tau_max, "d_max": cfg.d_max,
        "mutual_information": mutual_information_curve(series, tau_max).tolist(),
        "fnn_fraction": {str(k): fnn_fraction(series, tau, k) for k in range(1, cfg.d_max + 1)},
        "warnings": [str(w.message) for w in caught],
    }


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration file (key = value with [sections])")
    common.add_argument("--seed", type=int, default=None, help="random seed (default: [run] seed, else 0)")
    common.add_argument("--input", help="input CSV, overriding [input] path")
    common.add_argument("--out", help="output folder, overriding [output] dir")
    common.add_argument("--tau", help="delay (integer or auto)")
    common.add_argument("--d", help="embedding dimension (2, 3 or auto)")
    common.add_argument("--w", type=int, help="window size in embedded points")
    common.add_argument("--n", type=int, help="subsample size per window")
    common.add_argument("--stride", type=int, help="step between candidate indices")
    common.add_argument("--taus", help="comma-separated delay set for the multi-delay statistic")
    common.add_argument("--search", nargs=2, type=int, metavar=("START", "END"), help="search window")
    common.add_argument("--B", type=int, help="number of permutations")
    common.add_argument("--rm-abs", action="store_true", help="use |RM| for the rolling-mean peak")
    common.add_argument("--s-peak", action="store_true", help="use the peak of S instead of its trough")

    p = _Parser(prog="mixupecp", description="Regime-transition detection with mixup Euler characteristics.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("detect", parents=[common], help="run the four signals and the combined onset")
    sub.add_parser("bench", parents=[common], help="MAE table over a year-keyed onset dataset")
    pt = sub.add_parser("permtest", parents=[common], help="low-side permutation test at one index")
    pt.add_argument("--t", type=int, help="candidate transition index")
    pt.add_argument("--dump-null", action="store_true", help="also write the null samples as CSV")
    sub.add_parser("sweep", parents=[common], help="S and Lyapunov exponent across a logistic sweep")
    sub.add_parser("noise-sweep", parents=[common], help="S and G across observation-noise levels")
    sy = sub.add_parser("synth", parents=[common], help="emit a synthetic series as CSV")
    sy.add_argument("kind", choices=["lorenz", "logistic", "eeg", "onset"])
    sy.add_argument("--full", action="store_true", help="lorenz: write all three coordinates")
    sub.add_parser("verify", parents=[common], help="check the Alpha pipeline against brute force")
    sub.add_parser("embed-select", parents=[common], help="choose delay and dimension for a series")
    return p


def _config_from_args(args) -> RunConfig:
    try:
        return _apply_overrides(args)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _apply_overrides(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.input:
        changes.update(input=args.input, synth=None)
    if args.out:
        changes["output"] = args.out
    if args.tau:
        changes["tau"] = "auto" if args.tau == "auto" else int(args.tau)
    if args.d:
        changes["d"] = "auto" if args.d == "auto" else int(args.d)
    for name in ("w", "n", "stride", "B"):
        if getattr(args, name) is not None:
            changes[name] = getattr(args, name)
    if args.taus:
        changes["taus"] = tuple(int(v) for v in args.taus.split(",") if v.strip())
    if args.search:
        changes.update(search_start=args.search[0], search_end=args.search[1])
    if args.rm_abs:
        changes["rm_mode"] = "abs"
    if args.s_peak:
        changes["s_mode"] = "peak"
    return cfg.replace(**changes) if changes else cfg


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        seed = cfg.seed if args.seed is None else args.seed
        out = Path(cfg.output)
        cmd = args.command
        if cmd == "synth":
            text = cmd_synth(args.kind, cfg, seed, args.out and str(Path(args.out) / f"{args.kind}.csv"), args.full)
            if not args.out:
                sys.stdout.write(text)
            return 0
        if cmd == "detect":
            result = cmd_detect(cfg, seed, out)
        elif cmd == "bench":
            result = cmd_bench(cfg, seed, out)
        elif cmd == "permtest":
            result = cmd_permtest(cfg, seed, out, args.t, args.dump_null)
        elif cmd == "sweep":
            result = cmd_sweep(cfg, seed, out)
        elif cmd == "noise-sweep":
            result = cmd_noise_sweep(cfg, seed, out)
        elif cmd == "verify":
            result = cmd_verify(seed)
        else:
            result = cmd_embed_select(cfg, seed)
        sys.stdout.write(json_text(result))
        if cmd == "verify" and not result["passed"]:
            return 2
        return 0
    except UsageError as exc:
        print(f"mixupecp: usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ValueError) as exc:
        print(f"mixupecp: data error: {exc}", file=sys.stderr)
        return 2
    except MixupError as exc:  # pragma: no cover - every error is one of the two kinds
        print(f"mixupecp: {exc}", file=sys.stderr)
        return 2


def _report_warnings(caught) -> None:
    counts: dict = {}
    first: dict = {}
    for w in caught:
        name = w.category.__name__
        counts[name] = counts.get(name, 0) + 1
        first.setdefault(name, str(w.message))
    for name in sorted(counts):
        more = f" (and {counts[name] - 1} similar)" if counts[name] > 1 else ""
        print(f"mixupecp: warning: {name}: {first[name]}{more}", file=sys.stderr)


def main(argv=None) -> None:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            code = run(argv)
        except BrokenPipeError:
            # downstream closed early (e.g. piped into head)
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
            code = 0
    _report_warnings(caught)
    sys.exit(code)
