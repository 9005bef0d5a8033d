"""Synthetic dynamical systems and their Lyapunov exponents.

* Lorenz flow with a step change of ``rho`` (RK4, fixed step).
* Logistic map with constant, stepped or swept growth rate plus
  observational Gaussian noise.
* EEG-like background with a high-amplitude spike-wave epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .embedding import EmbeddingParams, TimeSeries, takens_embed
from .errors import SeriesTooShort
from .signals import signal_G, signal_S


@dataclass(frozen=True)
class LorenzParams:
    """Lorenz system whose ``rho`` jumps from ``rho_pre`` to ``rho_post``.

    Times are measured from the end of the burn-in, which runs at
    ``rho_pre`` for ``burn_in`` time units.
    """

    sigma: float = 10.0
    beta: float = 8.0 / 3.0
    rho_pre: float = 20.0
    rho_post: float = 28.0
    switch_time: float = 50.0
    dt: float = 0.01
    duration: float = 100.0
    burn_in: float = 10.0
    initial_state: tuple = (1.0, 1.0, 1.0)
    sample_every: int = 1

    def __post_init__(self):
        if self.sample_every < 1:
            raise ValueError("sample_every must be a positive integer")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0 < self.switch_time < self.duration:
            raise ValueError("switch_time must lie strictly inside (0, duration)")

    def rho_at(self, t: float) -> float:
        return self.rho_pre if t < self.switch_time else self.rho_post


@dataclass(frozen=True)
class LorenzTrajectory:
    """Sampled Lorenz trajectory; ``states[i]`` is the state at ``times[i]``."""

    params: LorenzParams
    times: np.ndarray
    states: np.ndarray

    @property
    def x(self) -> TimeSeries:
        return TimeSeries(self.states[:, 0], self.times)

    @property
    def sample_interval(self) -> float:
        return self.params.dt * self.params.sample_every

    def index_of(self, t: float) -> int:
        return int(round(t / self.sample_interval))


def lorenz_field(state, sigma: float, rho: float, beta: float):
    x, y, z = state
    return (sigma * (y - x), x * (rho - z) - y, x * y - beta * z)


def _rk4(state, dt, sigma, rho, beta):
    x, y, z = state
    k1 = lorenz_field((x, y, z), sigma, rho, beta)
    k2 = lorenz_field((x + 0.5 * dt * k1[0], y + 0.5 * dt * k1[1], z + 0.5 * dt * k1[2]), sigma, rho, beta)
    k3 = lorenz_field((x + 0.5 * dt * k2[0], y + 0.5 * dt * k2[1], z + 0.5 * dt * k2[2]), sigma, rho, beta)
    k4 = lorenz_field((x + dt * k3[0], y + dt * k3[1], z + dt * k3[2]), sigma, rho, beta)
    return (
        x + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        y + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        z + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
    )


def gen_lorenz(params: LorenzParams = LorenzParams()) -> LorenzTrajectory:
    """Integrate the Lorenz system with classical fourth-order Runge-Kutta.

    The state is advanced with ``rho_pre`` through the burn-in and until
    ``switch_time``, then with ``rho_post``. Every ``sample_every``-th
    integration step is recorded.
    """
    p = params
    state = tuple(float(v) for v in p.initial_state)
    for _ in range(int(round(p.burn_in / p.dt))):
        state = _rk4(state, p.dt, p.sigma, p.rho_pre, p.beta)
    steps = int(round(p.duration / p.dt))
    out = np.empty((steps // p.sample_every + 1, 3))
    out[0] = state
    for i in range(steps):
        rho = p.rho_at(i * p.dt)
        state = _rk4(state, p.dt, p.sigma, rho, p.beta)
        if (i + 1) % p.sample_every == 0:
            out[(i + 1) // p.sample_every] = state
    times = np.arange(len(out)) * p.dt * p.sample_every
    return LorenzTrajectory(params=p, times=times, states=out)


def seeded_lorenz(seed: int, params: LorenzParams = LorenzParams()) -> LorenzParams:
    """``params`` with its initial state perturbed by ``N(0, 1)`` noise drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    start = np.asarray(params.initial_state, dtype=float) + rng.normal(size=3)
    return replace(params, initial_state=tuple(float(v) for v in start))


def lorenz_fixed_points(rho: float, beta: float = 8.0 / 3.0) -> np.ndarray:
    """The two nontrivial equilibria ``(+-q, +-q, rho - 1)``, ``q = sqrt(beta (rho - 1))``."""
    q = math.sqrt(beta * (rho - 1.0))
    return np.array([[q, q, rho - 1.0], [-q, -q, rho - 1.0]])


@dataclass(frozen=True)
class LyapunovEstimate:
    """Largest Lyapunov exponent and how it was obtained."""

    lambda1: float
    method: str


def lyapunov_trajectory(trajectory, dt: float | None = None, rhs=None, renorm_steps: int = 10,
                        d0: float = 1e-8) -> LyapunovEstimate:
    """Largest Lyapunov exponent by companion-orbit renormalisation.

    A second orbit starts ``d0`` away from the first state and follows the
    flow; every ``renorm_steps`` steps its separation from the reference
    trajectory is logged and rescaled back to ``d0``. The reference states
    come from ``trajectory`` itself.

    Parameters
    ----------
    trajectory : LorenzTrajectory or ndarray, shape (m, 3)
    dt : float, optional
        Sampling step; taken from the trajectory parameters when omitted.
    rhs : callable, optional
        ``rhs(state, t)`` advancing a state by one sample; required for
        plain arrays. Defaults to the
        Lorenz flow of ``trajectory.params``.
    """
    if isinstance(trajectory, LorenzTrajectory):
        states = trajectory.states
        p = trajectory.params
        dt = trajectory.sample_interval if dt is None else dt
        if rhs is None:
            def rhs(s, t):
                for k in range(p.sample_every):
                    s = _rk4(s, p.dt, p.sigma, p.rho_at(t + k * p.dt), p.beta)
                return s
    else:
        states = np.asarray(trajectory, dtype=float)
        if dt is None or rhs is None:
            raise ValueError("plain arrays need both dt and rhs")
    if len(states) <= renorm_steps:
        raise SeriesTooShort("trajectory too short for a Lyapunov estimate")
    dim = states.shape[1]
    direction = np.ones(dim) / math.sqrt(dim)
    comp = tuple(states[0] + d0 * direction)
    total = 0.0
    blocks = (len(states) - 1) // renorm_steps
    for b in range(blocks):
        i0 = b * renorm_steps
        for j in range(renorm_steps):
            comp = rhs(comp, (i0 + j) * dt)
        ref = states[i0 + renorm_steps]
        sep = np.asarray(comp) - ref
        dist = float(np.linalg.norm(sep))
        if dist == 0.0:
            sep, dist = direction * d0, d0
        total += math.log(dist / d0)
        comp = tuple(ref + sep * (d0 / dist))
    return LyapunovEstimate(lambda1=total / (blocks * renorm_steps * dt), method="companion-orbit")


@dataclass(frozen=True)
class LogisticParams:
    """Logistic map ``x <- lam x (1 - x)`` with a growth-rate schedule.

    The schedule is ``lam`` throughout, or ``lam`` before index ``t0`` and
    ``lam_post`` from ``t0`` on, or (with ``sweep``) linear from
    ``sweep[0]`` to ``sweep[1]`` over the recorded samples.
    """

    lam: float = 3.2
    n_samples: int = 1000
    lam_post: float | None = None
    t0: int | None = None
    sweep: tuple | None = None
    x0: float = 0.4
    burn_in: int = 500
    noise_sigma: float = 0.0

    def __post_init__(self):
        lams = [self.lam] + [v for v in (self.lam_post,) if v is not None] + list(self.sweep or ())
        if not all(0 < v <= 4 for v in lams):
            raise ValueError("growth rates must lie in (0, 4]")
        if not 0 < self.x0 < 1:
            raise ValueError("x0 must lie in (0, 1)")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if (self.lam_post is None) != (self.t0 is None):
            raise ValueError("lam_post and t0 go together")

    def schedule(self) -> np.ndarray:
        if self.sweep is not None:
            return np.linspace(self.sweep[0], self.sweep[1], self.n_samples)
        lam = np.full(self.n_samples, float(self.lam))
        if self.lam_post is not None:
            lam[self.t0:] = self.lam_post
        return lam


def iterate_logistic(lam, x0, n: int, burn_in: int = 0) -> np.ndarray:
    """Orbit of the logistic map; ``lam`` may be a scalar or per-step array."""
    lam_arr = np.broadcast_to(np.asarray(lam, dtype=float), (n,))
    first = float(lam_arr[0]) if n else float(lam)
    x = float(x0)
    for _ in range(burn_in):
        x = first * x * (1.0 - x)
    out = np.empty(n)
    for i in range(n):
        out[i] = x
        x = float(lam_arr[i]) * x * (1.0 - x)
    return out


def gen_logistic(params: LogisticParams, seed: int = 0) -> TimeSeries:
    """Logistic-map series with optional observational noise ``N(0, sigma^2)``."""
    x = iterate_logistic(params.schedule(), params.x0, params.n_samples, params.burn_in)
    if params.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        x = x + rng.normal(0.0, params.noise_sigma, size=x.size)
    return TimeSeries(x)


def lyapunov_logistic(lam, n_iter: int = 100_000, burn_in: int = 1000, x0: float = 0.4):
    """Largest Lyapunov exponent ``mean ln|lam (1 - 2 x)|`` along the orbit.

    Vectorised over ``lam``: an array argument returns an array of
    :class:`LyapunovEstimate`.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    x = np.full(lam_arr.shape, float(x0))
    for _ in range(burn_in):
        x = lam_arr * x * (1.0 - x)
    acc = np.zeros(lam_arr.shape)
    tiny = np.finfo(float).tiny
    for _ in range(n_iter):
        acc += np.log(np.maximum(np.abs(lam_arr * (1.0 - 2.0 * x)), tiny))
        x = lam_arr * x * (1.0 - x)
    est = [LyapunovEstimate(float(v), "orbit-average") for v in acc / n_iter]
    if np.ndim(lam) == 0:
        return est[0]
    return est


@dataclass(frozen=True)
class EEGParams:
    """Synthetic EEG: multi-band background plus a spike-wave epoch."""

    duration: float = 140.0
    seizure_span: tuple = (60.0, 80.0)
    sample_rate: float = 64.0
    background_amplitude: float = 1.0
    seizure_gain: float = 10.0
    spike_frequency: float = 3.0
    onset_ramp: float = 0.5
    offset_ramp: float = 3.0
    bands: tuple = field(default=((1.0, 4.0), (4.0, 8.0), (8.0, 13.0), (13.0, 30.0)))


def gen_eeg(params: EEGParams = EEGParams(), seed: int = 0) -> TimeSeries:
    """Synthetic EEG-like series with a high-amplitude spike-wave epoch.

    The background sums random-phase sinusoids drawn in the classical
    delta to beta bands with 1/f amplitudes. Inside ``seizure_span`` a
    3 Hz spike-wave complex roughly ``seizure_gain`` times larger in
    amplitude is superimposed, with short cosine ramps at both ends.
    """
    rng = np.random.default_rng(seed)
    n = int(round(params.duration * params.sample_rate))
    t = np.arange(n) / params.sample_rate
    bg = np.zeros(n)
    for lo, hi in params.bands:
        for f in rng.uniform(lo, hi, size=6):
            bg += np.sin(2 * math.pi * f * t + rng.uniform(0, 2 * math.pi)) / f
    bg += 0.3 * rng.normal(size=n) / math.sqrt(params.sample_rate)
    bg *= params.background_amplitude / np.std(bg)

    start, end = params.seizure_span
    x = bg.copy()
    if end > start:
        ictal = (t >= start) & (t < end)
        phase = 2 * math.pi * params.spike_frequency * (t - start)
        # spike-wave: a sharp spike followed by a slow wave each cycle
        spike = np.exp(-((np.mod(phase, 2 * math.pi) - 0.6) ** 2) / 0.05)
        wave = -0.5 * np.sin(phase / 1.0 - 0.9)
        complex_ = spike + wave
        complex_ /= np.std(complex_[ictal]) if ictal.any() else 1.0
        # fast build-up, slower termination
        rise = np.clip((t - start) / max(params.onset_ramp, 1e-9), 0, 1)
        fall = np.clip((end - t) / max(params.offset_ramp, 1e-9), 0, 1)
        ramp = 0.5 - 0.5 * np.cos(math.pi * np.minimum(rise, fall))
        x[ictal] += params.seizure_gain * params.background_amplitude * (ramp * complex_)[ictal]
    return TimeSeries(x, t)


def _trial_seeds(seed: int, *key) -> tuple:
    """``(x0, noise_seed)`` for one trial, derived from the run seed and ``key``."""
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in key]])
    rng = np.random.default_rng(ss)
    return float(rng.uniform(0.1, 0.9)), int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class TransitionProtocol:
    """Window settings for a logistic series whose ``lam`` steps at ``t0``.

    ``S`` and ``G`` are read at the single window pair whose pre-window
    ends ``w`` points before the step and whose post-window starts at it.
    """

    tau: int = 1
    d: int = 3
    w: int = 40
    n: int = 40
    t0: int = 200
    n_samples: int = 400
    per_coordinate_variance: bool = True

    def __post_init__(self):
        EmbeddingParams(self.tau, self.d)
        if self.t0 < 2 * self.w or self.t0 + self.w + (self.d - 1) * self.tau >= self.n_samples:
            raise ValueError("t0 must leave room for a full window pair")


def transition_stats(lam_pre: float, lam_post: float, sigma: float,
                     protocol: TransitionProtocol, x0: float, noise_seed: int) -> tuple:
    """``(S, G)`` across a ``lam_pre -> lam_post`` step."""
    pr = protocol
    series = gen_logistic(
        LogisticParams(lam=lam_pre, lam_post=lam_post, t0=pr.t0, n_samples=pr.n_samples,
                       x0=x0, noise_sigma=sigma),
        seed=noise_seed,
    )
    emb = takens_embed(series, EmbeddingParams(pr.tau, pr.d))
    at = (pr.t0, pr.t0)
    s = int(signal_S(emb, pr.w, 1, pr.n, at).values[0])
    g = float(signal_G(emb, pr.w, 1, at, per_coordinate=pr.per_coordinate_variance).values[0])
    return s, g


@dataclass(frozen=True)
class SweepRow:
    lam: float
    s: float
    lambda1: float


def sweep_logistic(lambda_grid, protocol: TransitionProtocol = TransitionProtocol(),
                   trials: int = 5, seed: int = 0, lyapunov_iter: int = 100_000) -> list:
    """Mean ``S`` across the step ``lam_i -> lam_{i+1}`` and ``lambda1(lam_i)``.

    The last grid value is paired with itself. Each row averages ``trials``
    noise-free series with independently drawn starting points.
    """
    grid = [float(v) for v in np.atleast_1d(lambda_grid)]
    if not grid:
        raise ValueError("lambda grid is empty")
    lyap = lyapunov_logistic(np.array(grid), n_iter=lyapunov_iter)
    rows = []
    for i, lam in enumerate(grid):
        nxt = grid[min(i + 1, len(grid) - 1)]
        vals = [transition_stats(lam, nxt, 0.0, protocol, *_trial_seeds(seed, i, k))[0]
                for k in range(trials)]
        rows.append(SweepRow(lam=lam, s=float(np.mean(vals)), lambda1=lyap[i].lambda1))
    return rows


@dataclass(frozen=True)
class NoiseRow:
    sigma: float
    mean_s: float
    sd_s: float
    mean_g: float
    sd_g: float


def noise_sweep(sigmas, trials: int = 20, protocol: TransitionProtocol = TransitionProtocol(),
                seed: int = 0, lam_pre: float = 3.2, lam_post: float = 3.8) -> list:
    """``S`` and ``G`` across a ``lam_pre -> lam_post`` step at each noise level.

    Trial ``k`` uses the same starting point and noise stream at every
    ``sigma`` (only the scale differs), so the levels are compared on
    common draws.
    """
    rows = []
    for sigma in sigmas:
        stats = np.array([transition_stats(lam_pre, lam_post, float(sigma), protocol,
                                           *_trial_seeds(seed, k)) for k in range(trials)])
        rows.append(NoiseRow(sigma=float(sigma), mean_s=float(stats[:, 0].mean()),
                             sd_s=float(stats[:, 0].std()), mean_g=float(stats[:, 1].mean()),
                             sd_g=float(stats[:, 1].std())))
    return rows
