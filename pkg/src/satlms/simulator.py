"""Monte Carlo simulation of the finite-N saturated-output LMS loop.

Each trial identifies an N-tap FIR system with i.i.d. coefficients using
an N-tap LMS filter whose output is hard-clipped at +-S before the error
is formed:

    d(n) = g . u(n)
    y(n) = w(n) . u(n)
    e(n) = d(n) - clip(y(n), S) + xi(n)
    w(n+1) = w(n) + mu * e(n) * u(n)

with u(n) the window of the N most recent white input samples and w(0)=0.
The window is prefilled with i.i.d. samples so the loop is stationary from
the first step.

Per-trial randomness comes from three independent streams (system
coefficients, input, noise) derived deterministically from
(master_seed, trial_index), so ensembles are bit-reproducible regardless
of how trials are scheduled.  ``run_ensemble`` evaluates blocks of trials
with vectorized array arithmetic; ``step`` is the single-trial reference
path used to validate it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import MacroState, SystemParams, resolve_threads, validate

DISTRIBUTIONS = ("gaussian", "uniform", "binary")
STAT_MODES = ("mean", "median_std", "both")

_DEFAULT_CHUNK = 64


@dataclass(frozen=True)
class SimConfig:
    """Ensemble settings.

    ``record_stride`` is the spacing of recorded points in units of
    macroscopic time t = n/N (each trial runs round(N * t_end) steps).
    The three ``*_dist`` selectors choose zero-mean distributions, each
    scaled to the exact variance dictated by the system parameters
    (sigma_g2 for the coefficients, rho2/N for the input, sigma_xi2 for
    the noise).
    """

    N: int = 200
    trials: int = 500
    t_end: float = 50.0
    record_stride: float = 0.1
    master_seed: int = 0
    g_dist: str = "gaussian"
    u_dist: str = "gaussian"
    noise_dist: str = "gaussian"
    stat_mode: str = "mean"

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not (self.t_end > 0):
            raise ValueError("t_end must be > 0")
        if not (self.record_stride > 0):
            raise ValueError("record_stride must be > 0")
        for name in (self.g_dist, self.u_dist, self.noise_dist):
            if name not in DISTRIBUTIONS:
                raise ValueError(f"unknown distribution {name!r}")
        if self.stat_mode not in STAT_MODES:
            raise ValueError(f"unknown stat_mode {self.stat_mode!r}")

    @property
    def steps(self) -> int:
        return round(self.N * self.t_end)


@dataclass(frozen=True)
class MicroState:
    """Concrete state of one trial.

    ``window`` holds the N most recent inputs, most recent first, so the
    filter outputs are plain dot products with it.
    """

    g: np.ndarray
    w: np.ndarray
    window: np.ndarray
    n: int = 0

    @property
    def N(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True)
class TrialRng:
    """The three independent random streams of one trial."""

    g: np.random.Generator
    u: np.random.Generator
    noise: np.random.Generator


def trial_rngs(master_seed: int, trial_index: int) -> TrialRng:
    """Deterministic, mutually independent streams for one trial."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index,))
    g_ss, u_ss, noise_ss = ss.spawn(3)
    return TrialRng(g=np.random.Generator(np.random.PCG64(g_ss)),
                    u=np.random.Generator(np.random.PCG64(u_ss)),
                    noise=np.random.Generator(np.random.PCG64(noise_ss)))


def draw(rng: np.random.Generator, dist: str, std: float, size: int) -> np.ndarray:
    """Zero-mean samples with standard deviation ``std``."""
    if dist == "gaussian":
        return std * rng.standard_normal(size)
    if dist == "uniform":
        half = std * math.sqrt(3.0)
        return rng.uniform(-half, half, size)
    if dist == "binary":
        return std * (2.0 * rng.integers(0, 2, size=size) - 1.0)
    raise ValueError(f"unknown distribution {dist!r}")


def init_trial(cfg: SimConfig, params: SystemParams,
               trial_index: int) -> tuple[MicroState, TrialRng]:
    """Fresh trial state plus its (already advanced) random streams.

    The coefficient vector is drawn from g_dist, the filter starts at
    zero, and the input window is prefilled with N input samples (oldest
    drawn first) so the first convolution sees a full window.
    """
    validate(params)
    rng = trial_rngs(cfg.master_seed, trial_index)
    g = draw(rng.g, cfg.g_dist, params.sigma_g, cfg.N)
    sigma_u = math.sqrt(params.rho2 / cfg.N)
    prefill = draw(rng.u, cfg.u_dist, sigma_u, cfg.N)
    micro = MicroState(g=g, w=np.zeros(cfg.N), window=prefill[::-1].copy(), n=0)
    return micro, rng


def step_given_input(micro: MicroState, params: SystemParams,
                     u_new: float, xi: float) -> tuple[MicroState, float]:
    """One LMS update with externally supplied input and noise samples."""
    window = np.empty_like(micro.window)
    window[0] = u_new
    window[1:] = micro.window[:-1]
    d = float(micro.g @ window)
    y = float(micro.w @ window)
    fy = min(max(y, -params.S), params.S)
    e = d - fy + xi
    w = micro.w + params.mu * e * window
    return MicroState(g=micro.g, w=w, window=window, n=micro.n + 1), e


def step(micro: MicroState, params: SystemParams, rng: TrialRng,
         u_dist: str = "gaussian", noise_dist: str = "gaussian") -> tuple[MicroState, float]:
    """Draw the next input and noise samples and apply one LMS update."""
    sigma_u = math.sqrt(params.rho2 / micro.N)
    u_new = float(draw(rng.u, u_dist, sigma_u, 1)[0])
    xi = float(draw(rng.noise, noise_dist, math.sqrt(params.sigma_xi2), 1)[0])
    return step_given_input(micro, params, u_new, xi)


def extract_macro(micro: MicroState) -> MacroState:
    """Order parameters of a concrete state: Q = w.w/N, r = g.w/N."""
    N = micro.N
    return MacroState(Q=float(micro.w @ micro.w) / N,
                      r=float(micro.g @ micro.w) / N)


@dataclass(frozen=True)
class EnsembleStats:
    """Across-trial statistics at each recorded time.

    Means are always present; medians/standard deviations/standard errors
    are computed for every metric as well (``stat_mode`` only controls CSV
    emission).  ``cos_mean`` uses each trial's empirical coefficient norm,
    so the per-trial value is an exact cosine; it is NaN where undefined
    (all trials at Q = 0).
    """

    t: np.ndarray
    n_trials: int
    mse_mean: np.ndarray
    mse_median: np.ndarray
    mse_std: np.ndarray
    mse_se: np.ndarray
    msd_mean: np.ndarray
    msd_median: np.ndarray
    msd_std: np.ndarray
    msd_se: np.ndarray
    Q_mean: np.ndarray
    Q_std: np.ndarray
    r_mean: np.ndarray
    r_std: np.ndarray
    cos_mean: np.ndarray
    stat_mode: str = "mean"


def _record_steps(cfg: SimConfig) -> np.ndarray:
    steps = cfg.steps
    k = max(1, round(cfg.record_stride * cfg.N))
    rec = list(range(0, steps + 1, k))
    if rec[-1] != steps:
        rec.append(steps)
    return np.asarray(rec, dtype=np.int64)


def _run_chunk(cfg: SimConfig, params: SystemParams,
               trial_indices: range, rec: np.ndarray) -> dict[str, np.ndarray]:
    """Vectorized simulation of a block of trials.

    All trials in the block advance in lockstep; the full input sequence
    of each trial is drawn up front from its own stream (identical values
    to incremental draws), and the sliding window is realized as a view
    into it.  Coefficient and filter vectors are kept in ascending-time
    order so every inner product is a contiguous slice dot.
    """
    n_tr = len(trial_indices)
    N, steps = cfg.N, cfg.steps
    sigma_u = math.sqrt(params.rho2 / N)
    sigma_xi = math.sqrt(params.sigma_xi2)

    G = np.empty((n_tr, N))
    U = np.empty((n_tr, N + steps + 1))
    XI = np.empty((n_tr, steps + 1))
    for i, tidx in enumerate(trial_indices):
        rng = trial_rngs(cfg.master_seed, tidx)
        G[i] = draw(rng.g, cfg.g_dist, params.sigma_g, N)
        U[i] = draw(rng.u, cfg.u_dist, sigma_u, N + steps + 1)
        XI[i] = draw(rng.noise, cfg.noise_dist, sigma_xi, steps + 1)

    # Reverse into ascending-time layout; inner products and norms are
    # invariant under the common permutation.
    Gv = G[:, ::-1].copy()
    W = np.zeros((n_tr, N))
    gnorm2 = np.einsum("ij,ij->i", Gv, Gv) / N

    R = len(rec)
    out = {name: np.empty((n_tr, R)) for name in ("e2", "msd", "Q", "r", "cos")}
    rec_pos = {int(n): k for k, n in enumerate(rec)}

    mu, S = params.mu, params.S
    for n in range(steps + 1):
        slab = U[:, n + 1:n + 1 + N]
        d = np.einsum("ij,ij->i", Gv, slab)
        y = np.einsum("ij,ij->i", W, slab)
        e = d - np.clip(y, -S, S) + XI[:, n]
        k = rec_pos.get(n)
        if k is not None:
            Q = np.einsum("ij,ij->i", W, W) / N
            r = np.einsum("ij,ij->i", Gv, W) / N
            out["e2"][:, k] = e * e
            out["Q"][:, k] = Q
            out["r"][:, k] = r
            out["msd"][:, k] = gnorm2 - 2.0 * r + Q
            with np.errstate(invalid="ignore", divide="ignore"):
                out["cos"][:, k] = np.where(Q > 0.0, r / np.sqrt(gnorm2 * Q), np.nan)
        if n < steps:
            W += (mu * e)[:, None] * slab
    return out


def _nan_aware_mean(a: np.ndarray) -> np.ndarray:
    valid = ~np.isnan(a)
    counts = valid.sum(axis=0)
    sums = np.where(valid, a, 0.0).sum(axis=0)
    return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def run_ensemble(cfg: SimConfig, params: SystemParams,
                 threads: int | None = None) -> EnsembleStats:
    """Simulate the full ensemble and reduce it to per-time statistics.

    Trials are partitioned into fixed blocks that may run on a thread
    pool (capped by ``threads`` or the SATLMS_THREADS environment
    variable); the reduction consumes blocks in trial-index order, so the
    result is independent of scheduling.
    """
    validate(params)
    rec = _record_steps(cfg)
    chunk = _DEFAULT_CHUNK
    ranges = [range(lo, min(lo + chunk, cfg.trials))
              for lo in range(0, cfg.trials, chunk)]
    n_workers = resolve_threads(threads, jobs=len(ranges))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            chunks = list(ex.map(lambda rg: _run_chunk(cfg, params, rg, rec), ranges))
    else:
        chunks = [_run_chunk(cfg, params, rg, rec) for rg in ranges]

    merged = {name: np.concatenate([c[name] for c in chunks], axis=0)
              for name in chunks[0]}
    trials = cfg.trials

    def stats(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        mean = a.mean(axis=0)
        median = np.median(a, axis=0)
        if trials > 1:
            std = a.std(axis=0, ddof=1)
            se = std / math.sqrt(trials)
        else:
            std = np.full(a.shape[1], np.nan)
            se = np.full(a.shape[1], np.nan)
        return mean, median, std, se

    mse_mean, mse_median, mse_std, mse_se = stats(merged["e2"])
    msd_mean, msd_median, msd_std, msd_se = stats(merged["msd"])
    Q_mean, _, Q_std, _ = stats(merged["Q"])
    r_mean, _, r_std, _ = stats(merged["r"])

    return EnsembleStats(
        t=rec / cfg.N,
        n_trials=trials,
        mse_mean=mse_mean, mse_median=mse_median, mse_std=mse_std, mse_se=mse_se,
        msd_mean=msd_mean, msd_median=msd_median, msd_std=msd_std, msd_se=msd_se,
        Q_mean=Q_mean, Q_std=Q_std, r_mean=r_mean, r_std=r_std,
        cos_mean=_nan_aware_mean(merged["cos"]),
        stat_mode=cfg.stat_mode,
    )


def with_stat_mode(stats: EnsembleStats, stat_mode: str) -> EnsembleStats:
    if stat_mode not in STAT_MODES:
        raise ValueError(f"unknown stat_mode {stat_mode!r}")
    return replace(stats, stat_mode=stat_mode)
