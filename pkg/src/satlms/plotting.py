"""File-output figure rendering for the CLI report paths.

Every function writes a PNG (or whatever the file extension selects) next
to the delimited data the command emits; nothing here opens a window.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .core import MacroTrajectory
from .simulator import EnsembleStats
from .steadystate import REGIME_CONVERGED, REGIME_DIVERGENT, SteadyResult


def _finish(fig, path: str):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_theory_figure(traj: MacroTrajectory, path: str, title: str = ""):
    """MSE and normalized MSD learning curves of one theory trajectory."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 6.4), sharex=True)
    ax1.plot(traj.t, traj.mse, color="tab:blue")
    ax1.set_ylabel("MSE")
    ax2.plot(traj.t, traj.msd_norm, color="tab:orange")
    ax2.set_ylabel("normalized MSD")
    ax2.set_xlabel("t")
    if title:
        ax1.set_title(title)
    _finish(fig, path)


def save_sim_figure(stats: EnsembleStats, path: str, title: str = ""):
    """Ensemble-mean learning curves, with a +-1 std band when available."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 6.4), sharex=True)
    for ax, mean, std, label, color in (
        (ax1, stats.mse_mean, stats.mse_std, "MSE", "tab:blue"),
        (ax2, stats.msd_mean, stats.msd_std, "normalized MSD", "tab:orange"),
    ):
        ax.plot(stats.t, mean, color=color)
        if stats.n_trials > 1:
            ax.fill_between(stats.t, mean - std, mean + std, color=color, alpha=0.2)
        ax.set_ylabel(label)
    ax2.set_xlabel("t")
    if title:
        ax1.set_title(title)
    _finish(fig, path)


def save_compare_figure(traj: MacroTrajectory, stats: EnsembleStats,
                        path: str, title: str = ""):
    """Theory curves overlaid on ensemble means."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 6.4), sharex=True)
    ax1.plot(traj.t, traj.mse, color="tab:blue", label="theory")
    ax1.plot(stats.t, stats.mse_mean, ".", ms=3, color="tab:red", label="simulation")
    ax1.set_ylabel("MSE")
    ax1.legend()
    ax2.plot(traj.t, traj.msd_norm, color="tab:blue", label="theory")
    ax2.plot(stats.t, stats.msd_mean, ".", ms=3, color="tab:red", label="simulation")
    ax2.set_ylabel("normalized MSD")
    ax2.set_xlabel("t")
    if title:
        ax1.set_title(title)
    _finish(fig, path)


def save_sweep_figure(entries: list[tuple[float, SteadyResult]], path: str,
                      S_C: float | None = None, title: str = ""):
    """Steady-state quantities against the saturation value.

    Divergent points contribute to the MSE and cos-theta panels (their
    limits are finite); Q and the normalized MSD are only defined on the
    converged branch.
    """
    S_conv = [S for S, res in entries if res.regime == REGIME_CONVERGED]
    Q = [res.Q_star for _, res in entries if res.regime == REGIME_CONVERGED]
    msd = [res.msd_norm_star for _, res in entries if res.regime == REGIME_CONVERGED]
    cos_c = [res.cos_theta_star for _, res in entries if res.regime == REGIME_CONVERGED]
    mse_c = [res.mse_star for _, res in entries if res.regime == REGIME_CONVERGED]
    S_div = [S for S, res in entries if res.regime == REGIME_DIVERGENT]
    mse_d = [res.mse_asymptotic for _, res in entries if res.regime == REGIME_DIVERGENT]
    cos_d = [res.cos_theta_limit for _, res in entries if res.regime == REGIME_DIVERGENT]

    fig, axes = plt.subplots(2, 2, figsize=(9.6, 7.2))
    (axq, axc), (axm, axd) = axes
    axq.plot(S_conv, Q, ".-", color="tab:blue")
    axq.set_yscale("log")
    axq.set_ylabel("steady-state Q")
    axc.plot(S_div, cos_d, ".", color="tab:red")
    axc.plot(S_conv, cos_c, ".-", color="tab:blue")
    axc.set_ylabel(r"steady-state cos $\theta$")
    axm.plot(S_div, mse_d, ".", color="tab:red")
    axm.plot(S_conv, mse_c, ".-", color="tab:blue")
    axm.set_ylabel("steady-state MSE")
    axd.plot(S_conv, msd, ".-", color="tab:blue")
    if msd and all(m > 0 for m in msd):
        axd.set_yscale("log")
    axd.set_ylabel("steady-state normalized MSD")
    for ax in (axq, axc, axm, axd):
        ax.set_xlabel("S")
        if S_C is not None and math.isfinite(S_C):
            ax.axvline(S_C, color="gray", ls="--", lw=0.8)
    if title:
        fig.suptitle(title)
    _finish(fig, path)
