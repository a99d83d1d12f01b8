"""Command-line front end.

Subcommands:
    theory         integrate the macroscopic ODEs, emit learning-curve CSV
    simulate       run a Monte Carlo ensemble, emit statistics CSV
    compare        theory and simulation on one t-grid, CSV + JSON summary
    steady         steady-state / divergence analysis for one point (JSON)
    critical       the critical saturation value (JSON)
    sweep          steady-state analysis over an S grid (CSV)
    moments-check  verify closed-form moments against quadrature (JSON)

Every command accepts ``--config FILE`` with flat ``key = value`` lines
mirroring the long flag names; explicit flags override the file, which
overrides built-in defaults.  ``--out`` writes the primary output to a
file and drops a JSON manifest sidecar sufficient to replay the run;
``--plot`` renders a figure of the same data.  Exit codes: 0 success,
1 check failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import Any, Callable, Sequence

from . import __version__, dynamics, oracle, simulator, steadystate
from .core import (InvalidParamError, MacroState, SatLmsError, StabilityError,
                   SystemParams, validate)

_ENVELOPE_SIGMA = 3.0


def _fmt(x: float | None) -> str:
    """Round-trip decimal formatting; empty field for undefined values."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


class UsageError(Exception):
    pass


def load_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file, keys mirroring long flag names."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


class Resolver:
    """Flag > config-file > default resolution, with a resolved-value log."""

    def __init__(self, ns: argparse.Namespace):
        self.ns = ns
        self.config: dict[str, str] = {}
        if getattr(ns, "config", None):
            self.config = load_config(ns.config)
        self.resolved: dict[str, Any] = {}

    def get(self, flag: str, cast: Callable[[str], Any], default: Any = None,
            required: bool = False) -> Any:
        attr = flag.replace("-", "_")
        value = getattr(self.ns, attr, None)
        if value is None and flag in self.config:
            try:
                value = cast(self.config[flag])
            except ValueError as exc:
                raise UsageError(f"config entry {flag!r}: {exc}") from exc
        if value is None:
            value = default
        if value is None and required:
            raise UsageError(f"missing required option --{flag}")
        self.resolved[flag] = value
        return value


def _add_param_flags(p: argparse.ArgumentParser, with_S: bool = True):
    p.add_argument("--rho2", type=float, help="input power scale (default 1)")
    p.add_argument("--sigma-g2", type=float, help="unknown-system tap variance (default 1)")
    p.add_argument("--sigma-xi2", type=float, help="background noise variance (default 0)")
    if with_S:
        p.add_argument("--S", type=float, help="saturation value ('inf' for the linear limit)")
        p.add_argument("--mu", type=float, help="LMS step size")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--out", help="write the primary output here (plus manifest sidecar)")


def _resolve_params(res: Resolver, need_S: bool = True, need_mu: bool = True) -> SystemParams:
    rho2 = res.get("rho2", float, 1.0)
    sigma_g2 = res.get("sigma-g2", float, 1.0)
    sigma_xi2 = res.get("sigma-xi2", float, 0.0)
    S = res.get("S", float, None if need_S else math.inf, required=need_S)
    mu = res.get("mu", float, None if need_mu else 0.5, required=need_mu)
    params = SystemParams(rho2=rho2, sigma_g2=sigma_g2, sigma_xi2=sigma_xi2, S=S, mu=mu)
    validate(params)
    return params


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_manifest(command: str, res: Resolver, outputs: list[str],
                    duration_s: float, seed: int | None = None):
    if not outputs:
        return
    manifest = {
        "command": command,
        "tool": "satlms",
        "version": __version__,
        "resolved": {k: (None if v is None else (repr(v) if isinstance(v, float) else v))
                     for k, v in res.resolved.items()},
        "seed": seed,
        "outputs": outputs,
        "duration_s": duration_s,
    }
    path = outputs[0] + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _csv(header: Sequence[str], rows: list[Sequence[str]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- theory


def cmd_theory(ns: argparse.Namespace) -> int:
    t0 = time.monotonic()
    res = Resolver(ns)
    params = _resolve_params(res)
    t_end = res.get("t-end", float, required=True)
    dt = res.get("dt", float, 0.01)
    stride = res.get("record-stride", int, 1)
    cfg = dynamics.IntegratorConfig(t_end=t_end, dt=dt, record_stride=stride)
    traj = dynamics.integrate(params, MacroState(Q=0.0, r=0.0), cfg)

    rows = [(_fmt(t), _fmt(Q), _fmt(r), _fmt(m), _fmt(d), _fmt(c))
            for t, Q, r, m, d, c in zip(traj.t, traj.Q, traj.r, traj.mse,
                                        traj.msd_norm, traj.cos_theta)]
    _emit(_csv(("t", "Q", "r", "mse", "msd_norm", "cos_theta"), rows), ns.out)

    outputs = [p for p in (ns.out,) if p]
    if ns.plot:
        from . import plotting
        plotting.save_theory_figure(traj, ns.plot,
                                    title=f"S={params.S:g}, mu={params.mu:g}")
        outputs.append(ns.plot)
    _write_manifest("theory", res, outputs, time.monotonic() - t0)
    return 0


# -------------------------------------------------------------- simulate


def _sim_config(res: Resolver) -> tuple[simulator.SimConfig, int]:
    seed = res.get("seed", int, 0)
    cfg = simulator.SimConfig(
        N=res.get("N", int, 200),
        trials=res.get("trials", int, 500),
        t_end=res.get("t-end", float, 50.0),
        record_stride=res.get("record-stride", float, 0.1),
        master_seed=seed,
        g_dist=res.get("g-dist", str, "gaussian"),
        u_dist=res.get("u-dist", str, "gaussian"),
        noise_dist=res.get("noise-dist", str, "gaussian"),
        stat_mode=res.get("stat", str, "mean"),
    )
    return cfg, seed


def _sim_rows(stats: simulator.EnsembleStats) -> tuple[list[str], list[list[str]]]:
    with_spread = stats.stat_mode in ("median_std", "both")
    header = ["t", "mse_mean"]
    if with_spread:
        header += ["mse_median", "mse_std"]
    header += ["msd_mean"]
    if with_spread:
        header += ["msd_median", "msd_std"]
    header += ["Q_mean", "r_mean"]
    rows = []
    for i, t in enumerate(stats.t):
        row = [_fmt(t), _fmt(stats.mse_mean[i])]
        if with_spread:
            row += [_fmt(stats.mse_median[i]), _fmt(stats.mse_std[i])]
        row += [_fmt(stats.msd_mean[i])]
        if with_spread:
            row += [_fmt(stats.msd_median[i]), _fmt(stats.msd_std[i])]
        row += [_fmt(stats.Q_mean[i]), _fmt(stats.r_mean[i])]
        rows.append(row)
    return header, rows


def cmd_simulate(ns: argparse.Namespace) -> int:
    t0 = time.monotonic()
    res = Resolver(ns)
    params = _resolve_params(res)
    cfg, seed = _sim_config(res)
    stats = simulator.run_ensemble(cfg, params)
    header, rows = _sim_rows(stats)
    _emit(_csv(header, rows), ns.out)

    outputs = [p for p in (ns.out,) if p]
    if ns.plot:
        from . import plotting
        plotting.save_sim_figure(stats, ns.plot,
                                 title=f"S={params.S:g}, mu={params.mu:g}, "
                                       f"N={cfg.N}, {cfg.trials} trials")
        outputs.append(ns.plot)
    _write_manifest("simulate", res, outputs, time.monotonic() - t0, seed=seed)
    return 0


# --------------------------------------------------------------- compare


def cmd_compare(ns: argparse.Namespace) -> int:
    t0 = time.monotonic()
    res = Resolver(ns)
    params = _resolve_params(res)
    cfg, seed = _sim_config(res)
    dt_flag = res.get("dt", float, 0.01)

    stats = simulator.run_ensemble(cfg, params)
    # Integrate with a step that divides the simulation step 1/N, so every
    # recorded simulation time (including the forced final one) is hit
    # exactly by an integrator record.
    sim_dt = 1.0 / cfg.N
    substeps = max(1, math.ceil(sim_dt / dt_flag))
    k_steps = max(1, round(cfg.record_stride * cfg.N))
    icfg = dynamics.IntegratorConfig(t_end=cfg.steps * sim_dt,
                                     dt=sim_dt / substeps,
                                     record_stride=k_steps * substeps)
    traj = dynamics.integrate(params, MacroState(Q=0.0, r=0.0), icfg)

    n = min(len(traj.t), len(stats.t))
    for i in range(n):
        if abs(traj.t[i] - stats.t[i]) > 1e-9 * max(1.0, stats.t[i]):
            raise UsageError("theory and simulation t-grids failed to align; "
                             "choose --record-stride commensurate with --dt")

    header = ["t", "mse_theory", "mse_sim", "msd_theory", "msd_sim",
              "abs_dmse", "abs_dmsd", "mse_se", "msd_se"]
    rows = []
    dmse, dmsd, ratios_mse, ratios_msd = [], [], [], []
    for i in range(n):
        dm = abs(stats.mse_mean[i] - traj.mse[i])
        dd = abs(stats.msd_mean[i] - traj.msd_norm[i])
        dmse.append(dm)
        dmsd.append(dd)
        if stats.n_trials > 1:
            ratios_mse.append(dm / stats.mse_se[i] if stats.mse_se[i] > 0 else 0.0)
            ratios_msd.append(dd / stats.msd_se[i] if stats.msd_se[i] > 0 else 0.0)
        rows.append([_fmt(stats.t[i]), _fmt(traj.mse[i]), _fmt(stats.mse_mean[i]),
                     _fmt(traj.msd_norm[i]), _fmt(stats.msd_mean[i]),
                     _fmt(dm), _fmt(dd), _fmt(stats.mse_se[i]), _fmt(stats.msd_se[i])])

    underpowered = stats.n_trials < 2
    if underpowered:
        verdict = "PASS"
        max_ratio_mse = max_ratio_msd = None
    else:
        max_ratio_mse = max(ratios_mse)
        max_ratio_msd = max(ratios_msd)
        verdict = ("PASS" if max_ratio_mse <= _ENVELOPE_SIGMA
                   and max_ratio_msd <= _ENVELOPE_SIGMA else "FAIL")
    summary = {
        "n_compared": n,
        "envelope_sigma": _ENVELOPE_SIGMA,
        "max_abs_dmse": max(dmse),
        "mean_abs_dmse": sum(dmse) / n,
        "max_abs_dmsd": max(dmsd),
        "mean_abs_dmsd": sum(dmsd) / n,
        "max_mse_dev_over_se": max_ratio_mse,
        "max_msd_dev_over_se": max_ratio_msd,
        "underpowered": underpowered,
        "verdict": verdict,
    }

    _emit(_csv(header, rows), ns.out)
    summary_text = json.dumps(summary, indent=2) + "\n"
    outputs = [p for p in (ns.out,) if p]
    if ns.out:
        summary_path = ns.out + ".summary.json"
        with open(summary_path, "w", encoding="utf-8") as fh:
            fh.write(summary_text)
        outputs.append(summary_path)
    else:
        sys.stderr.write(summary_text)

    if ns.plot:
        from . import plotting
        plotting.save_compare_figure(traj, stats, ns.plot,
                                     title=f"S={params.S:g}, mu={params.mu:g}")
        outputs.append(ns.plot)
    _write_manifest("compare", res, outputs, time.monotonic() - t0, seed=seed)
    return 0 if verdict == "PASS" else 1


# -------------------------------------------------- steady/critical/sweep


def _steady_json(result: steadystate.SteadyResult) -> dict:
    if result.regime == steadystate.REGIME_CONVERGED:
        return {"regime": result.regime, "Q_star": result.Q_star,
                "r_star": result.r_star, "cos_theta": result.cos_theta_star,
                "mse": result.mse_star, "msd_norm": result.msd_norm_star}
    if result.regime == steadystate.REGIME_DIVERGENT:
        return {"regime": result.regime, "mse_asymptotic": result.mse_asymptotic,
                "cos_theta": result.cos_theta_limit}
    return {"regime": result.regime}


def cmd_steady(ns: argparse.Namespace) -> int:
    t0 = time.monotonic()
    res = Resolver(ns)
    params = _resolve_params(res)
    try:
        result = steadystate.steady_state(params)
        payload = _steady_json(result)
    except StabilityError as exc:
        payload = {"regime": steadystate.REGIME_UNSTABLE, "detail": str(exc)}
    _emit(json.dumps(payload, indent=2) + "\n", ns.out)
    _write_manifest("steady", res, [p for p in (ns.out,) if p], time.monotonic() - t0)
    return 0


def cmd_critical(ns: argparse.Namespace) -> int:
    t0 = time.monotonic()
    res = Resolver(ns)
    params = _resolve_params(res, need_S=False, need_mu=False)
    payload = {"S_C": steadystate.critical_S(params)}
    _emit(json.dumps(payload, indent=2) + "\n", ns.out)
    _write_manifest("critical", res, [p for p in (ns.out,) if p], time.monotonic() - t0)
    return 0


def cmd_sweep(ns: argparse.Namespace) -> int:
    t0 = time.monotonic()
    res = Resolver(ns)
    params = _resolve_params(res, need_S=False)
    s_from = res.get("S-from", float, required=True)
    s_to = res.get("S-to", float, required=True)
    s_step = res.get("S-step", float, required=True)
    if s_step <= 0 or s_to < s_from or s_from < 0:
        raise UsageError("require 0 <= S-from <= S-to and S-step > 0")
    grid = []
    k = 0
    while True:
        S = s_from + k * s_step
        if S > s_to + 1e-12 * max(1.0, s_to):
            break
        grid.append(S)
        k += 1

    entries = steadystate.sweep_S(params, grid)
    rows = []
    for S, r in entries:
        if r.regime == steadystate.REGIME_CONVERGED:
            rows.append([_fmt(S), r.regime, _fmt(r.Q_star), _fmt(r.r_star),
                         _fmt(r.cos_theta_star), _fmt(r.mse_star), _fmt(r.msd_norm_star)])
        elif r.regime == steadystate.REGIME_DIVERGENT:
            rows.append([_fmt(S), r.regime, "", "", _fmt(r.cos_theta_limit),
                         _fmt(r.mse_asymptotic), ""])
        else:
            rows.append([_fmt(S), r.regime, "", "", "", "", ""])
    _emit(_csv(("S", "regime", "Q_star", "r_star", "cos_theta", "mse", "msd_norm"), rows),
          ns.out)

    outputs = [p for p in (ns.out,) if p]
    if ns.plot:
        from . import plotting
        plotting.save_sweep_figure(entries, ns.plot, S_C=steadystate.critical_S(params),
                                   title=f"mu={params.mu:g}, sigma_xi2={params.sigma_xi2:g}")
        outputs.append(ns.plot)
    _write_manifest("sweep", res, outputs, time.monotonic() - t0)
    return 0


# --------------------------------------------------------- moments-check


def cmd_moments_check(ns: argparse.Namespace) -> int:
    t0 = time.monotonic()
    res = Resolver(ns)
    nodes = res.get("nodes", int, 200)
    method = res.get("method", str, "gauss")
    cfg = oracle.QuadConfig(nodes=nodes, method=method)
    report = oracle.check_all(cfg)
    _emit(json.dumps(report.as_dict(), indent=2) + "\n", ns.out)
    _write_manifest("moments-check", res, [p for p in (ns.out,) if p],
                    time.monotonic() - t0)
    return 0 if report.passed else 1


# ------------------------------------------------------------ entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satlms",
        description="Saturated-output LMS: macroscopic theory, Monte Carlo "
                    "simulation, and steady-state analysis.")
    parser.add_argument("--version", action="version", version=f"satlms {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="integrate the macroscopic ODEs")
    _add_param_flags(p)
    p.add_argument("--t-end", type=float, help="final macroscopic time")
    p.add_argument("--dt", type=float, help="integrator step (default 0.01)")
    p.add_argument("--record-stride", type=int, help="record every k-th step (default 1)")
    p.add_argument("--plot", help="also render the learning curves to this file")
    p.set_defaults(func=cmd_theory)

    for name, fn, help_ in (("simulate", cmd_simulate, "run a Monte Carlo ensemble"),
                            ("compare", cmd_compare, "theory vs simulation on one grid")):
        p = sub.add_parser(name, help=help_)
        _add_param_flags(p)
        p.add_argument("--N", type=int, help="tap count (default 200)")
        p.add_argument("--trials", type=int, help="ensemble size (default 500)")
        p.add_argument("--t-end", type=float, help="horizon in t units (default 50)")
        p.add_argument("--record-stride", type=float,
                       help="record spacing in t units (default 0.1)")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--stat", choices=simulator.STAT_MODES,
                       help="statistics columns to emit (default mean)")
        p.add_argument("--g-dist", choices=simulator.DISTRIBUTIONS)
        p.add_argument("--u-dist", choices=simulator.DISTRIBUTIONS)
        p.add_argument("--noise-dist", choices=simulator.DISTRIBUTIONS)
        if name == "compare":
            p.add_argument("--dt", type=float, help="theory integrator step (default 0.01)")
        p.add_argument("--plot", help="also render the curves to this file")
        p.set_defaults(func=fn)

    p = sub.add_parser("steady", help="steady state or divergence at one point")
    _add_param_flags(p)
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("critical", help="critical saturation value")
    _add_param_flags(p, with_S=False)
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("sweep", help="steady-state analysis over an S grid")
    _add_param_flags(p, with_S=False)
    p.add_argument("--mu", type=float, help="LMS step size")
    p.add_argument("--S-from", type=float, help="first S value")
    p.add_argument("--S-to", type=float, help="last S value")
    p.add_argument("--S-step", type=float, help="grid spacing")
    p.add_argument("--plot", help="also render the sweep panels to this file")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("moments-check", help="verify closed forms against quadrature")
    p.add_argument("--nodes", type=int, help="quadrature nodes per axis (default 200)")
    p.add_argument("--method", choices=("gauss", "adaptive"))
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_moments_check)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except (UsageError, InvalidParamError, ValueError, OSError) as exc:
        sys.stderr.write(f"satlms: error: {exc}\n")
        return 2
    except SatLmsError as exc:
        sys.stderr.write(f"satlms: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
