"""Deterministic evolution of the macroscopic order parameters.

One LMS update changes (r, Q) by O(1/N), so in the large-N limit, with
time t = n/N, the order parameters obey the coupled ODEs

    dr/dt = mu * rho2 * (sigma_g2 - r * E)
    dQ/dt = mu * rho2 * (mu * (rho2 Q - 2 rho2 r - S^2) - 2 Q) * E
            - mu^2 * rho2 * T
            + mu * rho2 * (mu * (rho2 sigma_g2 + S^2 + sigma_xi2) + 2 r)

with E, T the saturation terms of :mod:`satlms.moments`.  Fluctuations
vanish by self-averaging, so the trajectory from Q(0) = r(0) = 0 is the
exact large-N learning curve; MSE and normalized MSD follow by evaluating
the closed-form moments along it.

The system is integrated with classical fixed-step fourth-order
Runge-Kutta.  A fixed step keeps trajectories bit-reproducible; accuracy
is established by step-halving rather than by adaptive control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import moments
from .core import (MacroState, MacroTrajectory, NonFiniteError, SystemParams,
                   cos_theta, validate)


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration settings.

    ``dt`` is the step in macroscopic time, ``t_end`` the final time, and
    ``record_stride`` keeps every k-th step in the output (the initial and
    final points are always kept).
    """

    t_end: float
    dt: float = 0.01
    record_stride: int = 1

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError("dt must be > 0")
        if not (self.t_end > 0):
            raise ValueError("t_end must be > 0")
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


def drdt(params: SystemParams, state: MacroState) -> float:
    """Rate of change of the overlap r."""
    E, _ = moments.saturation_terms(params.S, params.rho2 * max(state.Q, 0.0))
    return params.mu * params.rho2 * (params.sigma_g2 - state.r * E)


def dqdt(params: SystemParams, state: MacroState) -> float:
    """Rate of change of the filter energy Q.

    Where the clipper is transparent (S = inf, or past the erf cutoff)
    the S^2 contributions cancel exactly and the reduced linear-limit
    expression is used; elsewhere they are regrouped as S^2 (1 - E) so
    the cancellation never happens in floating point.
    """
    mu, rho2 = params.mu, params.rho2
    Q, r = max(state.Q, 0.0), state.r
    rho2Q = rho2 * Q
    if moments.effectively_linear(params.S, rho2Q):
        return mu * rho2 * (mu * (rho2Q - 2.0 * rho2 * r) - 2.0 * Q
                            + mu * (rho2 * params.sigma_g2 + params.sigma_xi2)
                            + 2.0 * r)
    S = params.S
    E, T = moments.saturation_terms(S, rho2Q)
    return (mu * rho2 * (mu * (rho2Q - 2.0 * rho2 * r) - 2.0 * Q) * E
            + mu * mu * rho2 * S * S * (1.0 - E)
            - mu * mu * rho2 * T
            + mu * rho2 * (mu * (rho2 * params.sigma_g2 + params.sigma_xi2)
                           + 2.0 * r))


def _derivs(params: SystemParams, r: float, Q: float) -> tuple[float, float]:
    s = MacroState(Q=Q, r=r)
    return drdt(params, s), dqdt(params, s)


def integrate(params: SystemParams, state0: MacroState,
              cfg: IntegratorConfig) -> MacroTrajectory:
    """RK4 trajectory of (r, Q) with derived MSE/MSD/cos-theta curves.

    Q is clamped to zero if round-off drives it infinitesimally negative
    (the derivative functions are only defined for Q >= 0); the clamp is
    reported on the trajectory.  Raises :class:`NonFiniteError` if the
    state overflows, reporting the last valid time.
    """
    validate(params)
    if state0.Q < 0.0:
        raise ValueError("initial Q must be >= 0")
    n_steps = max(1, round(cfg.t_end / cfg.dt))
    dt = cfg.dt

    r, Q = state0.r, state0.Q
    clamped = False

    ts: list[float] = []
    rs: list[float] = []
    qs: list[float] = []

    def record(i: int):
        ts.append(i * dt)
        rs.append(r)
        qs.append(Q)

    record(0)
    for i in range(n_steps):
        k1r, k1q = _derivs(params, r, Q)
        k2r, k2q = _derivs(params, r + 0.5 * dt * k1r, Q + 0.5 * dt * k1q)
        k3r, k3q = _derivs(params, r + 0.5 * dt * k2r, Q + 0.5 * dt * k2q)
        k4r, k4q = _derivs(params, r + dt * k3r, Q + dt * k3q)
        r = r + dt * (k1r + 2.0 * k2r + 2.0 * k3r + k4r) / 6.0
        Q = Q + dt * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
        if Q < 0.0:
            Q = 0.0
            clamped = True
        if not (math.isfinite(r) and math.isfinite(Q)):
            raise NonFiniteError(t=(i + 1) * dt,
                                 last_state=MacroState(Q=qs[-1], r=rs[-1]))
        if (i + 1) % cfg.record_stride == 0 or i == n_steps - 1:
            record(i + 1)

    mses, msds, coss = [], [], []
    for rr, qq in zip(rs, qs):
        s = MacroState(Q=qq, r=rr)
        mses.append(moments.mse(params, s))
        msds.append(moments.msd_normalized(params, s))
        c = cos_theta(s, params)
        coss.append(math.nan if c is None else c)

    return MacroTrajectory(
        t=tuple(ts), Q=tuple(qs), r=tuple(rs),
        mse=tuple(mses), msd_norm=tuple(msds), cos_theta=tuple(coss),
        q_clamped=clamped,
    )
