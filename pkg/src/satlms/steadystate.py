"""Steady states, divergence detection, and the critical saturation value.

Setting dr/dt = 0 eliminates the overlap, r(Q) = sigma_g2 / E(Q), and
turns dQ/dt = 0 into a one-dimensional root problem in Q.  A root exists
only when the saturation value exceeds the critical value

    S_C = sigma_g * rho * sqrt(pi / 2),

at which the balance between the injection and leakage terms of dQ/dt is
lost at large Q.  Below S_C the filter norm grows without bound
(sqrt(Q) grows linearly in t), the filter direction still aligns with the
unknown system (cos theta -> 1), and the MSE converges to the step-size
independent quadratic

    S^2 - 2 sigma_g rho sqrt(2/pi) S + sigma_g2 rho2 + sigma_xi2.

The case S = S_C itself is classified as divergent (no finite fixed point
exists there; Q diverges as S -> S_C from above).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import dynamics, moments
from .core import (MacroState, SolverError, StabilityError, SystemParams,
                   cos_theta, validate)

# Geometric scan range for the 1-D root bracketing in Q.
_Q_SCAN_LO = 1e-3
_Q_SCAN_HI = 1e12
_S_BOUNDARY_SLACK = 1e-9

REGIME_CONVERGED = "converged"
REGIME_DIVERGENT = "divergent"
REGIME_UNSTABLE = "unstable"


@dataclass(frozen=True)
class SteadyResult:
    """Long-time behavior for one parameter point.

    ``regime`` is ``"converged"`` (finite fixed point; the starred fields
    are set) or ``"divergent"`` (Q and the normalized MSD diverge;
    ``mse_asymptotic`` and ``cos_theta_limit`` are set instead).  Sweeps
    additionally use ``"unstable"`` for step sizes with no mean-square
    stable point in the linear limit.
    """

    regime: str
    Q_star: float | None = None
    r_star: float | None = None
    mse_star: float | None = None
    msd_norm_star: float | None = None
    cos_theta_star: float | None = None
    mse_asymptotic: float | None = None
    cos_theta_limit: float | None = None


def critical_S(params: SystemParams) -> float:
    """The saturation value below which mean-square stability is lost."""
    validate(params)
    return params.sigma_g * params.rho * math.sqrt(math.pi / 2.0)


def asymptotic_mse(params: SystemParams) -> float:
    """Limiting MSE in the divergent regime (S < S_C).

    A quadratic in S, independent of the step size; its minimum over S is
    sigma_g2 * rho2 * (1 - 2/pi) + sigma_xi2 at S = sigma_g rho sqrt(2/pi).
    """
    validate(params)
    sg_rho = params.sigma_g * params.rho
    return (params.S * params.S
            - 2.0 * sg_rho * math.sqrt(2.0 / math.pi) * params.S
            + sg_rho * sg_rho + params.sigma_xi2)


def asymptotic_cos_theta() -> float:
    """Limiting alignment in the divergent regime: exactly 1.

    The filter direction coincides with the unknown system even while its
    norm diverges; the limit does not depend on mu, rho2, sigma_g2 or
    sigma_xi2.
    """
    return 1.0


def _r_of_Q(params: SystemParams, Q: float) -> float:
    E, _ = moments.saturation_terms(params.S, params.rho2 * Q)
    return params.sigma_g2 / E


def _residual(params: SystemParams, Q: float) -> float:
    """dQ/dt along the dr/dt = 0 manifold."""
    return dynamics.dqdt(params, MacroState(Q=Q, r=_r_of_Q(params, Q)))


def _linear_steady(params: SystemParams) -> SteadyResult:
    if params.mu * params.rho2 >= 2.0:
        raise StabilityError(
            f"mu*rho2 = {params.mu * params.rho2} >= 2: linear LMS is not "
            "mean-square stable")
    r_star = params.sigma_g2
    Q_star = params.sigma_g2 + params.mu * params.sigma_xi2 / (2.0 - params.mu * params.rho2)
    return _converged(params, Q_star, r_star)


def _converged(params: SystemParams, Q_star: float, r_star: float) -> SteadyResult:
    s = MacroState(Q=Q_star, r=r_star)
    # The fixed point can sit beyond the Cauchy-Schwarz cone only via
    # round-off; reuse the trajectory slack.
    c = cos_theta(s, params, eps=1e-6)
    return SteadyResult(
        regime=REGIME_CONVERGED,
        Q_star=Q_star,
        r_star=r_star,
        mse_star=moments.mse(params, s),
        msd_norm_star=moments.msd_normalized(params, s),
        cos_theta_star=c,
    )


def _divergent(params: SystemParams) -> SteadyResult:
    return SteadyResult(
        regime=REGIME_DIVERGENT,
        mse_asymptotic=asymptotic_mse(params),
        cos_theta_limit=asymptotic_cos_theta(),
    )


def steady_state(params: SystemParams) -> SteadyResult:
    """Solve for the long-time behavior at one parameter point.

    For S above the critical value the fixed point is located by geometric
    bracket scanning of Q over [1e-3, 1e12] followed by bisection; the
    returned point satisfies |dr/dt| and |dQ/dt| <= 1e-10.  With no sign
    change in the scan range the point is classified divergent provided
    S < S_C (+1e-9 slack); otherwise a :class:`SolverError` is raised,
    since a missed root and true divergence must not be conflated.

    Raises :class:`StabilityError` in the linear limit when mu*rho2 >= 2.
    """
    validate(params)
    if math.isinf(params.S):
        return _linear_steady(params)
    if params.S == 0.0:
        # The clipper output is identically zero: pure random walk, no
        # fixed point at any step size.
        return _divergent(params)

    lo = _Q_SCAN_LO
    f_lo = _residual(params, lo)
    bracket = None
    while lo < _Q_SCAN_HI:
        hi = lo * 2.0
        f_hi = _residual(params, hi)
        if f_lo == 0.0:
            bracket = (lo, lo, f_lo)
            break
        if (f_lo > 0.0) != (f_hi > 0.0):
            bracket = (lo, hi, f_lo)
            break
        lo, f_lo = hi, f_hi

    if bracket is None:
        if params.S < critical_S(params) + _S_BOUNDARY_SLACK:
            return _divergent(params)
        raise SolverError(
            f"no steady-state bracket found for S={params.S} although "
            f"S >= S_C={critical_S(params)}; scan range exhausted")

    a, b, f_a = bracket
    while True:
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        f_mid = _residual(params, mid)
        if f_mid == 0.0:
            a = b = mid
            break
        if (f_mid > 0.0) == (f_a > 0.0):
            a, f_a = mid, f_mid
        else:
            b = mid
    Q_star = 0.5 * (a + b)
    return _converged(params, Q_star, _r_of_Q(params, Q_star))


def sweep_S(params_base: SystemParams, S_grid: list[float]) -> list[tuple[float, SteadyResult]]:
    """steady_state over an increasing grid of saturation values.

    Step sizes that are unstable in the linear-limit sense produce a
    result with regime ``"unstable"`` instead of aborting the sweep.
    """
    if any(b <= a for a, b in zip(S_grid, S_grid[1:])):
        raise ValueError("S_grid must be strictly increasing")
    if S_grid and S_grid[0] < 0.0:
        raise ValueError("S values must be >= 0")
    out: list[tuple[float, SteadyResult]] = []
    for S in S_grid:
        p = SystemParams(rho2=params_base.rho2, sigma_g2=params_base.sigma_g2,
                         sigma_xi2=params_base.sigma_xi2, S=S, mu=params_base.mu)
        try:
            out.append((S, steady_state(p)))
        except StabilityError:
            out.append((S, SteadyResult(regime=REGIME_UNSTABLE)))
    return out
