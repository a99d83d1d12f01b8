"""Closed-form Gaussian moments of the clipped-output error loop.

In the large-N limit the unknown-system output d and the filter output y
are jointly Gaussian with zero mean and covariance

    Cov(d, y) = rho2 * [[sigma_g2, r],
                        [r,        Q]].

Averaging the clipper f(y) = clamp(y, -S, S) over that Gaussian gives five
sample means in closed form.  With
``E = erf(S / sqrt(2 rho2 Q))`` and
``T = S * sqrt(2 rho2 Q / pi) * exp(-S^2 / (2 rho2 Q))``:

    <d^2>    = rho2 * sigma_g2
    <f(y)^2> = S^2 + (rho2 Q - S^2) E - T
    <d f(y)> = rho2 * r * E
    <d y>    = rho2 * r
    <y f(y)> = rho2 * Q * E

The mean-square error of e = d - f(y) + xi follows by expansion, and the
normalized mean-square deviation |g - w|^2 / N equals sigma_g2 - 2 r + Q.

Singular limits are built in: at Q = 0 (for S > 0) E -> 1 and T -> 0; at
S = 0 both vanish; at S = inf the formulas reduce to their linear-LMS
counterparts exactly.
"""

from __future__ import annotations

import math

from .core import MacroState, SystemParams

# Beyond this erf argument, 1 - erf underflows past double precision and
# the linear limit is exact to machine accuracy.
_ERF_ARG_CUTOFF = 40.0


def saturation_terms(S: float, rho2Q: float) -> tuple[float, float]:
    """The pair (E, T) shared by every clipped moment.

    E = erf(S / sqrt(2 rho2Q)), T = S * sqrt(2 rho2Q / pi) * exp(-S^2 / (2 rho2Q)),
    evaluated by their limits on the boundary: S = inf or rho2Q = 0 (with
    S > 0) give (1, 0); S = 0 gives (0, 0).
    """
    if S == 0.0:
        return 0.0, 0.0
    if math.isinf(S) or rho2Q <= 0.0:
        return 1.0, 0.0
    x = S / math.sqrt(2.0 * rho2Q)
    if x > _ERF_ARG_CUTOFF:
        return 1.0, 0.0
    return math.erf(x), S * math.sqrt(2.0 * rho2Q / math.pi) * math.exp(-x * x)


def effectively_linear(S: float, rho2Q: float) -> bool:
    """True where the clipper is transparent to double precision.

    Every formula with an S^2 contribution must switch to its linear-limit
    algebra here: past the erf cutoff the S^2 terms cancel exactly on
    paper but catastrophically in floating point.
    """
    if S == 0.0:
        return False
    if math.isinf(S):
        return True
    return rho2Q == 0.0 or S * S > 2.0 * _ERF_ARG_CUTOFF ** 2 * rho2Q


def m_d2(params: SystemParams) -> float:
    """Second moment of the unknown-system output: rho2 * sigma_g2."""
    return params.rho2 * params.sigma_g2


def m_fy2(params: SystemParams, Q: float) -> float:
    """Second moment of the clipped filter output.

    S^2 + (rho2 Q - S^2) E - T, computed in the regrouped form
    S^2 (1 - E) + rho2 Q E - T which has no cancellation; equals rho2 * Q
    in the linear limit and 0 at S = 0 or Q = 0.
    """
    S = params.S
    rho2Q = params.rho2 * Q
    if S == 0.0:
        return 0.0
    if effectively_linear(S, rho2Q):
        return rho2Q
    E, T = saturation_terms(S, rho2Q)
    x2 = S * S / (2.0 * rho2Q)
    if x2 < 1e-4:
        # rho2Q*E and T agree to O(x^2) and their difference cancels to
        # rounding noise; sum their series instead (error < 1e-13 here).
        corr = (2.0 * rho2Q / math.sqrt(math.pi)) * math.sqrt(x2) * x2 * (
            2.0 / 3.0 - 0.4 * x2 + x2 * x2 / 7.0)
        return S * S * (1.0 - E) + corr
    return S * S * (1.0 - E) + rho2Q * E - T


def m_dfy(params: SystemParams, state: MacroState) -> float:
    """Cross moment of the unknown-system output and the clipped output.

    rho2 * r * E; the clipper only attenuates the d-y correlation by the
    interior probability factor E.
    """
    E, _ = saturation_terms(params.S, params.rho2 * state.Q)
    return params.rho2 * state.r * E


def m_dy(params: SystemParams, r: float) -> float:
    """Cross moment of the two linear outputs: rho2 * r."""
    return params.rho2 * r


def m_yfy(params: SystemParams, Q: float) -> float:
    """Cross moment of the filter output with its clipped version.

    rho2 * Q * E; the tail contributions of y * f(y) cancel against the
    boundary terms of the interior piece.
    """
    S = params.S
    if math.isinf(S):
        return params.rho2 * Q
    rho2Q = params.rho2 * Q
    E, _ = saturation_terms(S, rho2Q)
    return rho2Q * E


def mse(params: SystemParams, state: MacroState) -> float:
    """Mean-square error of e = d - f(y) + xi at the given macro state.

    rho2 sigma_g2 + S^2 + (rho2 Q - 2 rho2 r - S^2) E - T + sigma_xi2,
    which is the expansion <d^2> + <f(y)^2> - 2 <d f(y)> + sigma_xi2 with
    the erf terms collected (evaluated with the S^2 pieces regrouped as
    S^2 (1 - E) for stability).  Always >= sigma_xi2 for admissible states.
    """
    rho2, S = params.rho2, params.S
    rho2Q = rho2 * state.Q
    if effectively_linear(S, rho2Q):
        return rho2 * params.sigma_g2 + rho2Q - 2.0 * rho2 * state.r + params.sigma_xi2
    E, T = saturation_terms(S, rho2Q)
    return (rho2 * params.sigma_g2 + S * S * (1.0 - E)
            + (rho2Q - 2.0 * rho2 * state.r) * E - T
            + params.sigma_xi2)


def msd_normalized(params: SystemParams, state: MacroState) -> float:
    """Mean-square deviation |g - w|^2 / N: sigma_g2 - 2 r + Q."""
    return params.sigma_g2 - 2.0 * state.r + state.Q
