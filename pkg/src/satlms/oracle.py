"""Quadrature ground truth for the closed-form Gaussian moments.

Every closed form in :mod:`satlms.moments` is an integral against the
bivariate normal density of (d, y) with covariance
``rho2 * [[sigma_g2, r], [r, Q]]``.  This module evaluates those integrals
numerically, with no reference to the closed forms, so regressions in the
analytic expressions are caught by direct comparison.

The clipper makes the integrands non-smooth at y = +-S, so the y-axis is
split there and each smooth piece is integrated with Gauss-Legendre
nodes (tails truncated at 10 standard deviations, which discards Gaussian
mass of order 1e-23).  Moments without a clipper (d^2, d*y) use
Gauss-Hermite, which is exact for polynomial integrands.

Two-dimensional kinds are reduced to one dimension through the
conditional mean E[d | y] = (r / Q) * y.  A genuinely two-dimensional
tensor evaluation against the explicit joint density is also provided
(:func:`quad_moment_full2d`) as a cross-check of that reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy import integrate as _sint

from . import moments
from .core import CovarianceError, MacroState, SystemParams

KINDS = ("d2", "fy2", "dfy", "dy", "yfy")

# Truncation radius for the split Gauss-Legendre scheme, in standard
# deviations of the integrated marginal.
_TAIL_SIGMAS = 10.0


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature settings.

    ``nodes`` is the Gauss node count per axis/piece (>= 50 recommended for
    verification runs).  ``method="adaptive"`` switches to adaptive
    integration over [-10 sigma, 10 sigma] with absolute tolerance 1e-12,
    used as an internal consistency alternative to the split-node scheme.
    """

    nodes: int = 200
    method: str = "gauss"

    def __post_init__(self):
        if self.nodes < 1:
            raise ValueError("nodes must be >= 1")
        if self.method not in ("gauss", "adaptive"):
            raise ValueError(f"unknown method {self.method!r}")


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_GH_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _hermgauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GH_CACHE:
        _GH_CACHE[n] = np.polynomial.hermite.hermgauss(n)
    return _GH_CACHE[n]


def _gl_nodes(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights mapped to [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _gauss_expect(fn: Callable[[np.ndarray], np.ndarray], var: float, n: int) -> float:
    """E[fn(z)] for z ~ N(0, var), via Gauss-Hermite (smooth fn only).

    Only polynomial integrands are routed here, for which the rule is
    exact once n exceeds half the degree; node counts are capped well
    below where the Golub-Welsch weights overflow.
    """
    x, w = _hermgauss(min(max(n, 2), 128))
    z = math.sqrt(2.0 * var) * x
    return float(np.sum(w * fn(z)) / math.sqrt(math.pi))


def _check_covariance(params: SystemParams, state: MacroState) -> None:
    slack = 1e-12 * max(1.0, params.sigma_g2 * state.Q)
    if state.r * state.r > params.sigma_g2 * state.Q + slack:
        raise CovarianceError(
            f"r^2={state.r**2} exceeds sigma_g2*Q={params.sigma_g2 * state.Q}"
        )


def _split_expect(fn_mid: Callable[[np.ndarray], np.ndarray],
                  fn_tail: Callable[[np.ndarray], np.ndarray],
                  var_y: float, S: float, nodes: int) -> float:
    """integral of pdf(y) * (fn_mid on |y|<S, fn_tail on |y|>S), split at +-S.

    ``fn_mid``/``fn_tail`` are the full integrands excluding the pdf; both
    must be even in y (true for every clipped moment here: odd parts
    integrate to zero and are dropped analytically by the callers).
    """
    sd = math.sqrt(var_y)
    L = _TAIL_SIGMAS * sd

    def pdf(y):
        return np.exp(-y * y / (2.0 * var_y)) / math.sqrt(2.0 * math.pi * var_y)

    a = min(S, L)
    total = 0.0
    if a > 0.0:
        y, w = _gl_nodes(0.0, a, nodes)
        total += 2.0 * float(np.sum(w * fn_mid(y) * pdf(y)))
    if S < L:
        y, w = _gl_nodes(S, L, nodes)
        total += 2.0 * float(np.sum(w * fn_tail(y) * pdf(y)))
    return total


def _quad_adaptive(fn: Callable[[float], float], var_y: float, S: float) -> float:
    """Adaptive integration of fn(y) * pdf(y) over [-10 sd, 10 sd]."""
    sd = math.sqrt(var_y)
    L = _TAIL_SIGMAS * sd

    def integrand(y: float) -> float:
        return fn(y) * math.exp(-y * y / (2.0 * var_y)) / math.sqrt(2.0 * math.pi * var_y)

    pts = [p for p in (-S, S) if -L < p < L]
    val, _ = _sint.quad(integrand, -L, L, points=pts or None,
                        epsabs=1e-12, epsrel=1e-11, limit=400)
    return val


def quad_moment(kind: str, params: SystemParams, state: MacroState,
                cfg: QuadConfig | None = None) -> float:
    """Numerically evaluate one of the five Gaussian sample means.

    ``kind`` is one of ``d2 | fy2 | dfy | dy | yfy``.  Kinds involving d
    require the covariance to be positive semidefinite (r^2 <= sigma_g2*Q
    within 1e-12); the rank-one boundary is handled by the conditional-mean
    reduction, which is exact there.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown moment kind {kind!r}")
    cfg = cfg or QuadConfig()
    rho2, S = params.rho2, params.S
    Q, r = state.Q, state.r

    if kind == "d2":
        var_d = rho2 * params.sigma_g2
        if cfg.method == "adaptive":
            return _quad_adaptive(lambda d: d * d, var_d, math.inf)
        return _gauss_expect(lambda d: d * d, var_d, cfg.nodes)

    if kind in ("dfy", "dy"):
        _check_covariance(params, state)

    var_y = rho2 * Q
    if var_y == 0.0:
        # y is identically zero; every moment involving y or f(y) vanishes.
        return 0.0

    if kind == "dy":
        # E[d y] = (r / Q) E[y^2]; the y^2 expectation is evaluated
        # numerically so the identity is still being exercised.
        if cfg.method == "adaptive":
            ey2 = _quad_adaptive(lambda y: y * y, var_y, math.inf)
        else:
            ey2 = _gauss_expect(lambda y: y * y, var_y, cfg.nodes)
        return (r / Q) * ey2

    if math.isinf(S):
        if kind == "fy2" or kind == "yfy":
            if cfg.method == "adaptive":
                return _quad_adaptive(lambda y: y * y, var_y, math.inf)
            return _gauss_expect(lambda y: y * y, var_y, cfg.nodes)
        # dfy with no clipping is dy
        return quad_moment("dy", params, state, cfg)

    if S == 0.0:
        return 0.0

    if kind == "fy2":
        if cfg.method == "adaptive":
            return _quad_adaptive(lambda y: min(abs(y), S) ** 2, var_y, S)
        return _split_expect(lambda y: y * y, lambda y: np.full_like(y, S * S),
                             var_y, S, cfg.nodes)

    if kind == "yfy":
        if cfg.method == "adaptive":
            return _quad_adaptive(lambda y: y * math.copysign(min(abs(y), S), y),
                                  var_y, S)
        return _split_expect(lambda y: y * y, lambda y: S * y,
                             var_y, S, cfg.nodes)

    # dfy: E[d f(y)] = E[E[d|y] f(y)] = (r/Q) E[y f(y)]
    yfy = quad_moment("yfy", params, state, cfg)
    return (r / Q) * yfy


def quad_moment_full2d(kind: str, params: SystemParams, state: MacroState,
                       cfg: QuadConfig | None = None) -> float:
    """Tensor-grid evaluation of a 2-D moment against the joint density.

    Supports kinds ``dy`` and ``dfy``.  Unlike :func:`quad_moment`, no
    conditional-mean reduction is used: the explicit bivariate normal pdf
    is summed over a (d, y) grid, so agreement with the reduced path
    validates the completing-the-square step.  Requires a nondegenerate
    covariance (r^2 strictly below sigma_g2 * Q).
    """
    if kind not in ("dy", "dfy"):
        raise ValueError("full-2d evaluation supports kinds 'dy' and 'dfy' only")
    cfg = cfg or QuadConfig()
    _check_covariance(params, state)
    rho2, sg2, S = params.rho2, params.sigma_g2, params.S
    Q, r = state.Q, state.r
    var_y = rho2 * Q
    if var_y == 0.0:
        return 0.0
    det_core = sg2 * Q - r * r
    if det_core <= 0.0:
        # Rank-one support line d = (r/Q) y: the reduction is exact.
        return quad_moment(kind, params, state, cfg)

    var_d = rho2 * sg2
    sd_d, sd_y = math.sqrt(var_d), math.sqrt(var_y)
    norm = 1.0 / (2.0 * math.pi * rho2 * math.sqrt(det_core))
    denom = 2.0 * rho2 * det_core

    d_nodes, d_w = _gl_nodes(-12.0 * sd_d, 12.0 * sd_d, cfg.nodes)

    def piece(y_lo: float, y_hi: float, fy: Callable[[np.ndarray], np.ndarray]) -> float:
        if y_hi <= y_lo:
            return 0.0
        y_nodes, y_w = _gl_nodes(y_lo, y_hi, cfg.nodes)
        D = d_nodes[:, None]
        Y = y_nodes[None, :]
        pdf = norm * np.exp(-(Q * D * D - 2.0 * r * D * Y + sg2 * Y * Y) / denom)
        integrand = D * fy(Y) * pdf
        return float(d_w @ integrand @ y_w)

    L = _TAIL_SIGMAS * sd_y
    if kind == "dy" or math.isinf(S):
        return piece(-L, L, lambda y: y)
    a = min(S, L)
    total = piece(-a, a, lambda y: y)
    if S < L:
        total += piece(S, L, lambda y: np.full_like(y, S))
        total += piece(-L, -S, lambda y: np.full_like(y, -S))
    return total


_CLOSED_FORMS: dict[str, Callable[[SystemParams, MacroState], float]] = {
    "d2": lambda p, s: moments.m_d2(p),
    "fy2": lambda p, s: moments.m_fy2(p, s.Q),
    "dfy": lambda p, s: moments.m_dfy(p, s),
    "dy": lambda p, s: moments.m_dy(p, s.r),
    "yfy": lambda p, s: moments.m_yfy(p, s.Q),
}


def default_grid() -> list[tuple[SystemParams, MacroState]]:
    """The verification grid: all combinations of

    Q in {0.1, 1, 10}, r in {-0.9, 0, 0.9} * sigma_g * sqrt(Q),
    S in {0, 0.5, 1, 2, 5}, rho2 in {0.5, 1, 2}, sigma_g2 in {0.5, 1, 2}.
    """
    points = []
    for rho2 in (0.5, 1.0, 2.0):
        for sg2 in (0.5, 1.0, 2.0):
            for S in (0.0, 0.5, 1.0, 2.0, 5.0):
                p = SystemParams(rho2=rho2, sigma_g2=sg2, sigma_xi2=0.0, S=S, mu=0.5)
                for Q in (0.1, 1.0, 10.0):
                    for frac in (-0.9, 0.0, 0.9):
                        r = frac * math.sqrt(sg2 * Q)
                        points.append((p, MacroState(Q=Q, r=r)))
    return points


def _rel_err(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    if scale == 0.0:
        return 0.0
    return abs(a - b) / scale


@dataclass
class KindReport:
    kind: str
    max_rel_err: float = 0.0
    n_points: int = 0
    worst_point: dict | None = None

    def passed(self, tol: float) -> bool:
        return self.max_rel_err <= tol


@dataclass
class MomentCheckReport:
    """Outcome of comparing all closed forms against quadrature."""

    tol: float
    kinds: dict[str, KindReport] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(k.passed(self.tol) for k in self.kinds.values())

    def as_dict(self) -> dict:
        return {
            "tolerance": self.tol,
            "passed": self.passed,
            "kinds": {
                name: {
                    "max_rel_err": rep.max_rel_err,
                    "n_points": rep.n_points,
                    "passed": rep.passed(self.tol),
                    "worst_point": rep.worst_point,
                }
                for name, rep in self.kinds.items()
            },
        }


def check_all(cfg: QuadConfig | None = None,
              grid: Iterable[tuple[SystemParams, MacroState]] | None = None,
              tol: float = 1e-8) -> MomentCheckReport:
    """Compare every closed form against quadrature over the grid.

    Failures are recorded in the report, not raised.
    """
    cfg = cfg or QuadConfig()
    pts = list(grid) if grid is not None else default_grid()
    report = MomentCheckReport(tol=tol)
    for kind in KINDS:
        rep = KindReport(kind=kind)
        closed_fn = _CLOSED_FORMS[kind]
        for p, s in pts:
            closed = closed_fn(p, s)
            quad = quad_moment(kind, p, s, cfg)
            err = _rel_err(closed, quad)
            rep.n_points += 1
            if err > rep.max_rel_err:
                rep.max_rel_err = err
                rep.worst_point = {
                    "rho2": p.rho2, "sigma_g2": p.sigma_g2, "S": p.S,
                    "Q": s.Q, "r": s.r, "closed": closed, "quad": quad,
                }
        report.kinds[kind] = rep
    return report
