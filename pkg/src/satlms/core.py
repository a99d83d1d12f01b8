"""Shared domain types, parameter validation, and elementary scalar quantities.

The system under study is an N-tap LMS adaptive filter whose output is
passed through a hard clipping nonlinearity before being compared with the
output of an unknown N-tap FIR system.  In the large-N limit the state of
the adaptive filter is captured by two macroscopic order parameters,

    Q = w'w / N   (energy of the adaptive filter)
    r = g'w / N   (overlap with the unknown system)

and every macroscopic formula is a function of (Q, r) and the scalar
parameters collected in :class:`SystemParams`.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass


class SatLmsError(Exception):
    """Base class for errors raised by this package."""


class InvalidParamError(SatLmsError):
    """A system parameter violates its admissible range."""

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"invalid parameter {field!r}: {reason}")


class NonFiniteError(SatLmsError):
    """The macroscopic state became NaN/Inf during integration."""

    def __init__(self, t: float, last_state: "MacroState"):
        self.t = t
        self.last_state = last_state
        super().__init__(
            f"non-finite macroscopic state at t={t}; last valid state {last_state}"
        )


class StabilityError(SatLmsError):
    """The parameters admit no mean-square stable fixed point."""


class SolverError(SatLmsError):
    """Root bracketing exhausted its scan range without an answer."""


class CovarianceError(SatLmsError):
    """The requested (Q, r) pair is not a valid second-moment pair."""


@dataclass(frozen=True)
class SystemParams:
    """Scalar parameters of the saturated-output LMS system.

    Attributes:
        rho2: input power scale (N times the per-sample input variance),
            held constant in the large-N limit; rho2 = 1 corresponds to the
            NLMS normalization.
        sigma_g2: per-tap variance of the unknown system's coefficients.
        sigma_xi2: variance of the additive background noise.
        S: saturation value of the output clipper.  ``math.inf`` is the
            admitted sentinel for the linear (unclipped) limit.
        mu: LMS step size.
    """

    rho2: float
    sigma_g2: float
    sigma_xi2: float = 0.0
    S: float = math.inf
    mu: float = 0.5

    @property
    def sigma_g(self) -> float:
        return math.sqrt(self.sigma_g2)

    @property
    def rho(self) -> float:
        return math.sqrt(self.rho2)


@dataclass(frozen=True)
class MacroState:
    """Macroscopic order parameters at one instant.

    Q is the normalized squared norm of the adaptive filter; r is its
    normalized overlap with the unknown system.  Any state produced by an
    actual filter satisfies the Cauchy-Schwarz bound r**2 <= sigma_g2 * Q.
    """

    Q: float
    r: float


@dataclass(frozen=True)
class MacroTrajectory:
    """Recorded time series of the macroscopic state and derived curves.

    All fields are equal-length tuples indexed by recorded time point.
    ``cos_theta`` holds NaN where the angle is undefined (Q = 0).
    ``q_clamped`` is True if round-off ever drove Q slightly negative and
    it was clamped back to zero.
    """

    t: tuple[float, ...]
    Q: tuple[float, ...]
    r: tuple[float, ...]
    mse: tuple[float, ...]
    msd_norm: tuple[float, ...]
    cos_theta: tuple[float, ...]
    q_clamped: bool = False

    def __len__(self) -> int:
        return len(self.t)

    def state(self, i: int) -> MacroState:
        return MacroState(Q=self.Q[i], r=self.r[i])


def validate(params: SystemParams) -> None:
    """Raise :class:`InvalidParamError` unless all parameter bounds hold.

    rho2, sigma_g2 and mu must be finite and positive; sigma_xi2 finite and
    nonnegative; S nonnegative (infinity allowed as the linear limit).
    """
    def bad(field: str, reason: str):
        raise InvalidParamError(field, reason)

    if not (math.isfinite(params.rho2) and params.rho2 > 0):
        bad("rho2", f"must be finite and > 0, got {params.rho2}")
    if not (math.isfinite(params.sigma_g2) and params.sigma_g2 > 0):
        bad("sigma_g2", f"must be finite and > 0, got {params.sigma_g2}")
    if not (math.isfinite(params.sigma_xi2) and params.sigma_xi2 >= 0):
        bad("sigma_xi2", f"must be finite and >= 0, got {params.sigma_xi2}")
    if math.isnan(params.S) or params.S < 0:
        bad("S", f"must be >= 0 (inf allowed), got {params.S}")
    if not (math.isfinite(params.mu) and params.mu > 0):
        bad("mu", f"must be finite and > 0, got {params.mu}")


def clip(x: float, S: float) -> float:
    """Hard limiter: identity on [-S, S], saturating to +-S outside."""
    if x > S:
        return S
    if x < -S:
        return -S
    return x


def cos_theta(state: MacroState, params: SystemParams,
              eps: float = 1e-9) -> float | None:
    """Cosine of the angle between the unknown system and the filter.

    Returns r / (sigma_g * sqrt(Q)), or None for the 0/0 case Q = 0.
    Values within ``eps`` outside [-1, 1] are clamped (round-off slack for
    integrated trajectories); beyond that the state is inconsistent and a
    ValueError is raised.
    """
    if state.Q == 0.0:
        return None
    c = state.r / (params.sigma_g * math.sqrt(state.Q))
    if c > 1.0:
        if c > 1.0 + eps:
            raise ValueError(f"cos_theta={c} exceeds 1 beyond slack {eps}")
        return 1.0
    if c < -1.0:
        if c < -1.0 - eps:
            raise ValueError(f"cos_theta={c} below -1 beyond slack {eps}")
        return -1.0
    return c


def resolve_threads(requested: int | None = None, jobs: int = 1) -> int:
    """Worker count for internal parallelism, capped by SATLMS_THREADS.

    ``requested=None`` defers to the environment variable; a value of 0
    (either place) means "auto" = min(cpu count, jobs).
    """
    if requested is None:
        raw = os.environ.get("SATLMS_THREADS", "0")
        try:
            requested = int(raw)
        except ValueError:
            requested = 0
    if requested <= 0:
        requested = os.cpu_count() or 1
    return max(1, min(requested, jobs))
