"""Macroscopic theory and Monte Carlo simulation of saturated-output LMS.

An LMS adaptive filter whose output passes through a hard clipper at +-S
is analyzed at two levels: a finite-N Monte Carlo simulator of the actual
update loop, and the large-N deterministic theory for the order
parameters (Q, r) with closed-form MSE/MSD, steady states, and the exact
critical saturation value S_C = sigma_g * rho * sqrt(pi/2) below which
the filter norm diverges.
"""

from .core import (CovarianceError, InvalidParamError, MacroState,
                   MacroTrajectory, NonFiniteError, SatLmsError, SolverError,
                   StabilityError, SystemParams, clip, cos_theta, validate)
from .dynamics import IntegratorConfig, dqdt, drdt, integrate
from .moments import (m_d2, m_dfy, m_dy, m_fy2, m_yfy, mse, msd_normalized,
                      saturation_terms)
from .oracle import (KINDS, MomentCheckReport, QuadConfig, check_all,
                     default_grid, quad_moment, quad_moment_full2d)
from .simulator import (DISTRIBUTIONS, EnsembleStats, MicroState, SimConfig,
                        TrialRng, extract_macro, init_trial, run_ensemble,
                        step, step_given_input, trial_rngs)
from .steadystate import (SteadyResult, asymptotic_cos_theta, asymptotic_mse,
                          critical_S, steady_state, sweep_S)

__version__ = "0.1.0"

__all__ = [
    "CovarianceError", "InvalidParamError", "MacroState", "MacroTrajectory",
    "NonFiniteError", "SatLmsError", "SolverError", "StabilityError",
    "SystemParams", "clip", "cos_theta", "validate",
    "IntegratorConfig", "dqdt", "drdt", "integrate",
    "m_d2", "m_dfy", "m_dy", "m_fy2", "m_yfy", "mse", "msd_normalized",
    "saturation_terms",
    "KINDS", "MomentCheckReport", "QuadConfig", "check_all", "default_grid",
    "quad_moment", "quad_moment_full2d",
    "DISTRIBUTIONS", "EnsembleStats", "MicroState", "SimConfig", "TrialRng",
    "extract_macro", "init_trial", "run_ensemble", "step", "step_given_input",
    "trial_rngs",
    "SteadyResult", "asymptotic_cos_theta", "asymptotic_mse", "critical_S",
    "steady_state", "sweep_S",
    "__version__",
]
