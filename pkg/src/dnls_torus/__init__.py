"""Pseudo-spectral DNLS on the torus with finite-time blowup verification."""
from .field import (
    Field,
    TorusGrid,
    antiderivative_from_zero,
    derivative,
    make_grid,
    norm,
    random_zero_mean,
)
from .functionals import (
    ProblemParams,
    blowup_functional,
    check_condition_i,
    choose_alpha,
    energy_E2,
    holder_majorant,
    lifespan_bound,
    ode_lower_bound,
    pairing_integral,
    total_density,
)
from .kernels import BACKEND
from .solver import (
    BlowupReport,
    SolverConfig,
    Trajectory,
    gauge_transform_trajectory,
    integrate,
    nonlinearity,
    step_ifrk4,
)
from .verify import CheckResult, run_checks

__all__ = [
    "BACKEND", "BlowupReport", "CheckResult", "Field", "ProblemParams", "SolverConfig",
    "TorusGrid", "Trajectory", "antiderivative_from_zero", "blowup_functional",
    "check_condition_i", "choose_alpha", "derivative", "energy_E2",
    "gauge_transform_trajectory", "holder_majorant", "integrate", "lifespan_bound",
    "make_grid", "nonlinearity", "norm", "ode_lower_bound", "pairing_integral",
    "random_zero_mean", "run_checks", "step_ifrk4", "total_density",
]

__version__ = "0.1.0"
