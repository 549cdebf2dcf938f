"""Numerical laboratory for the degenerate Monge-Ampere equation
det D^2 u = M|u|^p and the Monge-Ampere eigenvalue problem on bounded
convex 2D domains: monotone wide-stencil solver, inverse iteration,
explicit barrier certification, and boundary-regularity diagnostics.
"""

__version__ = "0.1.0"

from .analysis import (
    GrowthProfile,
    W21Report,
    check_lipschitz,
    comparison_check,
    fit_log_exponent,
    pointwise_bound_check,
    profile_normal,
    w21_integral,
)
from .barriers import (
    BarrierReport,
    FlatLogSuper,
    LipschitzSub,
    LogSub,
    LogSuper,
    PowerSub,
    barrier_from_params,
    supersolution_det_bound,
    verify_subsolution,
)
from .eigen import (
    EigenOptions,
    EigenReport,
    InstabilityError,
    RayleighState,
    inverse_iteration,
    rayleigh_quotient,
    solve_power,
)
from .geometry import (
    BoundaryFrame,
    ConvexDomain,
    Disc,
    DomainError,
    Polygon,
    domain_from_dict,
    unit_disc,
    unit_square,
)
from .grid import Grid, GridFunction, build_grid, discrete_ma
from .solver import IterationError, SolveOptions, SolveReport, solve_dirichlet

__all__ = [
    "BarrierReport",
    "BoundaryFrame",
    "ConvexDomain",
    "Disc",
    "DomainError",
    "EigenOptions",
    "EigenReport",
    "FlatLogSuper",
    "Grid",
    "GridFunction",
    "GrowthProfile",
    "InstabilityError",
    "IterationError",
    "LipschitzSub",
    "LogSub",
    "LogSuper",
    "PowerSub",
    "RayleighState",
    "SolveOptions",
    "SolveReport",
    "W21Report",
    "barrier_from_params",
    "build_grid",
    "check_lipschitz",
    "comparison_check",
    "discrete_ma",
    "domain_from_dict",
    "fit_log_exponent",
    "inverse_iteration",
    "pointwise_bound_check",
    "profile_normal",
    "rayleigh_quotient",
    "solve_power",
    "supersolution_det_bound",
    "unit_disc",
    "unit_square",
    "verify_subsolution",
    "w21_integral",
    "__version__",
]
