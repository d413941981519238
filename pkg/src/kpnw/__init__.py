"""Normalized ground states of a generalized Kadomtsev-Petviashvili equation on a periodic box."""

from .fiber import (
    DegenerateFiber,
    NoSecondCriticalPoint,
    apply_scaling,
    coscale,
    critical_points_combined,
    critical_t_pure,
    critical_t_pure_supercritical,
    fiber_map,
    psi,
)
from .functionals import (
    Combined,
    FiberIntegrals,
    PurePower,
    energy,
    fiber_integrals,
    gn_quotient,
    lagrange_multiplier,
    pohozaev,
)
from .optimize import (
    SolveOptions,
    SolveResult,
    estimate_gn_constant,
    estimate_gn_constants,
    minimize_global,
    minimize_local_ball,
    minimize_pohozaev_manifold,
    mountain_pass_upper_bound,
    nonexistence_probe,
)
from .spectral import Field, Grid, make_grid
from .thresholds import GNConstants, K_and_a0, critical_mass, rho_max, threshold_report

__version__ = "0.1.0"
