"""Incompressible Navier-Stokes in 2D with a regularized-multiplier time stepper.

The package couples a MAC staggered-grid finite-difference space
discretization with a first-order scheme that treats convection
explicitly and restores unconditional stability through a scalar
Lagrange multiplier solved from a per-step quadratic.  Each step costs
two constant-coefficient generalized Stokes solves sharing one cached
operator factorization.
"""

from .grid import CellField, MacGrid, VelocityField, apply_velocity_bc, make_grid, project_mean_zero
from .operators import DiscreteNorms, divergence, gradient, inner_l2, laplacian, norms
from .stepper import (
    DrlmState,
    RunConfig,
    StepDiagnostics,
    drlm_step,
    multiplier_bound_c0,
    positive_root,
    quadratic_coefficients,
    run_simulation,
)
from .stokes import StokesOperator, StokesSolution, dense_oracle_solve

__version__ = "0.1.0"

__all__ = [
    "CellField",
    "MacGrid",
    "VelocityField",
    "apply_velocity_bc",
    "make_grid",
    "project_mean_zero",
    "DiscreteNorms",
    "divergence",
    "gradient",
    "inner_l2",
    "laplacian",
    "norms",
    "DrlmState",
    "RunConfig",
    "StepDiagnostics",
    "drlm_step",
    "multiplier_bound_c0",
    "positive_root",
    "quadratic_coefficients",
    "run_simulation",
    "StokesOperator",
    "StokesSolution",
    "dense_oracle_solve",
    "__version__",
]
