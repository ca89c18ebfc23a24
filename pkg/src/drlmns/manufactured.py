"""Closed-form verification problem: exact solution, forcing, error norms.

The test flow on the unit square is

    u =  5 sin^2(pi x) sin(2 pi y) e^{-t}
    v = -5 sin(2 pi x) sin^2(pi y) e^{-t}
    p =  cos(pi x) sin(pi y) e^{-t}

which vanishes on the walls and is divergence-free (the 10 pi sin(pi x)
cos(pi x) sin(2 pi y) terms of u_x and v_y cancel).  The body force is
assembled from hand-derived analytic derivatives so forcing evaluation
stays cheap inside the time loop; a finite-difference cross-check of
every derivative lives in the test suite.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import CellField, MacGrid, VelocityField, apply_velocity_bc, project_mean_zero
from .operators import DiscreteNorms, inner_l2, norms

__all__ = [
    "exact_velocity",
    "exact_pressure",
    "velocity_time_derivative",
    "velocity_gradient",
    "velocity_laplacian",
    "pressure_gradient",
    "exact_convection",
    "forcing",
    "make_forcing",
    "forcing_sup_l2",
    "error_norms",
]

_PI = math.pi


def exact_velocity(x, y, t):
    """Exact velocity components at (x, y, t)."""
    e = np.exp(-t)
    u = 5.0 * np.sin(_PI * x) ** 2 * np.sin(2.0 * _PI * y) * e
    v = -5.0 * np.sin(2.0 * _PI * x) * np.sin(_PI * y) ** 2 * e
    return u, v


def exact_pressure(x, y, t):
    """Exact pressure at (x, y, t); its mean over the unit square is zero."""
    return np.cos(_PI * x) * np.sin(_PI * y) * np.exp(-t)


def velocity_time_derivative(x, y, t):
    u, v = exact_velocity(x, y, t)
    return -u, -v


def velocity_gradient(x, y, t):
    """First spatial derivatives (u_x, u_y, v_x, v_y)."""
    e = np.exp(-t)
    s2x, s2y = np.sin(2.0 * _PI * x), np.sin(2.0 * _PI * y)
    c2x, c2y = np.cos(2.0 * _PI * x), np.cos(2.0 * _PI * y)
    sx2 = np.sin(_PI * x) ** 2
    sy2 = np.sin(_PI * y) ** 2
    ux = 5.0 * _PI * s2x * s2y * e
    uy = 10.0 * _PI * sx2 * c2y * e
    vx = -10.0 * _PI * c2x * sy2 * e
    vy = -5.0 * _PI * s2x * s2y * e
    return ux, uy, vx, vy


def velocity_laplacian(x, y, t):
    e = np.exp(-t)
    s2x, s2y = np.sin(2.0 * _PI * x), np.sin(2.0 * _PI * y)
    c2x, c2y = np.cos(2.0 * _PI * x), np.cos(2.0 * _PI * y)
    pi2 = _PI**2
    lap_u = (10.0 * pi2 * c2x * s2y - 20.0 * pi2 * np.sin(_PI * x) ** 2 * s2y) * e
    lap_v = (20.0 * pi2 * s2x * np.sin(_PI * y) ** 2 - 10.0 * pi2 * s2x * c2y) * e
    return lap_u, lap_v


def pressure_gradient(x, y, t):
    e = np.exp(-t)
    px = -_PI * np.sin(_PI * x) * np.sin(_PI * y) * e
    py = _PI * np.cos(_PI * x) * np.cos(_PI * y) * e
    return px, py


def exact_convection(x, y, t):
    """Analytic (u . grad) u, used as the convection reference."""
    u, v = exact_velocity(x, y, t)
    ux, uy, vx, vy = velocity_gradient(x, y, t)
    return u * ux + v * uy, u * vx + v * vy


def forcing(x, y, t, nu):
    """Body force making the exact flow solve the momentum equation.

    The exact multiplier is identically 1, so the force is the plain
    Navier-Stokes residual u_t - nu lap(u) + (u . grad) u + grad(p).
    """
    ut, vt = velocity_time_derivative(x, y, t)
    lap_u, lap_v = velocity_laplacian(x, y, t)
    cx, cy = exact_convection(x, y, t)
    px, py = pressure_gradient(x, y, t)
    fx = ut - nu * lap_u + cx + px
    fy = vt - nu * lap_v + cy + py
    return fx, fy


def make_forcing(nu: float):
    """Forcing evaluator f(x, y, t) with the viscosity bound in."""

    def f(x, y, t):
        return forcing(x, y, t, nu)

    return f


def forcing_sup_l2(nu: float, grid: MacGrid, T: float, n_times: int = 64) -> float:
    """Estimate sup over [0, T] of the discrete L2 norm of the forcing.

    Samples the forcing at face points on ``grid`` at ``n_times`` equally
    spaced instants (endpoints included) and takes the maximum norm.
    """
    best = 0.0
    for t in np.linspace(0.0, T, n_times):
        f = VelocityField.sample(grid, lambda x, y: forcing(x, y, t, nu))
        best = max(best, math.sqrt(inner_l2(f, f, grid)))
    return best


def error_norms(state, t: float, grid: MacGrid) -> tuple[DiscreteNorms, float]:
    """Errors of a solver state against the exact solution at time t.

    The exact solution is sampled at native staggered locations.  The
    velocity error inherits the homogeneous wall values (both fields
    vanish there); the pressure error is measured modulo constants.
    Returns the velocity/pressure norms and the multiplier error q - 1.
    """
    exact = VelocityField.sample(grid, lambda x, y: exact_velocity(x, y, t))
    err_vel = apply_velocity_bc(state.velocity - exact)
    p_exact = CellField.sample(grid, lambda x, y: exact_pressure(x, y, t))
    err_p = project_mean_zero(state.pressure - p_exact)
    return norms(err_vel, err_p, grid), state.q - 1.0
