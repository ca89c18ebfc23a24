"""Discrete differential operators and inner products on the MAC grid.

The operators are built so the discrete integration-by-parts identities
hold at machine precision:

  * gradient/divergence adjointness:  (G p, w) + (p, D w) = 0 for any
    cell field p and any wall-respecting velocity w;
  * the velocity H1 seminorm is *defined* through the same difference
    quotients as the 5-point Laplacian, so (-L w, w) = |w|_1^2 exactly.

These two identities are what make the time stepper's energy bookkeeping
close to solver precision instead of discretization accuracy.

Index convention: storage = logical + 1 on velocity arrays (one ghost
ring); see :mod:`drlmns.grid`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import CellField, MacGrid, VelocityField, project_mean_zero

__all__ = [
    "DiscreteNorms",
    "divergence",
    "gradient",
    "laplacian",
    "advect",
    "convection",
    "inner_l2",
    "inner_cells",
    "l2_norm_sq",
    "h1semi_sq",
    "norms",
    "trilinear_b",
]


@dataclass(frozen=True)
class DiscreteNorms:
    """Velocity L2 / H1 norms and pressure L2-modulo-constants norm."""

    l2_u: float
    h1semi_u: float
    h1_u: float
    l2_p: float


def _check_same_grid(a, b) -> None:
    if a.grid is not b.grid and a.grid != b.grid:
        raise ValueError("fields live on different grids")


def divergence(vel: VelocityField, grid: MacGrid) -> CellField:
    """Cell-centered divergence: face-flux differences per cell."""
    u, v = vel.u, vel.v
    du = (u[2:-1, 1:-1] - u[1:-2, 1:-1]) / grid.hx
    dv = (v[1:-1, 2:-1] - v[1:-1, 1:-2]) / grid.hy
    return CellField(grid, du + dv)


def gradient(p: CellField, grid: MacGrid) -> VelocityField:
    """Face-normal pressure differences on interior faces.

    Boundary-normal faces get zero (the velocity there is constrained,
    so the gradient never acts on them); ghost entries stay zero, making
    the output valid on the degrees of freedom only.
    """
    out = VelocityField.zeros(grid)
    pv = p.values
    out.u[2:-2, 1:-1] = (pv[1:, :] - pv[:-1, :]) / grid.hx
    out.v[1:-1, 2:-2] = (pv[:, 1:] - pv[:, :-1]) / grid.hy
    return out


def laplacian(vel: VelocityField, grid: MacGrid) -> VelocityField:
    """Component-wise 5-point Laplacian on interior faces.

    Requires boundary conditions applied: wall values stored as zeros and
    tangential ghosts filled by reflection.
    """
    hx2, hy2 = grid.hx**2, grid.hy**2
    u, v = vel.u, vel.v
    out = VelocityField.zeros(grid)
    out.u[2:-2, 1:-1] = (
        (u[3:-1, 1:-1] - 2.0 * u[2:-2, 1:-1] + u[1:-3, 1:-1]) / hx2
        + (u[2:-2, 2:] - 2.0 * u[2:-2, 1:-1] + u[2:-2, :-2]) / hy2
    )
    out.v[1:-1, 2:-2] = (
        (v[2:, 2:-2] - 2.0 * v[1:-1, 2:-2] + v[:-2, 2:-2]) / hx2
        + (v[1:-1, 3:-1] - 2.0 * v[1:-1, 2:-2] + v[1:-1, 1:-3]) / hy2
    )
    return out


def advect(adv: VelocityField, vel: VelocityField, grid: MacGrid) -> VelocityField:
    """Advective-form convection (adv . grad) vel at face points.

    Centered second-order differences; the cross component of the
    advecting field is averaged from its four surrounding faces.  Both
    inputs need boundary conditions applied (ghosts are read).
    """
    hx, hy = grid.hx, grid.hy
    out = VelocityField.zeros(grid)

    # u-component at interior u-faces (i=1..nx-1, j=0..ny-1):
    #   adv_u * du/dx + avg(adv_v) * du/dy
    au = adv.u[2:-2, 1:-1]
    dudx = (vel.u[3:-1, 1:-1] - vel.u[1:-3, 1:-1]) / (2.0 * hx)
    dudy = (vel.u[2:-2, 2:] - vel.u[2:-2, :-2]) / (2.0 * hy)
    av = adv.v
    vbar = 0.25 * (av[1:-2, 1:-2] + av[1:-2, 2:-1] + av[2:-1, 1:-2] + av[2:-1, 2:-1])
    out.u[2:-2, 1:-1] = au * dudx + vbar * dudy

    # v-component at interior v-faces (i=0..nx-1, j=1..ny-1).
    av2 = adv.v[1:-1, 2:-2]
    dvdx = (vel.v[2:, 2:-2] - vel.v[:-2, 2:-2]) / (2.0 * hx)
    dvdy = (vel.v[1:-1, 3:-1] - vel.v[1:-1, 1:-3]) / (2.0 * hy)
    auf = adv.u
    ubar = 0.25 * (auf[1:-2, 1:-2] + auf[1:-2, 2:-1] + auf[2:-1, 1:-2] + auf[2:-1, 2:-1])
    out.v[1:-1, 2:-2] = ubar * dvdx + av2 * dvdy
    return out


def convection(vel: VelocityField, grid: MacGrid) -> VelocityField:
    """Self-advection (vel . grad) vel."""
    return advect(vel, vel, grid)


def inner_l2(a: VelocityField, b: VelocityField, grid: MacGrid) -> float:
    """Discrete velocity L2 inner product over interior faces."""
    _check_same_grid(a, b)
    s = np.vdot(a.u_dof, b.u_dof) + np.vdot(a.v_dof, b.v_dof)
    return float(s) * grid.cell_area


def inner_cells(a: CellField, b: CellField, grid: MacGrid) -> float:
    """Discrete cell (pressure-space) L2 inner product."""
    _check_same_grid(a, b)
    return float(np.vdot(a.values, b.values)) * grid.cell_area


def l2_norm_sq(a: VelocityField, grid: MacGrid) -> float:
    return inner_l2(a, a, grid)


def h1semi_sq(vel: VelocityField, grid: MacGrid) -> float:
    """Squared H1 seminorm from face-difference quotients.

    Includes wall differences against the zero boundary value: in the
    component-normal direction wall values are stored zeros, and in the
    tangential direction the half-cell wall quotient 2*w/h is integrated
    over a half-cell strip.  By construction this equals (-L w, w).
    """
    hx, hy = grid.hx, grid.hy
    area = grid.cell_area
    u, v = vel.u, vel.v

    # u-component.  Normal (x) differences over i=0..nx-1 use the stored
    # wall zeros at i=0, nx.
    dux = (u[2:-1, 1:-1] - u[1:-2, 1:-1]) / hx
    total = np.vdot(dux, dux) * area
    duy = (u[2:-2, 2:-1] - u[2:-2, 1:-2]) / hy
    total += np.vdot(duy, duy) * area
    ub, ut = u[2:-2, 1], u[2:-2, -2]
    total += (np.vdot(ub, ub) + np.vdot(ut, ut)) * (2.0 * hx / hy)

    # v-component, mirrored.
    dvy = (v[1:-1, 2:-1] - v[1:-1, 1:-2]) / hy
    total += np.vdot(dvy, dvy) * area
    dvx = (v[2:-1, 2:-2] - v[1:-2, 2:-2]) / hx
    total += np.vdot(dvx, dvx) * area
    vl, vr = v[1, 2:-2], v[-2, 2:-2]
    total += (np.vdot(vl, vl) + np.vdot(vr, vr)) * (2.0 * hy / hx)
    return float(total)


def norms(err: VelocityField, perr: CellField, grid: MacGrid) -> DiscreteNorms:
    """Velocity and pressure error norms.

    The velocity field must have boundary conditions applied (error
    fields satisfy the same homogeneous walls as the solution).  The
    pressure error is measured modulo constants: the mean is removed
    before taking the cell-weighted norm.
    """
    l2sq = l2_norm_sq(err, grid)
    semisq = h1semi_sq(err, grid)
    pz = perr if perr.mean_zero else project_mean_zero(perr)
    return DiscreteNorms(
        l2_u=math.sqrt(l2sq),
        h1semi_u=math.sqrt(semisq),
        h1_u=math.sqrt(l2sq + semisq),
        l2_p=math.sqrt(inner_cells(pz, pz, grid)),
    )


def trilinear_b(a: VelocityField, c: VelocityField, w: VelocityField, grid: MacGrid) -> float:
    """Discrete trilinear convection form ((a . grad) c, w)."""
    return inner_l2(advect(a, c, grid), w, grid)
