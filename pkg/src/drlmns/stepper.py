"""First-order time stepper with a dynamically regularized Lagrange multiplier.

One step advances (u, p, q) by

  1. solving two constant-coefficient generalized Stokes systems with
     alpha = 1/tau: one driven by u^n/tau + f(t_{n+1}), one by the
     negated explicit convection -(u^n . grad) u^n;
  2. assembling a scalar quadratic a q^2 + b q + c = 0 whose coefficients
     couple the two partial solutions through the discrete energy
     balance (a > theta and c < 0 always, so a unique positive root
     exists);
  3. recombining u^{n+1} = u1 + q u2 and p^{n+1} = p1 + q p2.

The convection field is computed once per step and reused both as the
second right-hand side and inside the quadratic's b coefficient, which
keeps the algebra between the linear solves and the scalar equation
exact.  Per-step diagnostics check two identities that the scheme
satisfies to solver precision: the kinetic-energy balance and the
multiplier-dynamics balance (the discrete form of the latter keeps the
convection work (N(u^n), u^n) and the term (p^{n+1}, D u^n), which only
vanish for the continuous operators).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grid import CellField, MacGrid, VelocityField, apply_velocity_bc, project_mean_zero
from .operators import (
    convection,
    divergence,
    gradient,
    h1semi_sq,
    inner_cells,
    inner_l2,
    l2_norm_sq,
    laplacian,
)
from .stokes import StokesNonConvergence, StokesOperator, StokesSolution

__all__ = [
    "DrlmState",
    "QuadraticCoefficients",
    "StepDiagnostics",
    "RunConfig",
    "SimulationAborted",
    "quadratic_coefficients",
    "positive_root",
    "drlm_step",
    "momentum_residual",
    "multiplier_bound_c0",
    "run_simulation",
]


@dataclass
class DrlmState:
    """Solution triple (velocity, pressure, multiplier) at step n."""

    velocity: VelocityField
    pressure: CellField
    q: float
    n: int
    t: float


@dataclass(frozen=True)
class QuadraticCoefficients:
    """Coefficients of the multiplier equation a q^2 + b q + c = 0."""

    a: float
    b: float
    c: float


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step audit quantities.

    Residuals are normalized by the largest constituent term of their
    identity, so they compare directly against the solver tolerance.
    """

    step: int
    time: float
    q: float
    energy_residual: float
    qdyn_residual: float
    div_inf: float
    quad_residual: float
    stokes_iterations: tuple[int, int]


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one simulation on a fixed grid.

    ``forcing(x, y, t) -> (fx, fy)`` and ``initial_velocity(x, y) ->
    (u, v)`` must accept numpy arrays; ``None`` means zero.
    """

    grid: MacGrid
    theta: float
    nu: float
    tau: float
    T: float
    tol: float = 1e-10
    max_iter: int = 500
    forcing: Callable | None = None
    initial_velocity: Callable | None = None

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.tau <= 0 or self.T <= 0:
            raise ValueError("tau and T must be positive")
        n = round(self.T / self.tau)
        if n < 1 or abs(n * self.tau - self.T) > 0.5 * np.spacing(self.T):
            raise ValueError(f"tau={self.tau} does not uniformly partition T={self.T}")

    @property
    def n_steps(self) -> int:
        return round(self.T / self.tau)


class SimulationAborted(RuntimeError):
    """A step failed; carries the partial trajectory for post-mortem."""

    def __init__(self, step: int, state: DrlmState, diagnostics: list[StepDiagnostics], cause: Exception):
        super().__init__(f"step {step} failed: {cause}")
        self.step = step
        self.state = state
        self.diagnostics = diagnostics
        self.cause = cause


def quadratic_coefficients(
    state: DrlmState,
    u1: StokesSolution,
    u2: StokesSolution,
    conv: VelocityField,
    cfg: RunConfig,
) -> QuadraticCoefficients:
    """Assemble the multiplier quadratic from the two partial solves.

    ``conv`` must be the same convection field whose negation drove the
    second solve; reusing it keeps the quadratic algebraically exact.
    """
    grid = cfg.grid
    a = cfg.theta + 0.5 * l2_norm_sq(u2.velocity, grid) + cfg.tau * cfg.nu * h1semi_sq(u2.velocity, grid)
    diff = u1.velocity - state.velocity
    b = -inner_l2(diff, u2.velocity, grid) - cfg.tau * inner_l2(conv, u1.velocity, grid)
    c = -cfg.theta * state.q**2 - 0.5 * l2_norm_sq(diff, grid)
    if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(c)):
        raise ValueError(f"non-finite quadratic coefficients ({a}, {b}, {c})")
    return QuadraticCoefficients(a=a, b=b, c=c)


def positive_root(coef: QuadraticCoefficients) -> float:
    """Unique positive root of a q^2 + b q + c = 0 for a > 0, c < 0.

    Uses the cancellation-free branch: the discriminant b^2 - 4ac is a
    sum of non-negative terms, and the root formula never subtracts
    nearly equal quantities.
    """
    a, b, c = coef.a, coef.b, coef.c
    if a <= 0.0 or c >= 0.0:
        raise ValueError(f"expected a > 0 and c < 0, got a={a}, c={c} (corrupted state?)")
    s = math.sqrt(b * b - 4.0 * a * c)
    if b <= 0.0:
        return (-b + s) / (2.0 * a)
    return -2.0 * c / (b + s)


def multiplier_bound_c0(u0_l2: float, cf: float, T: float) -> float:
    """Uniform multiplier bound valid for theta >= 1 and any step size.

    ``u0_l2`` is the L2 norm of the initial velocity and ``cf`` the sup
    over time of the forcing L2 norm.
    """
    if u0_l2 < 0 or cf < 0 or T < 0:
        raise ValueError("inputs must be non-negative")
    cft = 2.0 * cf * T
    return math.sqrt(1.0 + (u0_l2**2 + cft * (cft + u0_l2 + math.sqrt(2.0))) / 2.0)


def _sample_forcing(cfg: RunConfig, t: float) -> VelocityField:
    if cfg.forcing is None:
        return VelocityField.zeros(cfg.grid)
    return VelocityField.sample(cfg.grid, lambda x, y: cfg.forcing(x, y, t))


def _normalized(residual: float, terms: Sequence[float]) -> float:
    scale = max((abs(t) for t in terms), default=0.0)
    if scale == 0.0:
        return abs(residual)
    return abs(residual) / scale


def drlm_step(
    state: DrlmState,
    cfg: RunConfig,
    stokes: StokesOperator,
) -> tuple[DrlmState, StepDiagnostics]:
    """Advance one step; returns the new state and its diagnostics."""
    grid, tau, theta, nu = cfg.grid, cfg.tau, cfg.theta, cfg.nu
    t_new = tau * (state.n + 1)

    conv = convection(state.velocity, grid)
    f_field = _sample_forcing(cfg, t_new)
    g1 = (1.0 / tau) * state.velocity + f_field
    g2 = -1.0 * conv
    try:
        sol1 = stokes.solve(g1)
        sol2 = stokes.solve(g2)
    except StokesNonConvergence as e:
        raise StokesNonConvergence(f"step {state.n + 1}: {e}", e.residual_history) from e

    coef = quadratic_coefficients(state, sol1, sol2, conv, cfg)
    q_new = positive_root(coef)
    quad_res = _normalized(
        coef.a * q_new**2 + coef.b * q_new + coef.c,
        (coef.a * q_new**2, coef.b * q_new, coef.c),
    )

    vel_new = sol1.velocity + q_new * sol2.velocity
    p_new = project_mean_zero(sol1.pressure + q_new * sol2.pressure)

    # Kinetic-energy balance: dK/tau + theta dq^2/tau + nu |u|_1^2 = (f, u).
    k_new = l2_norm_sq(vel_new, grid)
    k_old = l2_norm_sq(state.velocity, grid)
    semi_new = h1semi_sq(vel_new, grid)
    semi_old = h1semi_sq(state.velocity, grid)
    t_kin = (k_new - k_old) / (2.0 * tau)
    t_mult = theta * (q_new**2 - state.q**2) / tau
    t_visc = nu * semi_new
    t_force = inner_l2(f_field, vel_new, grid)
    energy_res = _normalized(t_kin + t_mult + t_visc - t_force, (t_kin, t_mult, t_visc, t_force))

    # Multiplier-dynamics balance, discrete form.  Relative to its
    # continuous counterpart it keeps the convection work against u^n
    # and the pressure coupling with div u^n (nonzero for the sampled
    # initial field), which the continuous operators annihilate.
    diff = vel_new - state.velocity
    d_sq = l2_norm_sq(diff, grid)
    semi_diff = h1semi_sq(diff, grid)
    t_fd = inner_l2(f_field, diff, grid)
    t_dsq = d_sq / (2.0 * tau)
    t_visc_d = 0.5 * nu * (semi_new - semi_old + semi_diff)
    t_convwork = q_new * inner_l2(conv, state.velocity, grid)
    t_pdiv = inner_cells(p_new, divergence(state.velocity, grid), grid)
    qdyn_res = _normalized(
        t_mult - (t_fd - t_dsq - t_visc_d + t_convwork - t_pdiv),
        (t_mult, t_fd, t_dsq, t_visc_d, t_convwork, t_pdiv),
    )

    div_new = divergence(vel_new, grid)
    diag = StepDiagnostics(
        step=state.n + 1,
        time=t_new,
        q=q_new,
        energy_residual=energy_res,
        qdyn_residual=qdyn_res,
        div_inf=float(np.max(np.abs(div_new.values))),
        quad_residual=quad_res,
        stokes_iterations=(sol1.iterations, sol2.iterations),
    )
    new_state = DrlmState(velocity=vel_new, pressure=p_new, q=q_new, n=state.n + 1, t=t_new)
    return new_state, diag


def momentum_residual(prev: DrlmState, new: DrlmState, cfg: RunConfig) -> float:
    """Normalized residual of the coupled momentum equation at one step.

    Re-evaluates (u^{n+1}-u^n)/tau - nu L u^{n+1} + q^{n+1} N(u^n)
    + G p^{n+1} - f(t_{n+1}) with the explicit stencils; the recombined
    solution satisfies this to solver precision, which certifies that
    the two-solve splitting reproduces the coupled system.
    """
    grid, tau = cfg.grid, cfg.tau
    f_field = _sample_forcing(cfg, new.t)
    conv = convection(prev.velocity, grid)
    res = (
        (1.0 / tau) * (new.velocity - prev.velocity)
        - cfg.nu * laplacian(new.velocity, grid)
        + new.q * conv
        + gradient(new.pressure, grid)
        - f_field
    )
    masked = VelocityField.zeros(grid)
    masked.u[2:-2, 1:-1] = res.u[2:-2, 1:-1]
    masked.v[1:-1, 2:-2] = res.v[1:-1, 2:-2]
    scale = max(
        math.sqrt(l2_norm_sq(f_field, grid)),
        math.sqrt(l2_norm_sq(prev.velocity, grid)) / tau,
        1e-300,
    )
    return math.sqrt(l2_norm_sq(masked, grid)) / scale


def run_simulation(
    cfg: RunConfig,
    observer: Callable[[DrlmState, StepDiagnostics], None] | None = None,
) -> tuple[DrlmState, list[StepDiagnostics]]:
    """Run round(T/tau) steps from the sampled initial state.

    The initial multiplier is 1 and the initial pressure slot is zero
    (the first step never reads it).  ``observer`` is called after every
    step.  On a solver failure the partial trajectory is attached to the
    raised :class:`SimulationAborted`.
    """
    grid = cfg.grid
    if cfg.initial_velocity is None:
        vel0 = VelocityField.zeros(grid)
    else:
        vel0 = VelocityField.sample(grid, cfg.initial_velocity)
    state = DrlmState(
        velocity=apply_velocity_bc(vel0),
        pressure=CellField.zeros(grid, mean_zero=True),
        q=1.0,
        n=0,
        t=0.0,
    )
    stokes = StokesOperator(grid=grid, alpha=1.0 / cfg.tau, nu=cfg.nu, tol=cfg.tol, max_iter=cfg.max_iter)
    diagnostics: list[StepDiagnostics] = []
    for n in range(cfg.n_steps):
        try:
            state, diag = drlm_step(state, cfg, stokes)
        except (StokesNonConvergence, FloatingPointError, ValueError) as e:
            raise SimulationAborted(step=n + 1, state=state, diagnostics=diagnostics, cause=e) from e
        diagnostics.append(diag)
        if observer is not None:
            observer(state, diag)
    return state, diagnostics
