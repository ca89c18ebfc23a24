"""Self-contained invariant audit for the `check` command.

Runs the library's structural identities on small grids with seeded
random data: operator adjointness/symmetry, seminorm consistency,
quadratic sign structure and root accuracy, projector idempotence, and
the per-step energy/multiplier identities of a short manufactured run.
Each check returns (name, passed, detail); any failure should flip the
process exit code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CellField, VelocityField, apply_velocity_bc, make_grid, project_mean_zero
from .manufactured import exact_velocity, make_forcing
from .operators import (
    divergence,
    gradient,
    h1semi_sq,
    inner_cells,
    inner_l2,
    laplacian,
)
from .stepper import QuadraticCoefficients, RunConfig, positive_root, run_simulation
from .stokes import StokesOperator, dense_oracle_solve

__all__ = ["CheckResult", "run_audit"]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_velocity(grid, rng) -> VelocityField:
    w = VelocityField.zeros(grid)
    w.u[1:-1, 1:-1] = rng.standard_normal(grid.u_shape)
    w.v[1:-1, 1:-1] = rng.standard_normal(grid.v_shape)
    return apply_velocity_bc(w)


def _check_adjointness(rng, trials: int = 100) -> CheckResult:
    worst = 0.0
    for _ in range(trials):
        grid = make_grid(int(rng.integers(3, 13)), int(rng.integers(3, 13)))
        p = CellField(grid, rng.standard_normal(grid.cell_shape))
        w = _random_velocity(grid, rng)
        lhs = inner_l2(gradient(p, grid), w, grid)
        rhs = inner_cells(p, divergence(w, grid), grid)
        scale = max(abs(lhs), abs(rhs), 1e-30)
        worst = max(worst, abs(lhs + rhs) / scale)
    return CheckResult("gradient/divergence adjointness", worst <= 1e-13, f"max rel {worst:.2e}")


def _check_laplacian_symmetry(rng, trials: int = 100) -> CheckResult:
    worst = 0.0
    for _ in range(trials):
        grid = make_grid(int(rng.integers(3, 13)), int(rng.integers(3, 13)))
        a, b = _random_velocity(grid, rng), _random_velocity(grid, rng)
        lab = inner_l2(-1.0 * laplacian(a, grid), b, grid)
        lba = inner_l2(-1.0 * laplacian(b, grid), a, grid)
        worst = max(worst, abs(lab - lba) / max(abs(lab), abs(lba), 1e-30))
    return CheckResult("laplacian symmetry", worst <= 1e-13, f"max rel {worst:.2e}")


def _check_seminorm_consistency(rng, trials: int = 100) -> CheckResult:
    worst = 0.0
    for _ in range(trials):
        grid = make_grid(int(rng.integers(3, 13)), int(rng.integers(3, 13)))
        w = _random_velocity(grid, rng)
        quad = inner_l2(-1.0 * laplacian(w, grid), w, grid)
        semi = h1semi_sq(w, grid)
        worst = max(worst, abs(quad - semi) / max(abs(semi), 1e-30))
    return CheckResult("laplacian/seminorm consistency", worst <= 1e-12, f"max rel {worst:.2e}")


def _check_projector(rng, trials: int = 50) -> CheckResult:
    ok = True
    detail = ""
    for _ in range(trials):
        grid = make_grid(int(rng.integers(2, 11)), int(rng.integers(2, 11)))
        p = CellField(grid, rng.standard_normal(grid.cell_shape) * 10.0)
        once = project_mean_zero(p)
        twice = project_mean_zero(once)
        amax = float(np.max(np.abs(p.values))) or 1.0
        if abs(once.mean()) > 1e-14 * amax or np.max(np.abs(twice.values - once.values)) > 1e-15 * amax:
            ok = False
            detail = f"mean {once.mean():.2e} on {grid.nx}x{grid.ny}"
            break
    return CheckResult("mean projector idempotence", ok, detail or "ok")


def _check_quadratic(rng, trials: int = 200) -> CheckResult:
    worst = 0.0
    positive = True
    for _ in range(trials):
        theta = float(10.0 ** rng.uniform(-1, 2))
        a = theta + float(rng.uniform(0, 5.0))
        b = float(rng.standard_normal() * 10.0)
        c = -theta * float(rng.uniform(0.01, 4.0)) - float(rng.uniform(0, 2.0))
        q = positive_root(QuadraticCoefficients(a, b, c))
        positive = positive and q > 0
        res = abs(a * q * q + b * q + c)
        worst = max(worst, res / (8.0 * _EPS * max(abs(a * q * q), abs(b * q), abs(c))))
    ok = positive and worst <= 1.0
    return CheckResult("positive root: sign and 8-ulp residual", ok, f"worst residual/budget {worst:.2f}")


def _check_oracle(rng, trials: int = 5) -> CheckResult:
    grid = make_grid(8, 8)
    op = StokesOperator(grid=grid, alpha=16.0, nu=0.1, tol=1e-10)
    worst = 0.0
    for _ in range(trials):
        g = VelocityField.zeros(grid)
        g.u[2:-2, 1:-1] = rng.standard_normal((grid.nx - 1, grid.ny))
        g.v[1:-1, 2:-2] = rng.standard_normal((grid.nx, grid.ny - 1))
        it = op.solve(g)
        dn = dense_oracle_solve(op, g)
        worst = max(
            worst,
            float(np.max(np.abs(it.velocity.u - dn.velocity.u))),
            float(np.max(np.abs(it.velocity.v - dn.velocity.v))),
            float(np.max(np.abs(it.pressure.values - dn.pressure.values))),
        )
    return CheckResult("iterative vs dense Stokes oracle", worst <= 1e-8, f"max diff {worst:.2e}")


def _check_step_identities(tol: float) -> CheckResult:
    grid = make_grid(16, 16)
    cfg = RunConfig(
        grid=grid,
        theta=1.0,
        nu=0.1,
        tau=1 / 8,
        T=1.0,
        tol=tol,
        forcing=make_forcing(0.1),
        initial_velocity=lambda x, y: exact_velocity(x, y, 0.0),
    )
    _, diags = run_simulation(cfg)
    worst_e = max(d.energy_residual for d in diags)
    worst_q = max(d.qdyn_residual for d in diags)
    q_min = min(d.q for d in diags)
    ok = worst_e <= 10.0 * tol and worst_q <= 10.0 * tol and q_min > 0.0
    return CheckResult(
        "per-step energy and multiplier identities",
        ok,
        f"energy {worst_e:.2e}, multiplier {worst_q:.2e}, q_min {q_min:.4f}",
    )


def run_audit(tol: float = 1e-10, seed: int = 2024) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [
        _check_adjointness(rng),
        _check_laplacian_symmetry(rng),
        _check_seminorm_consistency(rng),
        _check_projector(rng),
        _check_quadratic(rng),
        _check_oracle(rng),
        _check_step_identities(tol),
    ]
