import math

import numpy as np
import pytest

from drlmns.grid import CellField, VelocityField, apply_velocity_bc, make_grid
from drlmns.manufactured import exact_convection, exact_velocity
from drlmns.operators import (
    advect,
    convection,
    divergence,
    gradient,
    h1semi_sq,
    inner_cells,
    inner_l2,
    laplacian,
    norms,
    trilinear_b,
)


def random_velocity(grid, rng):
    w = VelocityField.zeros(grid)
    w.u[1:-1, 1:-1] = rng.standard_normal(grid.u_shape)
    w.v[1:-1, 1:-1] = rng.standard_normal(grid.v_shape)
    return apply_velocity_bc(w)


def sample_exact(grid, t=0.0):
    return apply_velocity_bc(
        VelocityField.sample(grid, lambda x, y: exact_velocity(x, y, t))
    )


# ---------------------------------------------------------------- divergence


def test_divergence_constant_interior():
    g = make_grid(8, 8)
    w = VelocityField.zeros(g)
    w.u[1:-1, 1:-1] = 1.0
    w.v[1:-1, 1:-1] = 1.0
    w = apply_velocity_bc(w)
    d = divergence(w, g).values
    # Stencils not touching a wall see constant differences -> zero.
    assert np.all(d[1:-1, 1:-1] == 0.0)
    assert np.any(d[0, :] != 0.0)


def test_divergence_exact_for_linear_field():
    g = make_grid(9, 7)
    w = VelocityField.zeros(g)
    xu, yu = g.u_coords()
    xv, yv = g.v_coords()
    w.u[1:-1, 1:-1] = xu
    w.v[1:-1, 1:-1] = -yv
    d = divergence(w, g).values
    assert np.max(np.abs(d)) <= 1e-13


def test_divergence_of_exact_velocity_second_order():
    def max_div(n):
        g = make_grid(n, n)
        w = VelocityField.sample(g, lambda x, y: exact_velocity(x, y, 0.0))
        return np.max(np.abs(divergence(w, g).values))

    e16, e32, e64 = max_div(16), max_div(32), max_div(64)
    assert math.log2(e16 / e32) > 1.8
    assert math.log2(e32 / e64) > 1.9


# ------------------------------------------------------------------ gradient


def test_gradient_of_constant_is_zero():
    g = make_grid(6, 5)
    out = gradient(CellField(g, np.full(g.cell_shape, 2.5)), g)
    assert np.all(out.u == 0.0)
    assert np.all(out.v == 0.0)


def test_gradient_exact_for_linear_pressure():
    g = make_grid(8, 6)
    xc, _ = g.cell_coords()
    out = gradient(CellField(g, xc.copy()), g)
    assert np.allclose(out.u[2:-2, 1:-1], 1.0, atol=1e-13)
    assert np.all(out.v == 0.0)
    # Boundary-normal faces are constrained, the gradient leaves them zero.
    assert np.all(out.u[1, :] == 0.0)
    assert np.all(out.u[-2, :] == 0.0)


def test_gradient_divergence_adjointness():
    rng = np.random.default_rng(10)
    for _ in range(20):
        g = make_grid(int(rng.integers(3, 14)), int(rng.integers(3, 14)))
        p = CellField(g, rng.standard_normal(g.cell_shape))
        w = random_velocity(g, rng)
        lhs = inner_l2(gradient(p, g), w, g)
        rhs = inner_cells(p, divergence(w, g), g)
        assert abs(lhs + rhs) <= 1e-13 * max(abs(lhs), abs(rhs), 1e-30)


# ----------------------------------------------------------------- laplacian


def test_laplacian_zero_field():
    g = make_grid(5, 5)
    out = laplacian(apply_velocity_bc(VelocityField.zeros(g)), g)
    assert np.all(out.u == 0.0)
    assert np.all(out.v == 0.0)


def test_laplacian_exact_on_quadratic():
    # u = x(1-x), constant in y: the stencil is exact away from the y-walls
    # where reflection ghosts encode the wall value instead of constancy.
    g = make_grid(12, 10)
    w = VelocityField.zeros(g)
    xu, _ = g.u_coords()
    w.u[1:-1, 1:-1] = xu * (1.0 - xu)
    w = apply_velocity_bc(w)
    lap = laplacian(w, g)
    assert np.allclose(lap.u[2:-2, 2:-2], -2.0, atol=1e-12)


def test_laplacian_spd_and_seminorm():
    rng = np.random.default_rng(11)
    for _ in range(20):
        g = make_grid(int(rng.integers(3, 14)), int(rng.integers(3, 14)))
        w = random_velocity(g, rng)
        quad = inner_l2(-1.0 * laplacian(w, g), w, g)
        semi = h1semi_sq(w, g)
        assert quad > 0.0
        assert abs(quad - semi) <= 1e-12 * abs(semi)


def test_laplacian_symmetry():
    rng = np.random.default_rng(12)
    for _ in range(20):
        g = make_grid(int(rng.integers(3, 14)), int(rng.integers(3, 14)))
        a, b = random_velocity(g, rng), random_velocity(g, rng)
        lab = inner_l2(-1.0 * laplacian(a, g), b, g)
        lba = inner_l2(-1.0 * laplacian(b, g), a, g)
        assert abs(lab - lba) <= 1e-13 * max(abs(lab), abs(lba))


def _hand_cell_laplacian(grid):
    """5-point cell Laplacian with zero-flux closure, assembled by hand."""
    nx, ny = grid.nx, grid.ny
    n = nx * ny
    mat = np.zeros((n, n))
    for i in range(nx):
        for j in range(ny):
            row = i * ny + j
            for di, dj, h2 in ((1, 0, grid.hx**2), (-1, 0, grid.hx**2), (0, 1, grid.hy**2), (0, -1, grid.hy**2)):
                ii, jj = i + di, j + dj
                if 0 <= ii < nx and 0 <= jj < ny:
                    mat[row, ii * ny + jj] += 1.0 / h2
                    mat[row, row] -= 1.0 / h2
    return mat


def test_div_grad_matches_hand_assembled_matrix():
    g = make_grid(4, 4)
    hand = _hand_cell_laplacian(g)
    n = g.nx * g.ny
    built = np.zeros((n, n))
    for k in range(n):
        p = CellField(g, np.zeros(g.cell_shape))
        p.values.flat[k] = 1.0
        built[:, k] = divergence(gradient(p, g), g).values.ravel()
    assert np.array_equal(built, hand) or np.max(np.abs(built - hand)) <= 1e-12 / g.hx**2


# ---------------------------------------------------------------- convection


def test_convection_zero_field():
    g = make_grid(6, 6)
    out = convection(apply_velocity_bc(VelocityField.zeros(g)), g)
    assert np.all(out.u == 0.0)
    assert np.all(out.v == 0.0)


def test_convection_shear_field_cancels():
    # (u, v) = (y, 0): du/dx = 0 and the averaged v vanishes, so the
    # u-component is zero on interior stencils; v-component likewise.
    g = make_grid(8, 8)
    w = VelocityField.zeros(g)
    _, yu = g.u_coords()
    w.u[1:-1, 1:-1] = yu
    out = convection(w, g)
    assert np.max(np.abs(out.u[2:-2, 2:-2])) <= 1e-14
    assert np.max(np.abs(out.v[2:-2, 2:-2])) <= 1e-14


def test_convection_second_order_against_analytic():
    def max_err(n):
        g = make_grid(n, n)
        w = sample_exact(g)
        got = convection(w, g)
        ref_u = exact_convection(*g.u_coords(), 0.0)[0]
        ref_v = exact_convection(*g.v_coords(), 0.0)[1]
        eu = np.abs(got.u[2:-2, 1:-1] - ref_u[1:-1, :])
        ev = np.abs(got.v[1:-1, 2:-2] - ref_v[:, 1:-1])
        return max(eu.max(), ev.max())

    e16, e32, e64 = max_err(16), max_err(32), max_err(64)
    assert math.log2(e16 / e32) > 1.7
    assert math.log2(e32 / e64) > 1.8


def test_operator_linearity():
    rng = np.random.default_rng(13)
    g = make_grid(7, 9)
    f1, f2 = random_velocity(g, rng), random_velocity(g, rng)
    a, b = 2.25, -0.75
    combo = apply_velocity_bc(a * f1 + b * f2)
    for op in (lambda w: divergence(w, g).values,):
        lhs = op(combo)
        rhs = a * op(f1) + b * op(f2)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))
    for op in (lambda w: laplacian(w, g),):
        lhs, rhs = op(combo), a * op(f1) + b * op(f2)
        assert np.max(np.abs(lhs.u - rhs.u)) <= 1e-11
        assert np.max(np.abs(lhs.v - rhs.v)) <= 1e-11
    p1 = CellField(g, rng.standard_normal(g.cell_shape))
    p2 = CellField(g, rng.standard_normal(g.cell_shape))
    lhs = gradient(CellField(g, a * p1.values + b * p2.values), g)
    rhs = a * gradient(p1, g) + b * gradient(p2, g)
    assert np.max(np.abs(lhs.u - rhs.u)) <= 1e-12


# ------------------------------------------------------------ inner products


def test_inner_l2_face_count():
    g = make_grid(6, 4)
    w = VelocityField.zeros(g)
    w.u[2:-2, 1:-1] = 1.0
    w.v[1:-1, 2:-2] = 1.0
    expected = ((g.nx - 1) * g.ny + g.nx * (g.ny - 1)) * g.hx * g.hy
    assert inner_l2(w, w, g) == pytest.approx(expected, rel=1e-14)
    assert inner_l2(w, VelocityField.zeros(g), g) == 0.0


def test_inner_l2_grid_mismatch():
    a = VelocityField.zeros(make_grid(4, 4))
    b = VelocityField.zeros(make_grid(8, 8))
    with pytest.raises(ValueError):
        inner_l2(a, b, a.grid)


def test_inner_l2_sine_norm():
    # ||(sin(pi x) sin(pi y), 0)||^2 -> 1/4, confirmed independently by
    # 64-point Gauss-Legendre quadrature (exact to machine precision).
    def val(n):
        g = make_grid(n, n)
        w = VelocityField.zeros(g)
        xu, yu = g.u_coords()
        w.u[1:-1, 1:-1] = np.sin(np.pi * xu) * np.sin(np.pi * yu)
        return inner_l2(w, w, g)

    e16 = abs(val(16) - 0.25)
    e32 = abs(val(32) - 0.25)
    assert e16 <= 0.01
    assert math.log2(e16 / e32) > 1.8


# --------------------------------------------------------------------- norms


def test_norms_zero_inputs():
    g = make_grid(8, 8)
    out = norms(VelocityField.zeros(g), CellField.zeros(g, mean_zero=True), g)
    assert (out.l2_u, out.h1semi_u, out.h1_u, out.l2_p) == (0.0, 0.0, 0.0, 0.0)


def test_norms_self_difference():
    from drlmns.manufactured import error_norms
    from drlmns.stepper import DrlmState
    from drlmns.manufactured import exact_pressure

    g = make_grid(16, 16)
    t = 1.0
    state = DrlmState(
        velocity=sample_exact(g, t),
        pressure=CellField.sample(g, lambda x, y: exact_pressure(x, y, t)),
        q=1.0,
        n=8,
        t=t,
    )
    nrm, e_q = error_norms(state, t, g)
    assert nrm.l2_u <= 1e-14
    assert nrm.h1_u <= 1e-12
    assert nrm.l2_p <= 1e-14
    assert e_q == 0.0


def test_norms_h1_identity():
    rng = np.random.default_rng(14)
    g = make_grid(10, 12)
    w = random_velocity(g, rng)
    out = norms(w, CellField.zeros(g, mean_zero=True), g)
    assert out.h1_u**2 == pytest.approx(out.l2_u**2 + out.h1semi_u**2, rel=1e-14)


def test_norm_of_initial_velocity_converges_to_analytic():
    # Gauss-Legendre oracle (frozen): integral of |u(.,0)|^2 over the square
    # is exactly 75/8, so the norm tends to sqrt(75/8) ~ 3.06186.
    target = math.sqrt(75.0 / 8.0)

    def val(n):
        g = make_grid(n, n)
        return norms(sample_exact(g), CellField.zeros(g, mean_zero=True), g).l2_u

    e16 = abs(val(16) - target)
    e32 = abs(val(32) - target)
    e64 = abs(val(64) - target)
    assert e16 <= 0.05
    assert math.log2(e16 / e32) > 1.8
    assert math.log2(e32 / e64) > 1.8


# --------------------------------------------------------------- trilinear b


def test_trilinear_zero_arguments():
    rng = np.random.default_rng(15)
    g = make_grid(8, 8)
    a, c = random_velocity(g, rng), random_velocity(g, rng)
    zero = VelocityField.zeros(g)
    assert trilinear_b(a, c, zero, g) == 0.0
    assert trilinear_b(zero, c, a, g) == 0.0


def test_trilinear_advecting_argument_is_first():
    rng = np.random.default_rng(16)
    g = make_grid(8, 8)
    a, c, w = (random_velocity(g, rng) for _ in range(3))
    assert trilinear_b(a, c, w, g) == inner_l2(advect(a, c, g), w, g)


def test_trilinear_self_contraction_decays():
    # Continuous skew-symmetry makes b(u, u, u) = 0; the discrete value is
    # a quadrature defect that shrinks at second order.
    def val(n):
        g = make_grid(n, n)
        w = sample_exact(g)
        return abs(trilinear_b(w, w, w, g))

    v16, v32 = val(16), val(32)
    assert v16 < 1.0
    assert math.log2(v16 / v32) > 1.5
