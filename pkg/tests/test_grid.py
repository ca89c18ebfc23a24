import numpy as np
import pytest

from drlmns.grid import (
    CellField,
    VelocityField,
    apply_velocity_bc,
    make_grid,
    project_mean_zero,
)


def test_make_grid_spacing():
    g = make_grid(16, 16)
    assert g.hx == 0.0625
    assert g.hy == 0.0625


def test_make_grid_finest_study_size():
    g = make_grid(256, 256)
    assert g.hx == 1.0 / 256


def test_make_grid_rejects_degenerate():
    with pytest.raises(ValueError):
        make_grid(1, 4)
    with pytest.raises(ValueError):
        make_grid(4, 0)


def test_coordinates_follow_staggering():
    g = make_grid(4, 8)
    xu, yu = g.u_coords()
    assert xu[3, 0] == 3 * g.hx
    assert yu[0, 2] == (2 + 0.5) * g.hy
    xv, yv = g.v_coords()
    assert xv[1, 0] == 1.5 * g.hx
    assert yv[0, 5] == 5 * g.hy
    xc, yc = g.cell_coords()
    assert xc[2, 0] == 2.5 * g.hx
    assert yc[0, 7] == 7.5 * g.hy


def test_index_maps_are_bijections():
    g = make_grid(5, 3)
    seen = set()
    for i in range(g.nx + 1):
        for j in range(g.ny):
            k = g.u_flat(i, j)
            assert g.u_from_flat(k) == (i, j)
            seen.add(k)
    assert seen == set(range((g.nx + 1) * g.ny))
    seen = set()
    for i in range(g.nx):
        for j in range(g.ny + 1):
            k = g.v_flat(i, j)
            assert g.v_from_flat(k) == (i, j)
            seen.add(k)
    assert seen == set(range(g.nx * (g.ny + 1)))
    seen = set()
    for i in range(g.nx):
        for j in range(g.ny):
            k = g.cell_flat(i, j)
            assert g.cell_from_flat(k) == (i, j)
            seen.add(k)
    assert seen == set(range(g.nx * g.ny))


def test_bc_zeroes_normal_faces():
    g = make_grid(6, 6)
    w = VelocityField.zeros(g)
    w.u[1:-1, 1:-1] = 1.0
    w.v[1:-1, 1:-1] = 1.0
    w = apply_velocity_bc(w)
    assert np.all(w.u_all[0, :] == 0.0)
    assert np.all(w.u_all[-1, :] == 0.0)
    assert np.all(w.v_all[:, 0] == 0.0)
    assert np.all(w.v_all[:, -1] == 0.0)
    # Interior faces untouched.
    assert np.all(w.u_all[1:-1, :] == 1.0)


def test_bc_zero_field_stays_zero():
    g = make_grid(4, 4)
    w = apply_velocity_bc(VelocityField.zeros(g))
    assert np.all(w.u == 0.0)
    assert np.all(w.v == 0.0)


def test_bc_ghost_reflection():
    g = make_grid(5, 4)
    c = 3.7
    w = VelocityField.zeros(g)
    w.u[2:-2, 1] = c  # u(:, 0), the tangential u-row adjacent to the bottom wall
    w.v[1:-1, 2] = c  # v(:, 1), first v-row above the wall it crosses normally
    w = apply_velocity_bc(w)
    # Tangential ghost below the bottom wall mirrors the adjacent interior row.
    assert np.all(w.u[2:-2, 0] == -c)
    # Normal-direction ghost reflects the first interior row across the wall node.
    assert np.all(w.v[1:-1, 0] == -c)
    # Left-wall tangential ghosts mirror the wall-adjacent v column.
    assert np.all(w.v[0, :] == -w.v[1, :])


def test_bc_idempotent_bitwise():
    rng = np.random.default_rng(0)
    g = make_grid(7, 5)
    w = VelocityField(g, rng.standard_normal((g.nx + 3, g.ny + 2)), rng.standard_normal((g.nx + 2, g.ny + 3)))
    once = apply_velocity_bc(w)
    twice = apply_velocity_bc(once)
    assert np.array_equal(once.u, twice.u)
    assert np.array_equal(once.v, twice.v)


def test_project_mean_zero_constant():
    g = make_grid(4, 4)
    p = CellField(g, np.full(g.cell_shape, 5.0))
    out = project_mean_zero(p)
    assert np.all(out.values == 0.0)
    assert out.mean_zero


def test_project_mean_zero_idempotent_and_linear():
    rng = np.random.default_rng(1)
    g = make_grid(9, 6)
    f = CellField(g, rng.standard_normal(g.cell_shape))
    h = CellField(g, rng.standard_normal(g.cell_shape))
    once = project_mean_zero(f)
    twice = project_mean_zero(once)
    assert np.max(np.abs(twice.values - once.values)) <= 1e-15 * np.max(np.abs(f.values))
    combo = project_mean_zero(CellField(g, 2.5 * f.values - 0.5 * h.values))
    linear = 2.5 * project_mean_zero(f).values - 0.5 * project_mean_zero(h).values
    assert np.max(np.abs(combo.values - linear)) <= 1e-14 * np.max(np.abs(linear))


def test_project_mean_zero_flag_invariant():
    rng = np.random.default_rng(2)
    g = make_grid(12, 8)
    p = project_mean_zero(CellField(g, rng.standard_normal(g.cell_shape) * 40.0))
    total = abs(np.sum(p.values) * g.cell_area)
    assert total <= 1e-12 * np.max(np.abs(p.values)) * 1.0  # unit-square area


def test_project_mean_zero_leaves_zero_mean_samples():
    # cos(pi x) sin(pi y) has zero continuous mean; midpoint samples are
    # antisymmetric about x = 1/2, so the discrete mean vanishes too and
    # the projection changes nothing beyond rounding (far below the O(h^2)
    # quadrature budget).
    for n in (8, 16):
        g = make_grid(n, n)
        xc, yc = g.cell_coords()
        p = CellField(g, np.cos(np.pi * xc) * np.sin(np.pi * yc))
        shift = abs(project_mean_zero(p).values - p.values).max()
        assert shift <= 1e-14
