"""MAC staggered-grid geometry and field containers.

Grid layout on the unit square (nx x ny cells, hx = 1/nx, hy = 1/ny):

  pressure  p(i, j)  at cell centers     ((i+1/2)*hx, (j+1/2)*hy),  i=0..nx-1, j=0..ny-1
  u-velocity u(i, j) at vertical faces   (i*hx, (j+1/2)*hy),        i=0..nx,   j=0..ny-1
  v-velocity v(i, j) at horizontal faces ((i+1/2)*hx, j*hy),        i=0..nx-1, j=0..ny

Velocity arrays carry one ghost ring: storage index = logical index + 1,
so ``field.u[i + 1, j + 1]`` holds the logical value u(i, j).  Walls normal
to a component store the value 0 directly (the face sits on the wall);
walls tangential to a component are enforced through ghost values filled
by linear reflection, ghost = -(adjacent interior), which places the
interpolated wall value at exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MacGrid",
    "VelocityField",
    "CellField",
    "make_grid",
    "apply_velocity_bc",
    "project_mean_zero",
]


@dataclass(frozen=True)
class MacGrid:
    """Uniform staggered grid on [xmin, xmax] x [ymin, ymax]."""

    nx: int
    ny: int
    hx: float
    hy: float
    xmin: float = 0.0
    xmax: float = 1.0
    ymin: float = 0.0
    ymax: float = 1.0

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def u_shape(self) -> tuple[int, int]:
        """Logical u-face count (without ghosts)."""
        return (self.nx + 1, self.ny)

    @property
    def v_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny + 1)

    @property
    def cell_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def u_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of all u-faces, shape ``u_shape``."""
        x = self.xmin + self.hx * np.arange(self.nx + 1)
        y = self.ymin + self.hy * (np.arange(self.ny) + 0.5)
        return np.meshgrid(x, y, indexing="ij")

    def v_coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.xmin + self.hx * (np.arange(self.nx) + 0.5)
        y = self.ymin + self.hy * np.arange(self.ny + 1)
        return np.meshgrid(x, y, indexing="ij")

    def cell_coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.xmin + self.hx * (np.arange(self.nx) + 0.5)
        y = self.ymin + self.hy * (np.arange(self.ny) + 0.5)
        return np.meshgrid(x, y, indexing="ij")

    # Row-major flat index maps (logical indices, ghost-free).
    def u_flat(self, i: int, j: int) -> int:
        return i * self.ny + j

    def u_from_flat(self, k: int) -> tuple[int, int]:
        return divmod(k, self.ny)

    def v_flat(self, i: int, j: int) -> int:
        return i * (self.ny + 1) + j

    def v_from_flat(self, k: int) -> tuple[int, int]:
        return divmod(k, self.ny + 1)

    def cell_flat(self, i: int, j: int) -> int:
        return i * self.ny + j

    def cell_from_flat(self, k: int) -> tuple[int, int]:
        return divmod(k, self.ny)


def make_grid(nx: int, ny: int) -> MacGrid:
    """Create a MAC grid with nx x ny cells on the unit square.

    Rejects nx or ny < 2: a single row of cells leaves no interior
    velocity unknowns for one component.
    """
    if nx < 2 or ny < 2:
        raise ValueError(f"grid needs at least 2 cells per direction, got {nx}x{ny}")
    return MacGrid(nx=nx, ny=ny, hx=1.0 / nx, hy=1.0 / ny)


@dataclass
class VelocityField:
    """Face-centered velocity components with one ghost ring each.

    ``u`` has storage shape (nx+3, ny+2) and ``v`` (nx+2, ny+3); see the
    module docstring for the logical-to-storage index convention.
    """

    grid: MacGrid
    u: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, grid: MacGrid) -> "VelocityField":
        return cls(
            grid=grid,
            u=np.zeros((grid.nx + 3, grid.ny + 2)),
            v=np.zeros((grid.nx + 2, grid.ny + 3)),
        )

    @classmethod
    def sample(cls, grid: MacGrid, velocity_fn) -> "VelocityField":
        """Evaluate ``velocity_fn(x, y) -> (u, v)`` at native face points.

        Only logical faces are filled; ghosts stay zero until a boundary
        condition pass fills them.
        """
        out = cls.zeros(grid)
        xu, yu = grid.u_coords()
        out.u[1:-1, 1:-1] = velocity_fn(xu, yu)[0]
        xv, yv = grid.v_coords()
        out.v[1:-1, 1:-1] = velocity_fn(xv, yv)[1]
        return out

    # Views of the degrees of freedom actually solved for: u on interior
    # vertical faces (i=1..nx-1, all j), v on interior horizontal faces.
    @property
    def u_dof(self) -> np.ndarray:
        return self.u[2:-2, 1:-1]

    @property
    def v_dof(self) -> np.ndarray:
        return self.v[1:-1, 2:-2]

    @property
    def u_all(self) -> np.ndarray:
        """All logical u-faces including wall values, shape (nx+1, ny)."""
        return self.u[1:-1, 1:-1]

    @property
    def v_all(self) -> np.ndarray:
        return self.v[1:-1, 1:-1]

    def copy(self) -> "VelocityField":
        return VelocityField(self.grid, self.u.copy(), self.v.copy())

    def __add__(self, other: "VelocityField") -> "VelocityField":
        return VelocityField(self.grid, self.u + other.u, self.v + other.v)

    def __sub__(self, other: "VelocityField") -> "VelocityField":
        return VelocityField(self.grid, self.u - other.u, self.v - other.v)

    def __mul__(self, s: float) -> "VelocityField":
        return VelocityField(self.grid, self.u * s, self.v * s)

    __rmul__ = __mul__

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))


@dataclass
class CellField:
    """Cell-centered scalar (pressure, divergence), shape (nx, ny), no ghosts."""

    grid: MacGrid
    values: np.ndarray
    mean_zero: bool = False

    @classmethod
    def zeros(cls, grid: MacGrid, mean_zero: bool = False) -> "CellField":
        return cls(grid=grid, values=np.zeros(grid.cell_shape), mean_zero=mean_zero)

    @classmethod
    def sample(cls, grid: MacGrid, fn) -> "CellField":
        xc, yc = grid.cell_coords()
        return cls(grid=grid, values=np.asarray(fn(xc, yc), dtype=float))

    def mean(self) -> float:
        return float(np.mean(self.values))

    def copy(self) -> "CellField":
        return CellField(self.grid, self.values.copy(), self.mean_zero)

    def __add__(self, other: "CellField") -> "CellField":
        return CellField(self.grid, self.values + other.values)

    def __sub__(self, other: "CellField") -> "CellField":
        return CellField(self.grid, self.values - other.values)

    def __mul__(self, s: float) -> "CellField":
        return CellField(self.grid, self.values * s)

    __rmul__ = __mul__


def apply_velocity_bc(vel: VelocityField) -> VelocityField:
    """Return a copy with no-slip walls enforced.

    Normal components on wall faces are set to exactly zero; tangential
    ghost values are set by linear reflection (ghost = -interior) so the
    interpolated wall value vanishes.  Idempotent bitwise.
    """
    out = vel.copy()
    _apply_bc_inplace(out)
    return out


def _apply_bc_inplace(vel: VelocityField) -> None:
    # Every ghost mirrors its reflection across the wall with a sign flip.
    # In the component-normal direction the wall value itself is stored and
    # zeroed (the ghost beyond it reflects the first interior value); in the
    # tangential direction the ghost reflects the wall-adjacent value so the
    # interpolated wall velocity vanishes.
    u, v = vel.u, vel.v
    u[1, :] = 0.0
    u[-2, :] = 0.0
    u[0, :] = -u[2, :]
    u[-1, :] = -u[-3, :]
    u[:, 0] = -u[:, 1]
    u[:, -1] = -u[:, -2]
    v[:, 1] = 0.0
    v[:, -2] = 0.0
    v[:, 0] = -v[:, 2]
    v[:, -1] = -v[:, -3]
    v[0, :] = -v[1, :]
    v[-1, :] = -v[-2, :]


def project_mean_zero(p: CellField) -> CellField:
    """Remove the cell average, fixing the additive pressure constant."""
    out = CellField(p.grid, p.values - np.mean(p.values), mean_zero=True)
    return out
