"""Staggered cavity grid and the discrete calculus built on it.

The fluid occupies the rectangle (0, Lx) x (-Lz, 0).  Velocity components
live on cell faces (MAC layout), pressure at cell centers.  The elastic
interface Omega is the top edge z = 0; the remaining three edges form the
rigid wall S.  Plate deflections are sampled at the x-positions of the top
w-faces (cell centers of the plate interval), so the fluid/plate trace map
is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GeometryConfig:
    n_x: int = 16
    n_z: int = 16
    L_x: float = 1.0
    L_z: float = 1.0


@dataclass(frozen=True)
class Grid:
    """Uniform MAC grid on (0,Lx) x (-Lz,0) with the plate along the top edge."""

    n_x: int
    n_z: int
    L_x: float
    L_z: float
    h_x: float
    h_z: float

    @property
    def shape_u(self):
        # x-velocity faces, including the two wall columns i=0 and i=n_x
        return (self.n_x + 1, self.n_z)

    @property
    def shape_w(self):
        # z-velocity faces, including bottom wall row j=0 and top (Omega) row j=n_z
        return (self.n_x, self.n_z + 1)

    @property
    def shape_p(self):
        return (self.n_x, self.n_z)

    @property
    def n_plate(self):
        return self.n_x

    def plate_x(self):
        """Plate sample abscissae: cell centers of (0, Lx)."""
        return (np.arange(self.n_x) + 0.5) * self.h_x

    def cell_centers(self):
        x = (np.arange(self.n_x) + 0.5) * self.h_x
        z = -self.L_z + (np.arange(self.n_z) + 0.5) * self.h_z
        return np.meshgrid(x, z, indexing="ij")

    def u_face_coords(self):
        x = np.arange(self.n_x + 1) * self.h_x
        z = -self.L_z + (np.arange(self.n_z) + 0.5) * self.h_z
        return np.meshgrid(x, z, indexing="ij")

    def w_face_coords(self):
        x = (np.arange(self.n_x) + 0.5) * self.h_x
        z = -self.L_z + np.arange(self.n_z + 1) * self.h_z
        return np.meshgrid(x, z, indexing="ij")

    def grid_key(self) -> str:
        return f"{self.n_x}x{self.n_z}_{self.L_x:.12g}x{self.L_z:.12g}"


def build_grid(config: GeometryConfig) -> Grid:
    if config.n_x < 4 or config.n_z < 4:
        raise GridError("grid too coarse: need n_x, n_z >= 4")
    if config.L_x <= 0 or config.L_z <= 0:
        raise GridError("domain extents must be positive")
    return Grid(
        n_x=config.n_x,
        n_z=config.n_z,
        L_x=config.L_x,
        L_z=config.L_z,
        h_x=config.L_x / config.n_x,
        h_z=config.L_z / config.n_z,
    )


@dataclass
class VelocityField:
    """MAC velocity: u on vertical faces, w on horizontal faces (boundary rows included)."""

    grid: Grid
    u: np.ndarray = None
    w: np.ndarray = None

    def __post_init__(self):
        if self.u is None:
            self.u = np.zeros(self.grid.shape_u)
        if self.w is None:
            self.w = np.zeros(self.grid.shape_w)
        if self.u.shape != self.grid.shape_u or self.w.shape != self.grid.shape_w:
            raise GridError("velocity component shape mismatch with grid")

    def copy(self):
        return VelocityField(self.grid, self.u.copy(), self.w.copy())

    def __add__(self, other):
        return VelocityField(self.grid, self.u + other.u, self.w + other.w)

    def __sub__(self, other):
        return VelocityField(self.grid, self.u - other.u, self.w - other.w)

    def __mul__(self, c: float):
        return VelocityField(self.grid, c * self.u, c * self.w)

    __rmul__ = __mul__


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray = None

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros(self.grid.shape_p)
        if self.values.shape != self.grid.shape_p:
            raise GridError("scalar field shape mismatch with grid")


def discrete_div(v: VelocityField, g: Grid) -> ScalarField:
    """Cell-centered divergence; uses the stored boundary faces directly."""
    if v.grid is not g and v.grid != g:
        raise GridError("field/grid mismatch")
    d = (v.u[1:, :] - v.u[:-1, :]) / g.h_x + (v.w[:, 1:] - v.w[:, :-1]) / g.h_z
    return ScalarField(g, d)


def discrete_grad(p: ScalarField, g: Grid) -> VelocityField:
    """Face-centered gradient of a cell-centered scalar; zero on boundary faces."""
    out = VelocityField(g)
    out.u[1:-1, :] = (p.values[1:, :] - p.values[:-1, :]) / g.h_x
    out.w[:, 1:-1] = (p.values[:, 1:] - p.values[:, :-1]) / g.h_z
    return out


@dataclass
class BoundaryData:
    """Dirichlet velocity data on the cavity boundary.

    Only the normal component on Omega (the top w-face row) is ever nonzero in
    this model; tangential components vanish on the whole boundary and normal
    components vanish on S.
    """

    grid: Grid
    w_top: np.ndarray = None

    def __post_init__(self):
        if self.w_top is None:
            self.w_top = np.zeros(self.grid.n_x)


def discrete_laplacian(v: VelocityField, g: Grid, bc: BoundaryData | None = None) -> VelocityField:
    """Component-wise five-point Laplacian with ghost-cell Dirichlet closure.

    Tangential boundary values are zero; normal boundary faces are read from
    the stored field arrays (and, for the top row, must agree with bc if given).
    Returns values on interior faces; boundary face rows of the result are 0.
    """
    if bc is None:
        bc = BoundaryData(g)
    hx2, hz2 = g.h_x ** 2, g.h_z ** 2
    out = VelocityField(g)

    u = v.u
    lap_u = np.zeros_like(u)
    ui = u[1:-1, :]
    lap_u[1:-1, :] = (u[2:, :] - 2 * ui + u[:-2, :]) / hx2
    # z-direction with ghost reflection across top/bottom walls (tangential BC = 0)
    uz = np.empty_like(ui)
    uz[:, 1:-1] = (ui[:, 2:] - 2 * ui[:, 1:-1] + ui[:, :-2]) / hz2
    uz[:, 0] = (ui[:, 1] - 3 * ui[:, 0]) / hz2
    uz[:, -1] = (ui[:, -2] - 3 * ui[:, -1]) / hz2
    lap_u[1:-1, :] += uz
    out.u = lap_u

    w = v.w
    lap_w = np.zeros_like(w)
    wi = w[:, 1:-1]
    lap_w[:, 1:-1] = (w[:, 2:] - 2 * wi + w[:, :-2]) / hz2
    wx = np.empty_like(wi)
    wx[1:-1, :] = (wi[2:, :] - 2 * wi[1:-1, :] + wi[:-2, :]) / hx2
    wx[0, :] = (wi[1, :] - 3 * wi[0, :]) / hx2
    wx[-1, :] = (wi[-2, :] - 3 * wi[-1, :]) / hx2
    lap_w[:, 1:-1] += wx
    out.w = lap_w
    return out


def _face_weights(g: Grid):
    """Quadrature weights for the fluid L2 product: 1/2 on boundary faces."""
    wu = np.ones(g.shape_u)
    wu[0, :] = wu[-1, :] = 0.5
    ww = np.ones(g.shape_w)
    ww[:, 0] = ww[:, -1] = 0.5
    return wu, ww


def inner_fluid(a: VelocityField, b: VelocityField, g: Grid) -> float:
    wu, ww = _face_weights(g)
    s = np.sum(wu * a.u * b.u) + np.sum(ww * a.w * b.w)
    return g.h_x * g.h_z * s


def inner_plate(a: np.ndarray, b: np.ndarray, g: Grid) -> float:
    if a.shape != (g.n_plate,) or b.shape != (g.n_plate,):
        raise GridError("plate function shape mismatch with grid")
    return g.h_x * float(np.dot(a, b))


def plate_mean(a: np.ndarray, g: Grid) -> float:
    return g.h_x * float(np.sum(a))


def inner_product(a, b, domain: str, g: Grid) -> float:
    if domain == "fluid":
        return inner_fluid(a, b, g)
    if domain == "plate":
        return inner_plate(a, b, g)
    raise GridError(f"unknown inner product domain {domain!r}")


def grad_inner(a: VelocityField, b: VelocityField, g: Grid,
               a_top: np.ndarray | None = None, b_top: np.ndarray | None = None) -> float:
    """Discrete (grad a, grad b)_O, exactly matching the ghost-closed Laplacian form.

    a_top/b_top are the prescribed normal traces on Omega (defaults: the stored
    top w-rows).  Tangential boundary values are zero throughout.  Near-wall
    tangential derivatives use the half-cell ghost rule, which makes this form
    the exact bilinear form of the assembled Stokes operator.
    """
    hx, hz = g.h_x, g.h_z
    s = 0.0
    # u-component: d/dx at cell centers (boundary u-faces are zero by no-slip)
    s += np.sum((a.u[1:, :] - a.u[:-1, :]) * (b.u[1:, :] - b.u[:-1, :])) / hx ** 2
    # u-component: d/dz at interior horizontal positions + half-cell wall terms
    au, bu = a.u[1:-1, :], b.u[1:-1, :]
    s += np.sum((au[:, 1:] - au[:, :-1]) * (bu[:, 1:] - bu[:, :-1])) / hz ** 2
    s += 2.0 * np.sum(au[:, 0] * bu[:, 0]) / hz ** 2
    s += 2.0 * np.sum(au[:, -1] * bu[:, -1]) / hz ** 2
    # w-component: d/dz at cell centers (top row carries the plate trace)
    s += np.sum((a.w[:, 1:] - a.w[:, :-1]) * (b.w[:, 1:] - b.w[:, :-1])) / hz ** 2
    # w-component: d/dx at interior vertical positions + half-cell wall terms
    aw, bw = a.w[:, 1:-1], b.w[:, 1:-1]
    s += np.sum((aw[1:, :] - aw[:-1, :]) * (bw[1:, :] - bw[:-1, :])) / hx ** 2
    s += 2.0 * np.sum(aw[0, :] * bw[0, :]) / hx ** 2
    s += 2.0 * np.sum(aw[-1, :] * bw[-1, :]) / hx ** 2
    return hx * hz * s


DIV_TOL = 1e-10


def is_solenoidal(v: VelocityField, g: Grid, tol: float = DIV_TOL) -> bool:
    return float(np.max(np.abs(discrete_div(v, g).values))) <= tol


# ---------------------------------------------------------------------------
# 1D clamped plate (Euler-Bernoulli beam) calculus on the cell-centered grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BeamOperators:
    """Matrices of the clamped-beam energy discretization.

    D maps cell values to first derivatives at nodes (clamped: zero at the end
    nodes); K = h * (D2 D)^T (D2 D) is the symmetric bending form matrix, so
    u^T K v approximates (u'', v'')_Omega.  C stacks the two boundary-value
    constraints u(0)=u(Lx)=0 (third-order extrapolation to the edge).
    """

    grid: Grid
    D: np.ndarray = field(repr=False, default=None)
    B: np.ndarray = field(repr=False, default=None)   # second-derivative map, cells -> cells
    K: np.ndarray = field(repr=False, default=None)
    C: np.ndarray = field(repr=False, default=None)


def beam_operators(g: Grid) -> BeamOperators:
    n, h = g.n_plate, g.h_x
    D = np.zeros((n + 1, n))
    idx = np.arange(1, n)
    D[idx, idx - 1] = -1.0 / h
    D[idx, idx] = 1.0 / h
    B = (D[1:, :] - D[:-1, :]) / h
    K = h * B.T @ B
    C = np.zeros((2, n))
    C[0, :3] = [15.0 / 8.0, -10.0 / 8.0, 3.0 / 8.0]
    C[1, -3:] = [3.0 / 8.0, -10.0 / 8.0, 15.0 / 8.0]
    return BeamOperators(grid=g, D=D, B=B, K=K, C=C)


def beam_biharmonic(u: np.ndarray, g: Grid, ops: BeamOperators | None = None) -> np.ndarray:
    """Pointwise fourth derivative of a clamped-compatible plate function.

    Interior points use the classical five-point stencil (exact on quartics);
    the two rows nearest each edge come from the symmetric energy form.
    """
    if ops is None:
        ops = beam_operators(g)
    if u.shape != (g.n_plate,):
        raise GridError("plate function shape mismatch with grid")
    return (ops.K @ u) / g.h_x


def bending_inner(u: np.ndarray, v: np.ndarray, g: Grid, ops: BeamOperators | None = None) -> float:
    """Discrete (Delta u, Delta v)_Omega for clamped plate functions."""
    if ops is None:
        ops = beam_operators(g)
    return float(u @ ops.K @ v)
