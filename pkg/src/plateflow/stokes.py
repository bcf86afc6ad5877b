"""Sparse saddle-point machinery for the cavity Stokes problem.

One assembled symmetric factorization serves every solve in the model: the
plate-to-fluid lifting (prescribed normal trace on Omega), its adjoint (the
pressure-trace functional), the stationary flow driven by a body force, and
the harmonic extension of pressure traces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import BoundaryData, Grid, GridError, ScalarField, VelocityField, plate_mean


class StokesSolveError(RuntimeError):
    pass


@dataclass
class StokesSolution:
    v: VelocityField
    p: ScalarField


@dataclass(frozen=True)
class VelocityBlocks:
    """Interior-face operator blocks of the MAC Stokes system.

    Dofs are packed [interior u-faces (row-major in i,j); interior w-faces],
    pressures cell by cell.  A is the vector Laplacian energy form scaled by
    the cell volume (symmetric positive definite, viscosity-free); Gr is the
    pressure-gradient coupling, whose transpose is the negative volume-scaled
    divergence; Mv is the diagonal of L2 face weights times the cell volume
    restricted to interior faces (all weight one there).
    """

    grid: Grid
    A: sp.csr_matrix
    Gr: sp.csr_matrix
    n_u: int
    n_w: int


def velocity_blocks(grid: Grid) -> VelocityBlocks:
    g = grid
    hx, hz = g.h_x, g.h_z
    vol = hx * hz
    n_u = (g.n_x - 1) * g.n_z
    n_w = g.n_x * (g.n_z - 1)
    n_p = g.n_x * g.n_z

    def iu(i, j):
        # i = 1..n_x-1, j = 0..n_z-1
        return (i - 1) * g.n_z + j

    def iw(i, j):
        # i = 0..n_x-1, j = 1..n_z-1
        return n_u + i * (g.n_z - 1) + (j - 1)

    def ip(i, j):
        return i * g.n_z + j

    ar, ac, av = [], [], []
    gr, gc, gv = [], [], []

    def addA(r, c, v):
        ar.append(r)
        ac.append(c)
        av.append(v)

    def addG(r, c, v):
        gr.append(r)
        gc.append(c)
        gv.append(v)

    # u rows: tangential walls are top and bottom (half-cell ghost, diag 3/hz^2)
    for i in range(1, g.n_x):
        for j in range(g.n_z):
            r = iu(i, j)
            diag = 2.0 / hx ** 2
            if i - 1 >= 1:
                addA(r, iu(i - 1, j), -vol / hx ** 2)
            if i + 1 <= g.n_x - 1:
                addA(r, iu(i + 1, j), -vol / hx ** 2)
            if 0 < j < g.n_z - 1:
                diag += 2.0 / hz ** 2
                addA(r, iu(i, j - 1), -vol / hz ** 2)
                addA(r, iu(i, j + 1), -vol / hz ** 2)
            elif j == 0:
                diag += 3.0 / hz ** 2
                addA(r, iu(i, j + 1), -vol / hz ** 2)
            else:
                diag += 3.0 / hz ** 2
                addA(r, iu(i, j - 1), -vol / hz ** 2)
            addA(r, r, vol * diag)
            addG(r, ip(i, j), hz)
            addG(r, ip(i - 1, j), -hz)

    # w rows: tangential walls are left and right (half-cell ghost, diag 3/hx^2)
    for i in range(g.n_x):
        for j in range(1, g.n_z):
            r = iw(i, j)
            diag = 2.0 / hz ** 2
            if j - 1 >= 1:
                addA(r, iw(i, j - 1), -vol / hz ** 2)
            if j + 1 <= g.n_z - 1:
                addA(r, iw(i, j + 1), -vol / hz ** 2)
            if 0 < i < g.n_x - 1:
                diag += 2.0 / hx ** 2
                addA(r, iw(i - 1, j), -vol / hx ** 2)
                addA(r, iw(i + 1, j), -vol / hx ** 2)
            elif i == 0:
                diag += 3.0 / hx ** 2
                addA(r, iw(i + 1, j), -vol / hx ** 2)
            else:
                diag += 3.0 / hx ** 2
                addA(r, iw(i - 1, j), -vol / hx ** 2)
            addA(r, r, vol * diag)
            addG(r, ip(i, j), hx)
            addG(r, ip(i, j - 1), -hx)

    n_vel = n_u + n_w
    A = sp.csr_matrix(sp.coo_matrix((av, (ar, ac)), shape=(n_vel, n_vel)))
    Gr = sp.csr_matrix(sp.coo_matrix((gv, (gr, gc)), shape=(n_vel, n_p)))
    return VelocityBlocks(grid=grid, A=A, Gr=Gr, n_u=n_u, n_w=n_w)


class StokesSolver:
    """Factorized MAC discretization of -nu*Lap(v) + grad p = g, div v = 0.

    Unknowns: interior u-faces, interior w-faces, cell pressures, and one
    Lagrange multiplier pinning the pressure mean (which also absorbs any
    incompatibility between the boundary flux and incompressibility).
    """

    def __init__(self, grid: Grid, nu: float = 1.0):
        if nu <= 0:
            raise ValueError("viscosity must be positive")
        self.grid = grid
        self.nu = nu
        g = grid
        self.blocks = velocity_blocks(grid)
        self.nu_int = self.blocks.n_u
        self.nw_int = self.blocks.n_w
        self.np_ = g.n_x * g.n_z
        self.n_tot = self.nu_int + self.nw_int + self.np_ + 1
        vol = g.h_x * g.h_z
        e = vol * np.ones((self.np_, 1))
        K = sp.bmat(
            [
                [nu * self.blocks.A, self.blocks.Gr, None],
                [self.blocks.Gr.T, None, e],
                [None, e.T, None],
            ],
            format="csc",
        )
        self._lu = spla.splu(K)

    def _iw(self, i, j):
        # i = 0..n_x-1, j = 1..n_z-1
        return self.nu_int + i * (self.grid.n_z - 1) + (j - 1)

    def _ip(self, i, j):
        return self.nu_int + self.nw_int + i * self.grid.n_z + j

    # -- right-hand sides -------------------------------------------------
    def _rhs_body_force(self, gf: VelocityField) -> np.ndarray:
        g = self.grid
        rhs = np.zeros(self.n_tot)
        vol = g.h_x * g.h_z
        rhs[: self.nu_int] = vol * gf.u[1:-1, :].ravel()
        rhs[self.nu_int: self.nu_int + self.nw_int] = vol * gf.w[:, 1:-1].ravel()
        return rhs

    def _rhs_trace(self, psi: np.ndarray) -> np.ndarray:
        """Boundary contribution of the normal trace w = psi on Omega."""
        g = self.grid
        rhs = np.zeros(self.n_tot)
        vol = g.h_x * g.h_z
        for i in range(g.n_x):
            rhs[self._iw(i, g.n_z - 1)] += self.nu * vol * psi[i] / g.h_z ** 2
            rhs[self._ip(i, g.n_z - 1)] += g.h_x * psi[i]
        return rhs

    def _unpack(self, x: np.ndarray, w_top: np.ndarray | None = None) -> StokesSolution:
        g = self.grid
        v = VelocityField(g)
        v.u[1:-1, :] = x[: self.nu_int].reshape(g.n_x - 1, g.n_z)
        v.w[:, 1:-1] = x[self.nu_int: self.nu_int + self.nw_int].reshape(g.n_x, g.n_z - 1)
        if w_top is not None:
            v.w[:, -1] = w_top
        p = x[self.nu_int + self.nw_int: -1].reshape(g.n_x, g.n_z)
        p = p - np.mean(p)
        return StokesSolution(v=v, p=ScalarField(g, p))

    # -- public solves ----------------------------------------------------
    def solve_body_force(self, gf: VelocityField) -> StokesSolution:
        """Stationary Stokes flow with no-slip boundary everywhere."""
        x = self._lu.solve(self._rhs_body_force(gf))
        return self._unpack(x)

    def lift(self, psi: np.ndarray, mean_tol: float = 1e-10) -> StokesSolution:
        """N0: extend a zero-mean plate function into a solenoidal cavity field."""
        g = self.grid
        if psi.shape != (g.n_plate,):
            raise GridError("plate function shape mismatch with grid")
        scale = 1.0 + float(np.max(np.abs(psi)))
        if abs(plate_mean(psi, g)) > mean_tol * scale:
            raise StokesSolveError(
                "lift requires a zero-mean plate function (discrete system inconsistent)"
            )
        x = self._lu.solve(self._rhs_trace(psi))
        return self._unpack(x, w_top=psi)

    def adjoint_trace_functional(self, gf: VelocityField) -> np.ndarray:
        """N0^*: the zero-mean plate function r with (r, b)_Omega = (gf, N0 b)_O.

        One transposed solve; since the saddle matrix is symmetric this reduces
        to reading the stationary solution of gf along the Omega row.
        """
        g = self.grid
        sol = self.solve_body_force(gf)
        r = (
            self.nu * sol.v.w[:, g.n_z - 1] / g.h_z
            + sol.p.values[:, g.n_z - 1]
            + 0.5 * g.h_z * gf.w[:, g.n_z]
        )
        return r - np.mean(r)

    def pressure_trace(self, sol: StokesSolution, gf: VelocityField | None = None) -> np.ndarray:
        """Duality-consistent trace of the pressure on Omega for a no-slip solve."""
        g = self.grid
        top = np.zeros(g.n_plate) if gf is None else gf.w[:, g.n_z]
        r = self.nu * sol.v.w[:, g.n_z - 1] / g.h_z + sol.p.values[:, g.n_z - 1] + 0.5 * g.h_z * top
        return r - np.mean(r)


class HarmonicLifter:
    """G: extend a pressure trace on Omega to a discrete harmonic field in O.

    Solves Lap q = 0 with dq/dn = 0 on S and q = r on Omega (cell-centered,
    ghost closure), and returns q with its face gradient.  The gradient uses
    the half-cell ghost value on the Omega row, which makes the pairing
    (grad q, v)_O = (r, v.n)_Omega exact for discretely solenoidal v.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        g = grid
        hx2, hz2 = g.h_x ** 2, g.h_z ** 2
        rows, cols, vals = [], [], []

        def idx(i, j):
            return i * g.n_z + j

        for i in range(g.n_x):
            for j in range(g.n_z):
                r = idx(i, j)
                diag = 0.0
                for di, dj, h2 in ((-1, 0, hx2), (1, 0, hx2), (0, -1, hz2), (0, 1, hz2)):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < g.n_x and 0 <= jj < g.n_z:
                        diag += 1.0 / h2
                        rows.append(r)
                        cols.append(idx(ii, jj))
                        vals.append(-1.0 / h2)
                    elif jj == g.n_z:
                        # Dirichlet ghost across Omega: q_ghost = 2 r_i - q,
                        # contributing (2 r_i - 2 q) / h2 beyond the interior pairs
                        diag += 2.0 / h2
                    # Neumann walls: ghost = mirror, zero contribution
                rows.append(r)
                cols.append(r)
                vals.append(diag)
        K = sp.csc_matrix(
            sp.coo_matrix((vals, (rows, cols)), shape=(g.n_x * g.n_z,) * 2)
        )
        self._lu = spla.splu(K)

    def lift(self, r: np.ndarray) -> tuple[ScalarField, VelocityField]:
        g = self.grid
        if r.shape != (g.n_plate,):
            raise GridError("plate trace shape mismatch with grid")
        rhs = np.zeros(g.n_x * g.n_z)
        rhs.reshape(g.n_x, g.n_z)[:, g.n_z - 1] = 2.0 * r / g.h_z ** 2
        q = self._lu.solve(rhs).reshape(g.n_x, g.n_z)
        grad = VelocityField(g)
        grad.u[1:-1, :] = (q[1:, :] - q[:-1, :]) / g.h_x
        grad.w[:, 1:-1] = (q[:, 1:] - q[:, :-1]) / g.h_z
        grad.w[:, -1] = 2.0 * (r - q[:, -1]) / g.h_z
        return ScalarField(g, q), grad

    def harmonic_residual(self, q: ScalarField, r: np.ndarray) -> float:
        g = self.grid
        vals = q.values
        res = np.zeros((g.n_x, g.n_z))
        hx2, hz2 = g.h_x ** 2, g.h_z ** 2
        for i in range(g.n_x):
            for j in range(g.n_z):
                acc = 0.0
                for di, dj, h2 in ((-1, 0, hx2), (1, 0, hx2), (0, -1, hz2), (0, 1, hz2)):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < g.n_x and 0 <= jj < g.n_z:
                        acc += (vals[ii, jj] - vals[i, j]) / h2
                    elif jj == g.n_z:
                        acc += 2.0 * (r[i] - vals[i, j]) / h2
                res[i, j] = acc
        return float(np.max(np.abs(res)))
