"""Standalone clamped 2D plate with the geometrically nonlinear feedback force.

This model is intrinsically two dimensional (it couples curvature components
through a bilinear bracket and an auxiliary Airy stress), so it lives on its
own node-centered square grid and is exercised force-only; the coupled cavity
runs use the beam models.

The force is constructed as the exact discrete gradient of the discrete
potential: second-derivative maps Dxx, Dyy, Dxy act on interior nodes, the
clamped biharmonic is the normal-equations operator of the nodal Laplacian
with ghost closure, and every bracket appearing in the potential is
differentiated through transposes of those maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .forces import ForceModel, ForceModelError


@dataclass(frozen=True)
class PlateGrid2D:
    """Unit-square clamped plate, n cells per side, unknowns at interior nodes."""

    n: int = 32
    L: float = 1.0

    def __post_init__(self):
        if self.n < 8:
            raise ForceModelError("2D plate grid too coarse: need n >= 8")

    @property
    def h(self):
        return self.L / self.n

    @property
    def n_int(self):
        return self.n - 1

    @property
    def size(self):
        return self.n_int ** 2

    def interior_coords(self):
        x = np.arange(1, self.n) * self.h
        return np.meshgrid(x, x, indexing="ij")


def _pad(u: np.ndarray, g: PlateGrid2D) -> np.ndarray:
    n = g.n_int
    full = np.zeros((n + 2, n + 2))
    full[1:-1, 1:-1] = u.reshape(n, n)
    return full


def second_derivatives(u: np.ndarray, g: PlateGrid2D):
    """(u_xx, u_yy, u_xy) at interior nodes, centered stencils, zero boundary."""
    f = _pad(u, g)
    h2 = g.h ** 2
    uxx = (f[2:, 1:-1] - 2 * f[1:-1, 1:-1] + f[:-2, 1:-1]) / h2
    uyy = (f[1:-1, 2:] - 2 * f[1:-1, 1:-1] + f[1:-1, :-2]) / h2
    uxy = (f[2:, 2:] - f[2:, :-2] - f[:-2, 2:] + f[:-2, :-2]) / (4 * h2)
    return uxx, uyy, uxy


def _adjoint_second_derivatives(axx, ayy, axy, g: PlateGrid2D):
    """Transpose action: Dxx^T axx + Dyy^T ayy + Dxy^T axy on interior nodes."""
    n = g.n_int
    h2 = g.h ** 2
    out = np.zeros((n + 2, n + 2))
    out[2:, 1:-1] += axx / h2
    out[1:-1, 1:-1] += -2 * axx / h2
    out[:-2, 1:-1] += axx / h2
    out[1:-1, 2:] += ayy / h2
    out[1:-1, 1:-1] += -2 * ayy / h2
    out[1:-1, :-2] += ayy / h2
    q = axy / (4 * h2)
    out[2:, 2:] += q
    out[2:, :-2] -= q
    out[:-2, 2:] -= q
    out[:-2, :-2] += q
    return out[1:-1, 1:-1]


def vk_bracket(u: np.ndarray, v: np.ndarray, g: PlateGrid2D) -> np.ndarray:
    """[u, v] = u_xx v_yy + u_yy v_xx - 2 u_xy v_xy at interior nodes."""
    if u.shape != v.shape:
        raise ForceModelError("bracket arguments must share the 2D plate grid")
    uxx, uyy, uxy = second_derivatives(u, g)
    vxx, vyy, vxy = second_derivatives(v, g)
    return uxx * vyy + uyy * vxx - 2 * uxy * vxy


def _bracket_adjoint(w: np.ndarray, u: np.ndarray, g: PlateGrid2D) -> np.ndarray:
    """Gradient of du -> sum(w * [u, du]): Dyy^T(w u_xx) + Dxx^T(w u_yy) - 2 Dxy^T(w u_xy)."""
    uxx, uyy, uxy = second_derivatives(u, g)
    return _adjoint_second_derivatives(w * uyy, w * uxx, -2 * w * uxy, g)


def clamped_laplacian_map(g: PlateGrid2D) -> sp.csr_matrix:
    """Nodal Laplacian of a clamped function, evaluated at every node.

    Rows cover all (n+1)^2 nodes; clamped ghosts (mirror reflection through
    the boundary) give boundary-node values 2*u_adjacent/h^2.  The
    normal-equations operator h^2 L^T L is the discrete clamped biharmonic
    energy form.
    """
    n = g.n_int
    h2 = g.h ** 2
    rows, cols, vals = [], [], []

    def col(i, j):
        # interior node index, i,j in 1..n
        return (i - 1) * n + (j - 1)

    r = 0
    for i in range(g.n + 1):
        for j in range(g.n + 1):
            for di, dj in ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)):
                ii, jj = i + di, j + dj
                if (di, dj) == (0, 0):
                    if 1 <= i <= n and 1 <= j <= n:
                        rows.append(r)
                        cols.append(col(i, j))
                        vals.append(-4.0 / h2)
                    continue
                # reflect ghost neighbors of boundary rows back inside
                if ii < 0:
                    ii = -ii
                if ii > g.n:
                    ii = 2 * g.n - ii
                if jj < 0:
                    jj = -jj
                if jj > g.n:
                    jj = 2 * g.n - jj
                if 1 <= ii <= n and 1 <= jj <= n:
                    rows.append(r)
                    cols.append(col(ii, jj))
                    vals.append(1.0 / h2)
            r += 1
    return sp.csr_matrix(
        sp.coo_matrix((vals, (rows, cols)), shape=((g.n + 1) ** 2, n * n))
    )


@dataclass
class VonKarmanForce(ForceModel):
    """Large-deflection plate force F(u) = -[u, airy(u) + F0] - load.

    airy(u) solves the clamped biharmonic problem with right-hand side
    -[u, u]; the bracket terms in the force are the exact adjoint-derivative
    expressions of the discrete potential, so force = grad potential holds to
    rounding.
    """

    grid: PlateGrid2D
    F0: np.ndarray = None
    load: np.ndarray = None
    name: str = "von_karman"
    _L: sp.csr_matrix = field(repr=False, default=None)
    _K: sp.csc_matrix = field(repr=False, default=None)
    _lu: object = field(repr=False, default=None)

    def __post_init__(self):
        g = self.grid
        if self.F0 is None:
            self.F0 = np.zeros((g.n_int, g.n_int))
        if self.load is None:
            self.load = np.zeros((g.n_int, g.n_int))
        self._L = clamped_laplacian_map(g)
        self._K = sp.csc_matrix(g.h ** 2 * (self._L.T @ self._L))
        self._lu = spla.splu(self._K)

    def airy(self, u: np.ndarray) -> np.ndarray:
        """Stress function v with biharmonic(v) = -[u, u], clamped."""
        g = self.grid
        rhs = -g.h ** 2 * vk_bracket(u, u, g).ravel()
        return self._lu.solve(rhs).reshape(g.n_int, g.n_int)

    def airy_residual(self, u: np.ndarray) -> float:
        g = self.grid
        v = self.airy(u)
        b = g.h ** 2 * vk_bracket(u, u, g).ravel()
        res = self._K @ v.ravel() + b
        return float(np.linalg.norm(res) / max(np.linalg.norm(b), 1e-300))

    def bending_energy_sq(self, u: np.ndarray) -> float:
        """|Delta u|^2 quadrature: u^T K u / area-normalization-free form."""
        x = np.asarray(u).ravel()
        return float(x @ (self._K @ x))

    def force(self, u: np.ndarray) -> np.ndarray:
        g = self.grid
        u = u.reshape(g.n_int, g.n_int)
        v = self.airy(u)
        # gradient of (1/4)||Delta airy(u)||^2 is -bracket_adjoint(airy(u), u)
        t1 = -_bracket_adjoint(v, u, g)
        t2 = -0.5 * (vk_bracket(u, self.F0, g) + _bracket_adjoint(u, self.F0, g))
        return t1 + t2 - self.load

    def potential(self, u: np.ndarray) -> float:
        g = self.grid
        u = u.reshape(g.n_int, g.n_int)
        v = self.airy(u)
        quarter = 0.25 * float(v.ravel() @ (self._K @ v.ravel()))
        cross = -0.5 * g.h ** 2 * float(np.sum(vk_bracket(u, self.F0, g) * u))
        lin = -g.h ** 2 * float(np.sum(self.load * u))
        return quarter + cross + lin


def plate2d_eigenmodes(g: PlateGrid2D, n_modes: int):
    """Lowest clamped bending eigenpairs of the 2D plate (L2-normalized)."""
    L = clamped_laplacian_map(g)
    K = sp.csc_matrix(g.h ** 2 * (L.T @ L))
    M = g.h ** 2 * sp.identity(g.size, format="csc")
    vals, vecs = spla.eigsh(K, k=n_modes, M=M, sigma=0.0)
    order = np.argsort(vals)
    vals = vals[order]
    vecs = vecs[:, order]
    # M-orthonormal eigenvectors already have unit discrete L2 norm
    return np.array(vals), vecs.T
