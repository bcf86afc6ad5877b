"""Reduced-order (Galerkin) form of the coupled flow/plate dynamics.

State layout: y = (alpha[0:m], beta[0:n], betadot[0:n]).  The fluid velocity
is v = sum_k alpha_k psi_k + N0(u_t) and the plate deflection u = sum_j
beta_j xi_j, so the kinetic variables are w = (alpha, betadot) and carry the
mass matrix M = Gram{psi, N0 xi} + plate identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .mesh import (
    Grid,
    GridError,
    VelocityField,
    discrete_div,
    grad_inner,
    inner_fluid,
    inner_plate,
    plate_mean,
)
from .modal import ModalBasis, project_zero_mean

TRACE_TOL = 1e-8
DIV_TOL = 1e-10


class AssemblyError(RuntimeError):
    pass


@dataclass
class ForcingConfig:
    """Constant-in-time body force on the fluid and transverse load on the plate.

    fluid_kind: 'none', 'constant' (uniform downward w), 'shear' (horizontal u
    varying with depth), or 'bump' (localized vertical push).
    plate_kind: 'none', 'uniform', or 'sine' (one full sine arch, zero mean).
    """

    fluid_kind: str = "none"
    fluid_amp: float = 0.0
    plate_kind: str = "none"
    plate_amp: float = 0.0


def fluid_forcing_field(cfg: ForcingConfig, g: Grid) -> VelocityField:
    gf = VelocityField(g)
    a = cfg.fluid_amp
    if cfg.fluid_kind == "none" or a == 0.0:
        return gf
    if cfg.fluid_kind == "constant":
        gf.w[:, 1:-1] = -a
    elif cfg.fluid_kind == "shear":
        _, zu = g.u_face_coords()
        gf.u[1:-1, :] = a * (1.0 + zu[1:-1, :] / g.L_z)
    elif cfg.fluid_kind == "bump":
        xw, zw = g.w_face_coords()
        r2 = ((xw - 0.5 * g.L_x) / g.L_x) ** 2 + ((zw + 0.5 * g.L_z) / g.L_z) ** 2
        gf.w[:, 1:-1] = a * np.exp(-20.0 * r2)[:, 1:-1]
    else:
        raise AssemblyError(f"unknown fluid forcing kind {cfg.fluid_kind!r}")
    return gf


def plate_forcing_profile(cfg: ForcingConfig, g: Grid) -> np.ndarray:
    a = cfg.plate_amp
    if cfg.plate_kind == "none" or a == 0.0:
        return np.zeros(g.n_plate)
    x = g.plate_x()
    if cfg.plate_kind == "uniform":
        return a * np.ones(g.n_plate)
    if cfg.plate_kind == "sine":
        return a * np.sin(2.0 * np.pi * x / g.L_x)
    raise AssemblyError(f"unknown plate forcing kind {cfg.plate_kind!r}")


@dataclass
class GalerkinSystem:
    """Assembled reduced matrices of the coupled linear dynamics."""

    basis: ModalBasis
    nu: float
    M: np.ndarray = field(repr=False, default=None)       # (m+n) kinetic mass
    D: np.ndarray = field(repr=False, default=None)       # (m+n) viscous dissipation form
    kappa: np.ndarray = field(repr=False, default=None)   # (n,) bending eigenvalues
    f_kin: np.ndarray = field(repr=False, default=None)   # (m+n,) forcing on kinetic eqs
    f_plate: np.ndarray = field(repr=False, default=None)  # (n,) transverse load coefficients
    G_vl: np.ndarray = field(repr=False, default=None)    # (m,n) flow-mode / lifted-mode Gram
    G_ll: np.ndarray = field(repr=False, default=None)    # (n,n) lifted-mode Gram

    @property
    def m(self):
        return self.basis.m

    @property
    def n(self):
        return self.basis.n

    def split(self, y: np.ndarray):
        m, n = self.m, self.n
        return y[:m], y[m:m + n], y[m + n:]

    def join(self, alpha, beta, betadot):
        return np.concatenate([alpha, beta, betadot])

    # -- energetics -------------------------------------------------------
    def energy_quadratic(self, y: np.ndarray) -> float:
        """E0: kinetic energy of (v, u_t) plus linear bending energy."""
        alpha, beta, betadot = self.split(y)
        w = np.concatenate([alpha, betadot])
        return 0.5 * float(w @ self.M @ w) + 0.5 * float(self.kappa @ beta ** 2)

    def state_norm(self, y: np.ndarray) -> float:
        """Energy norm of the coupled state: sqrt of twice the quadratic energy."""
        return float(np.sqrt(max(2.0 * self.energy_quadratic(y), 0.0)))

    def dissipation_rate(self, y: np.ndarray) -> float:
        alpha, _, betadot = self.split(y)
        w = np.concatenate([alpha, betadot])
        return float(w @ self.D @ w)

    def forcing_power(self, y: np.ndarray) -> float:
        alpha, _, betadot = self.split(y)
        w = np.concatenate([alpha, betadot])
        return float(self.f_kin @ w) + float(self.f_plate @ betadot)

    # -- dynamics ---------------------------------------------------------
    def rhs(self, y: np.ndarray, force_coeffs=None) -> np.ndarray:
        """Time derivative of the state; force_coeffs(beta) adds the nonlinear
        plate force projected on the plate modes."""
        alpha, beta, betadot = self.split(y)
        w = np.concatenate([alpha, betadot])
        load = self.f_kin.copy()
        load[self.m:] += self.f_plate - self.kappa * beta
        if force_coeffs is not None:
            load[self.m:] -= force_coeffs(beta)
        wdot = la.solve(self.M, load - self.D @ w, assume_a="pos")
        return self.join(wdot[:self.m], betadot, wdot[self.m:])

    def linear_parts(self):
        """(A, c) with ydot = A y + c for the force-free dynamics."""
        m, n = self.m, self.n
        N = m + 2 * n
        Minv = la.inv(self.M)
        A = np.zeros((N, N))
        # beta' = betadot
        A[m:m + n, m + n:] = np.eye(n)
        # w' = -Minv (D w + [0; kappa beta])
        S = -Minv @ self.D
        A[:m, :m] = S[:m, :m]
        A[:m, m + n:] = S[:m, m:]
        A[m + n:, :m] = S[m:, :m]
        A[m + n:, m + n:] = S[m:, m:]
        Kcol = np.zeros((m + n, n))
        Kcol[m:, :] = np.diag(self.kappa)
        T = -Minv @ Kcol
        A[:m, m:m + n] = T[:m, :]
        A[m + n:, m:m + n] = T[m:, :]
        c = np.zeros(N)
        load = self.f_kin.copy()
        load[m:] += self.f_plate
        w0 = Minv @ load
        c[:m] = w0[:m]
        c[m + n:] = w0[m:]
        return A, c


def assemble(basis: ModalBasis, nu: float, forcing: ForcingConfig | None = None) -> GalerkinSystem:
    if nu <= 0:
        raise AssemblyError("viscosity must be positive")
    g = basis.grid
    m, n = basis.m, basis.n
    if forcing is None:
        forcing = ForcingConfig()

    G_vl = np.array(
        [[inner_fluid(basis.flow[i].field, basis.lifted[k].field, g) for k in range(n)]
         for i in range(m)]
    )
    G_ll = np.array(
        [[inner_fluid(basis.lifted[k].field, basis.lifted[l].field, g) for l in range(n)]
         for k in range(n)]
    )
    M = np.block([[np.eye(m), G_vl], [G_vl.T, np.eye(n) + G_ll]])
    M = 0.5 * (M + M.T)

    ev = la.eigvalsh(M)
    if ev[0] <= 0:
        raise AssemblyError(
            f"kinetic mass matrix is not positive definite: smallest eigenvalue {ev[0]:.6e}"
        )

    Gd_vl = np.array(
        [[grad_inner(basis.flow[i].field, basis.lifted[k].field, g) for k in range(n)]
         for i in range(m)]
    )
    Gd_ll = np.array(
        [[grad_inner(basis.lifted[k].field, basis.lifted[l].field, g) for l in range(n)]
         for k in range(n)]
    )
    D = nu * np.block([[np.diag(basis.mu), Gd_vl], [Gd_vl.T, Gd_ll]])
    D = 0.5 * (D + D.T)

    gf = fluid_forcing_field(forcing, g)
    gp = plate_forcing_profile(forcing, g)
    f_kin = np.concatenate(
        [
            [inner_fluid(gf, basis.flow[i].field, g) for i in range(m)],
            [inner_fluid(gf, basis.lifted[k].field, g) for k in range(n)],
        ]
    )
    f_plate = np.array([inner_plate(gp, basis.plate[k].shape, g) for k in range(n)])

    return GalerkinSystem(basis=basis, nu=nu, M=M, D=D, kappa=basis.kappa,
                          f_kin=f_kin, f_plate=f_plate, G_vl=G_vl, G_ll=G_ll)


@dataclass
class ProjectionReport:
    y0: np.ndarray
    fluid_residual: float
    plate_residual: float
    velocity_residual: float
    mean_offset: float


def project_initial(sys: GalerkinSystem, v0: VelocityField, u0: np.ndarray,
                    u1: np.ndarray, trace_tol: float = TRACE_TOL) -> ProjectionReport:
    """Project compatible initial data onto the modal space.

    Requires div v0 = 0 and the normal trace of v0 on Omega to equal u1.  The
    mean of u0 is not representable (the cavity is incompressible); it is
    removed by the bending-stable projection and reported as mean_offset.
    """
    g = sys.basis.grid
    d = float(np.max(np.abs(discrete_div(v0, g).values)))
    if d > DIV_TOL:
        raise AssemblyError(f"initial velocity is not divergence free: max divergence {d:.3e}")
    tr = float(np.max(np.abs(v0.w[:, -1] - u1)))
    if tr > trace_tol:
        raise AssemblyError(
            f"initial data incompatible: fluid normal trace differs from plate velocity by {tr:.3e}"
        )
    mean_off = plate_mean(u0, g) / g.L_x
    u0p = project_zero_mean(u0, g, sys.basis.w0)
    u1p = u1 - plate_mean(u1, g) / g.L_x  # trace of a solenoidal field; already zero mean

    Xi = sys.basis.plate_shapes()
    beta = g.h_x * Xi @ u0p
    betadot = g.h_x * Xi @ u1p
    plate_res = float(np.sqrt(max(inner_plate(u0p - Xi.T @ beta, u0p - Xi.T @ beta, g), 0.0)))

    lift_dot = VelocityField(g)
    for k in range(sys.n):
        lift_dot = lift_dot + betadot[k] * sys.basis.lifted[k].field
    v_rem = v0 - lift_dot
    alpha = np.array([inner_fluid(v_rem, sys.basis.flow[i].field, g) for i in range(sys.m)])
    recon = lift_dot.copy()
    for i in range(sys.m):
        recon = recon + alpha[i] * sys.basis.flow[i].field
    diff = v0 - recon
    vres = float(np.sqrt(max(inner_fluid(diff, diff, g), 0.0)))

    y0 = sys.join(alpha, beta, betadot)
    return ProjectionReport(y0=y0, fluid_residual=d, plate_residual=plate_res,
                            velocity_residual=vres, mean_offset=mean_off)


@dataclass
class ReconstructedState:
    v: VelocityField
    u: np.ndarray
    u_t: np.ndarray


def reconstruct(sys: GalerkinSystem, y: np.ndarray,
                offset_coeff: float = 0.0) -> ReconstructedState:
    """Coefficients to fields.  The plate velocity is accumulated in the same
    order as the fluid field, so the trace identity v|_Omega = u_t holds bit
    for bit at the plate nodes (flow modes have exactly zero trace there)."""
    g = sys.basis.grid
    alpha, beta, betadot = sys.split(y)
    v = VelocityField(g)
    for i in range(sys.m):
        v = v + alpha[i] * sys.basis.flow[i].field
    u = np.zeros(g.n_plate)
    u_t = np.zeros(g.n_plate)
    for k in range(sys.n):
        v = v + betadot[k] * sys.basis.lifted[k].field
        u = u + beta[k] * sys.basis.plate[k].shape
        u_t = u_t + betadot[k] * sys.basis.plate[k].shape
    if offset_coeff != 0.0:
        u = u + offset_coeff * sys.basis.w0
    return ReconstructedState(v=v, u=u, u_t=u_t)
