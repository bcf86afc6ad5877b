"""Stationary states: the driven Stokes flow, its pressure trace on the
elastic face, the stationary plate problem as an energy minimization on mode
coefficients, and long-run convergence of trajectories to equilibria."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forces import ForceModel
from .galerkin import GalerkinSystem
from .mesh import Grid, VelocityField, inner_fluid, inner_plate
from .stokes import StokesSolution, StokesSolver

STAT_TOL = 1e-8


class StationaryError(RuntimeError):
    pass


@dataclass
class Equilibrium:
    alpha_star: np.ndarray          # flow-mode coefficients of the stationary velocity
    beta_star: np.ndarray           # plate-mode coefficients of the stationary deflection
    pstar_coeffs: np.ndarray        # (p*, xi_j) pairings driving the plate problem
    residual: float
    energy: float                   # value of the stationary functional Psi


def solve_stationary_stokes(gf: VelocityField, g: Grid, nu: float = 1.0,
                            solver: StokesSolver | None = None):
    """Stationary flow for body force gf with no-slip walls.

    Returns (solution, p_star_trace); the trace is cross-validated against the
    adjoint lifting of gf, two routes to the same functional.
    """
    if solver is None or solver.nu != nu:
        solver = StokesSolver(g, nu=nu)
    sol = solver.solve_body_force(gf)
    p_trace = solver.pressure_trace(sol, gf)
    ref = StokesSolver(g, nu=1.0).adjoint_trace_functional(gf) if nu != 1.0 else \
        solver.adjoint_trace_functional(gf)
    err = float(np.max(np.abs(p_trace - ref)))
    if err > 1e-8:
        raise StationaryError(
            f"pressure trace disagrees with the adjoint route by {err:.3e}"
        )
    return sol, p_trace


def stationary_flow_coefficients(sys: GalerkinSystem, gf: VelocityField) -> np.ndarray:
    """alpha*_k = (G0, psi_k) / (nu mu_k): the reduced stationary flow."""
    g = sys.basis.grid
    proj = np.array([inner_fluid(gf, md.field, g) for md in sys.basis.flow])
    return proj / (sys.nu * sys.basis.mu)


def pstar_mode_coeffs(sys: GalerkinSystem, gf: VelocityField) -> np.ndarray:
    """(p*, xi_j) computed as (G0, N0 xi_j): the duality route."""
    g = sys.basis.grid
    return np.array([inner_fluid(gf, md.field, g) for md in sys.basis.lifted])


def _plate_force_coeffs(sys: GalerkinSystem, model: ForceModel | None, beta: np.ndarray):
    if model is None:
        return np.zeros(sys.n)
    g = sys.basis.grid
    Xi = sys.basis.plate_shapes()
    return g.h_x * Xi @ model.force(Xi.T @ beta)


def stationary_residual(sys: GalerkinSystem, beta: np.ndarray,
                        pstar_coeffs: np.ndarray, model: ForceModel | None = None) -> float:
    """Norm of the stationary plate equations over the plate mode basis."""
    r = sys.kappa * beta + _plate_force_coeffs(sys, model, beta) - pstar_coeffs - sys.f_plate
    return float(np.linalg.norm(r))


def _psi_value(sys: GalerkinSystem, beta, pstar_coeffs, model):
    Xi = sys.basis.plate_shapes()
    pot = 0.0 if model is None else model.potential(Xi.T @ beta)
    return 0.5 * float(sys.kappa @ beta ** 2) + pot - float((pstar_coeffs + sys.f_plate) @ beta)


def minimize_stationary(sys: GalerkinSystem, pstar_coeffs: np.ndarray,
                        model: ForceModel | None = None,
                        beta_init: np.ndarray | None = None,
                        stat_tol: float = STAT_TOL, max_iter: int = 500) -> Equilibrium:
    """Descend the stationary plate functional on zero-mean mode coefficients.

    Gradient descent with backtracking, then Newton polish with a
    finite-difference Hessian.  The zero-mean restriction is built into the
    basis, which fixes the additive pressure constant.
    """
    n = sys.n
    beta = np.zeros(n) if beta_init is None else np.array(beta_init, float)

    def grad(b):
        return sys.kappa * b + _plate_force_coeffs(sys, model, b) - pstar_coeffs - sys.f_plate

    def value(b):
        return _psi_value(sys, b, pstar_coeffs, model)

    # scaled gradient descent (preconditioned by the bending stiffness)
    P = 1.0 / sys.kappa
    val = value(beta)
    for _ in range(max_iter):
        gvec = grad(beta)
        if np.linalg.norm(gvec) <= 0.1 * stat_tol:
            break
        d = -P * gvec
        step_len = 1.0
        for _ in range(40):
            trial = beta + step_len * d
            tval = value(trial)
            if tval <= val + 1e-4 * step_len * float(gvec @ d):
                beta, val = trial, tval
                break
            step_len *= 0.5
        else:
            break

    # Newton polish
    for _ in range(30):
        gvec = grad(beta)
        if np.linalg.norm(gvec) <= 1e-13 * (1.0 + np.max(sys.kappa)):
            break
        eps = 1e-7
        Hess = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = eps
            Hess[:, j] = (grad(beta + e) - grad(beta - e)) / (2 * eps)
        Hess = 0.5 * (Hess + Hess.T)
        try:
            delta = np.linalg.solve(Hess, -gvec)
        except np.linalg.LinAlgError:
            break
        if np.linalg.norm(delta) > 10.0:
            delta *= 10.0 / np.linalg.norm(delta)
        beta = beta + delta

    res = stationary_residual(sys, beta, pstar_coeffs, model)
    if res > stat_tol:
        raise StationaryError(
            f"stationary descent stagnated: residual {res:.3e} above {stat_tol:.1e}"
        )
    return Equilibrium(
        alpha_star=np.zeros(sys.m),
        beta_star=beta,
        pstar_coeffs=pstar_coeffs.copy(),
        residual=res,
        energy=value(beta),
    )


def find_equilibria(sys: GalerkinSystem, pstar_coeffs: np.ndarray,
                    model: ForceModel | None = None, starts: int = 8,
                    scale: float = 0.5, seed: int = 0) -> list[Equilibrium]:
    """Multi-start descent; returns distinct equilibria sorted by energy."""
    rng = np.random.default_rng(seed)
    found = []
    inits = [None] + [scale * rng.standard_normal(sys.n) for _ in range(starts - 1)]
    for b0 in inits:
        try:
            eq = minimize_stationary(sys, pstar_coeffs, model, beta_init=b0)
        except StationaryError:
            continue
        if not any(np.linalg.norm(eq.beta_star - e.beta_star) < 1e-6 for e in found):
            found.append(eq)
    return sorted(found, key=lambda e: e.energy)


def equilibrium_state(sys: GalerkinSystem, gf: VelocityField, eq: Equilibrium) -> np.ndarray:
    alpha_star = stationary_flow_coefficients(sys, gf)
    return sys.join(alpha_star, eq.beta_star, np.zeros(sys.n))


def converge_to_equilibrium(sys: GalerkinSystem, y0: np.ndarray, gf: VelocityField,
                            T: float, dt: float, model: ForceModel | None = None,
                            stride: int = 50):
    """Run the dynamics and measure the distance to an independently found
    equilibrium (seeded from the trajectory tail).

    Returns (distances over time, matched Equilibrium, trajectory).
    """
    from .dynamics import simulate

    alpha_star = stationary_flow_coefficients(sys, gf)
    pstar = pstar_mode_coeffs(sys, gf)
    traj = simulate(sys, y0, T, dt, model, stride=stride,
                    alpha_star=alpha_star, pstar_coeffs=pstar)
    beta_tail = traj.states[-1][sys.m:sys.m + sys.n]
    eq = minimize_stationary(sys, pstar, model, beta_init=beta_tail)
    y_eq = sys.join(alpha_star, eq.beta_star, np.zeros(sys.n))
    dist = np.array([sys.state_norm(traj.states[k] - y_eq) for k in range(len(traj.t))])
    return dist, eq, traj
