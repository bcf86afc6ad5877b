"""Generator of the linear semigroup in modal coordinates, plus the
trace-operator identities that certify its dissipative structure."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .galerkin import GalerkinSystem
from .mesh import inner_fluid, inner_plate
from .modal import ModalBasis
from .stokes import HarmonicLifter


@dataclass
class DiscreteGenerator:
    """Matrix A with dY/dt = -A Y for the force-free unforced dynamics,
    together with the energy form H (E0 = half YᵀHY)."""

    A: np.ndarray = field(repr=False, default=None)
    H: np.ndarray = field(repr=False, default=None)
    m: int = 0
    n: int = 0


def assemble_generator(sys: GalerkinSystem) -> DiscreteGenerator:
    Alin, _ = sys.linear_parts()
    m, n = sys.m, sys.n
    N = m + 2 * n
    H = np.zeros((N, N))
    kin = np.concatenate([np.arange(m), m + n + np.arange(n)])
    H[np.ix_(kin, kin)] = sys.M
    H[m:m + n, m:m + n] = np.diag(sys.kappa)
    return DiscreteGenerator(A=-Alin, H=H, m=m, n=n)


def spectral_abscissa(gen: DiscreteGenerator) -> float:
    return float(np.max(np.real(la.eigvals(-gen.A))))


def generator_eigenvalues(gen: DiscreteGenerator) -> np.ndarray:
    """Eigenvalues of -A (the evolution matrix), sorted by real part."""
    ev = la.eigvals(-gen.A)
    return ev[np.argsort(-ev.real)]


def contraction_norm(gen: DiscreteGenerator, T: float) -> float:
    """Operator norm of exp(-T A) in the energy inner product."""
    w, V = la.eigh(gen.H)
    if w[0] <= 0:
        raise la.LinAlgError("energy form is not positive definite")
    Hs = V @ np.diag(np.sqrt(w)) @ V.T
    Hsi = V @ np.diag(1.0 / np.sqrt(w)) @ V.T
    E = la.expm(-T * gen.A)
    return float(np.linalg.norm(Hs @ E @ Hsi, 2))


def semigroup_consistency(gen: DiscreteGenerator, sys: GalerkinSystem, T: float,
                          dt: float, y0: np.ndarray) -> float:
    """Max deviation between the implicit-midpoint trajectory and expm."""
    from .dynamics import Stepper

    stepper = Stepper(sys, dt)
    n_steps = int(round(T / dt))
    y = y0.copy()
    dev = 0.0
    check_every = max(n_steps // 20, 1)
    for k in range(1, n_steps + 1):
        y, _ = stepper.step(y)
        if k % check_every == 0 or k == n_steps:
            exact = la.expm(-(k * dt) * gen.A) @ y0
            dev = max(dev, float(np.max(np.abs(y - exact))))
    return dev


def gamma_operator_checks(basis: ModalBasis, lifter: HarmonicLifter | None = None):
    """Pairing matrix of harmonically lifted traces against the lifted modes.

    Builds Gamma_hat[i, j] = (grad q_i, phi_j)_O where q_i extends the trace
    of the i-th lifted mode; checks symmetry, near-nonnegativity, and equality
    with the plate Gram matrix.
    """
    g = basis.grid
    if lifter is None:
        lifter = HarmonicLifter(g)
    n = basis.n
    grads = [lifter.lift(basis.plate[i].shape)[1] for i in range(n)]
    Gam = np.array(
        [[inner_fluid(grads[i], basis.lifted[j].field, g) for j in range(n)] for i in range(n)]
    )
    plate_gram = np.array(
        [[inner_plate(basis.plate[i].shape, basis.plate[j].shape, g) for j in range(n)]
         for i in range(n)]
    )
    sym_err = float(np.max(np.abs(Gam - Gam.T)))
    min_eig = float(np.min(la.eigvalsh(0.5 * (Gam + Gam.T))))
    gram_err = float(np.max(np.abs(Gam - plate_gram)))
    return {
        "gamma_matrix": Gam,
        "plate_gram": plate_gram,
        "symmetry_error": sym_err,
        "min_eigenvalue": min_eig,
        "gram_identity_error": gram_err,
    }
