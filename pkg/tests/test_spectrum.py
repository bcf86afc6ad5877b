import numpy as np
import pytest

from plateflow.spectrum import (
    assemble_generator,
    contraction_norm,
    gamma_operator_checks,
    generator_eigenvalues,
    semigroup_consistency,
    spectral_abscissa,
)


@pytest.fixture(scope="module")
def gen(sys_free):
    return assemble_generator(sys_free)


def test_energy_form_positive_definite(gen):
    w = np.linalg.eigvalsh(gen.H)
    assert w[0] > 0
    assert np.max(np.abs(gen.H - gen.H.T)) < 1e-13


def test_spectrum_strictly_stable(gen):
    assert spectral_abscissa(gen) < 0


def test_eigenvalues_conjugate_symmetric(gen):
    ev = generator_eigenvalues(gen)
    for z in ev:
        if abs(z.imag) > 1e-10:
            assert np.min(np.abs(ev - np.conj(z))) < 1e-7 * max(1.0, abs(z))


def test_semigroup_contracts_in_energy_norm(gen):
    for T in (0.25, 1.0, 4.0):
        assert contraction_norm(gen, T) <= 1.0 + 1e-10
    # and strictly decays for long horizons
    assert contraction_norm(gen, 4.0) < contraction_norm(gen, 0.25)


def test_integrator_consistent_with_expm(gen, sys_free, rng):
    y0 = rng.standard_normal(gen.m + 2 * gen.n)
    y0 /= sys_free.state_norm(y0)
    d1 = semigroup_consistency(gen, sys_free, T=1.0, dt=1e-3, y0=y0)
    d2 = semigroup_consistency(gen, sys_free, T=1.0, dt=5e-4, y0=y0)
    assert 3.0 < d1 / d2 < 5.0


def test_gamma_operator_identities(basis):
    out = gamma_operator_checks(basis)
    assert out["symmetry_error"] < 1e-12
    assert out["min_eigenvalue"] > -1e-9
    assert out["gram_identity_error"] < 1e-7
    # traces are L2-orthonormal, so the pairing matrix is the identity
    assert np.max(np.abs(out["plate_gram"] - np.eye(basis.n))) < 1e-10
