import numpy as np
import pytest

from plateflow.mesh import (
    GeometryConfig,
    GridError,
    bending_inner,
    build_grid,
    grad_inner,
    inner_fluid,
    inner_plate,
    is_solenoidal,
    plate_mean,
)
from plateflow.modal import (
    build_modal_basis,
    mean_shape,
    project_zero_mean,
    solve_plate_eigenmodes,
    solve_stokes_eigenmodes,
)


def test_stokes_modes_orthonormal_with_small_residuals(grid, basis):
    m = basis.m
    G = np.array([[inner_fluid(basis.flow[i].field, basis.flow[j].field, grid)
                   for j in range(m)] for i in range(m)])
    assert np.max(np.abs(G - np.eye(m))) < 1e-11
    assert all(md.residual < 1e-10 for md in basis.flow)
    assert all(is_solenoidal(md.field, grid) for md in basis.flow)
    assert np.all(np.diff(basis.mu) >= -1e-9)


def test_stokes_mode_gradient_gram_is_spectral(grid, basis):
    # (grad psi_i, grad psi_j) = mu_i delta_ij by construction of the form
    for i in range(3):
        for j in range(3):
            val = grad_inner(basis.flow[i].field, basis.flow[j].field, grid)
            want = basis.mu[i] if i == j else 0.0
            assert abs(val - want) < 1e-9 * (1.0 + basis.mu[i])


def test_first_stokes_eigenvalue_grid_convergence(grid):
    fine = build_grid(GeometryConfig(n_x=32, n_z=32))
    mu16 = solve_stokes_eigenmodes(grid, 1)[0].mu
    mu32 = solve_stokes_eigenmodes(fine, 1)[0].mu
    assert abs(mu16 - mu32) / mu32 < 0.05


def test_plate_modes_orthonormal_zero_mean(grid, basis):
    n = basis.n
    G = np.array([[inner_plate(basis.plate[i].shape, basis.plate[j].shape, grid)
                   for j in range(n)] for i in range(n)])
    assert np.max(np.abs(G - np.eye(n))) < 1e-11
    for md in basis.plate:
        assert abs(plate_mean(md.shape, grid)) < 1e-12
    assert np.all(basis.kappa > 0)
    assert np.all(np.diff(basis.kappa) >= -1e-6)


def test_plate_modes_diagonalize_bending(grid, basis):
    for i in range(3):
        for j in range(3):
            val = bending_inner(basis.plate[i].shape, basis.plate[j].shape, grid)
            want = basis.kappa[i] if i == j else 0.0
            assert abs(val - want) < 1e-7 * (1.0 + basis.kappa[i])


def test_lifted_modes_carry_their_traces(grid, basis):
    for md in basis.lifted:
        assert is_solenoidal(md.field, grid)
        assert np.max(np.abs(md.field.w[:, -1] - md.plate.shape)) < 1e-10


def test_mode_count_limits(grid):
    with pytest.raises(GridError, match="modes"):
        solve_stokes_eigenmodes(grid, 10_000)
    with pytest.raises(GridError, match="modes"):
        solve_plate_eigenmodes(grid, 10_000)


def test_mean_shape_projection(grid, rng):
    w0 = mean_shape(grid)
    assert plate_mean(w0, grid) > 0
    # bending-orthogonal to every zero-mean clamped-compatible deflection
    modes = solve_plate_eigenmodes(grid, 4)
    for md in modes:
        num = bending_inner(w0, md.shape, grid)
        assert abs(num) < 1e-9 * (1.0 + md.kappa)
    u = rng.standard_normal(grid.n_plate)
    pu = project_zero_mean(u, grid, w0)
    assert abs(plate_mean(pu, grid)) < 1e-12
    assert np.max(np.abs(project_zero_mean(pu, grid, w0) - pu)) < 1e-12


def test_basis_cache_roundtrip(grid, basis, tmp_path):
    cached = build_modal_basis(grid, basis.m, basis.n, cache_dir=str(tmp_path))
    reloaded = build_modal_basis(grid, basis.m, basis.n, cache_dir=str(tmp_path))
    assert np.array_equal(cached.mu, reloaded.mu)
    assert np.array_equal(cached.kappa, reloaded.kappa)
    for a, b in zip(cached.flow, reloaded.flow):
        assert np.array_equal(a.field.u, b.field.u)
        assert np.array_equal(a.field.w, b.field.w)
        assert np.array_equal(a.pressure.values, b.pressure.values)
    for a, b in zip(cached.lifted, reloaded.lifted):
        assert np.array_equal(a.field.u, b.field.u)
    assert np.array_equal(cached.w0, reloaded.w0)
    # the cache key includes the mode counts: a different request recomputes
    other = build_modal_basis(grid, 2, 2, cache_dir=str(tmp_path))
    assert other.m == 2 and other.n == 2
