import numpy as np
import pytest

from plateflow.config import ExperimentConfig
from plateflow.galerkin import ForcingConfig, assemble
from plateflow.mesh import GeometryConfig, build_grid
from plateflow.modal import build_modal_basis


@pytest.fixture(scope="session")
def grid():
    return build_grid(GeometryConfig(n_x=16, n_z=16))


@pytest.fixture(scope="session")
def basis(grid):
    return build_modal_basis(grid, m=12, n=8)


@pytest.fixture(scope="session")
def sys_free(basis):
    return assemble(basis, nu=1.0)


@pytest.fixture(scope="session")
def sys_forced(basis):
    forcing = ForcingConfig(fluid_kind="shear", fluid_amp=1.0,
                            plate_kind="sine", plate_amp=0.5)
    return assemble(basis, nu=1.0, forcing=forcing)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
