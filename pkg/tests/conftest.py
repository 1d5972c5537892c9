import numpy as np
import pytest

from chaosfilter import FilterModel, assemble, build_basis, gauss_hermite_grid, project


def gaussian_p0(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def ou_test_model():
    """d=1 test model b = -x, sigma = sqrt(2), rho = 0, h = x."""
    return FilterModel(d=1, d1=1, r=1,
                       b=lambda x: -np.asarray(x, dtype=float),
                       sigma=np.sqrt(2.0), rho=0.0,
                       h=lambda x: np.asarray(x, dtype=float),
                       p0=gaussian_p0)


@pytest.fixture(scope="session")
def grid64():
    return gauss_hermite_grid(1, 64)


@pytest.fixture(scope="session")
def ou_system_k4(grid64):
    return assemble(ou_test_model(), build_basis(1, 4), grid64)


@pytest.fixture(scope="session")
def ou_system_k8(grid64):
    return assemble(ou_test_model(), build_basis(1, 8), grid64)


@pytest.fixture(scope="session")
def ou_p_init_k8(ou_system_k8, grid64):
    return project(gaussian_p0, ou_system_k8.basis, grid64)
