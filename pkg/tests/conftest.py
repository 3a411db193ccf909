import numpy as np
import pytest

from gravising import Exact1D, MeanField, Tabulated


@pytest.fixture(scope="session")
def exact1d():
    return Exact1D(1.0)


@pytest.fixture(scope="session")
def meanfield():
    return MeanField(1.0, d=2)


@pytest.fixture(scope="session")
def tabulated(exact1d):
    """Tabulated backend fed from the exact 1D isotherm on a wide grid."""
    h = np.linspace(0.0, 6.0, 601)
    return Tabulated(1.0, h, exact1d.magnetization(h), phi0=exact1d.pressure(0.0))


@pytest.fixture(scope="session")
def backends(exact1d, meanfield, tabulated):
    return {"exact1d": exact1d, "meanfield": meanfield, "tabulated": tabulated}


def dense_chain_covariance(n, mass):
    """Oracle: invert the explicitly assembled tridiagonal precision."""
    q = (
        np.diag(np.full(n, 1.0 + mass * mass))
        + np.diag(np.full(n - 1, -0.5), 1)
        + np.diag(np.full(n - 1, -0.5), -1)
    )
    return np.linalg.inv(q)
