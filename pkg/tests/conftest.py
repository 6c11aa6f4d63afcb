import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import cgptid as ci

settings.register_profile(
    "numeric",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("numeric")

KAPPA = 4.0 / 3.0
LAM = 3.5  # contrast for kappa = 4/3


@pytest.fixture(scope="session")
def unit_disk():
    return ci.make_ellipse(1.0, 1.0, 256)


@pytest.fixture(scope="session")
def ellipse():
    return ci.make_ellipse(1.0, 0.5, 512)


@pytest.fixture(scope="session")
def flower5():
    return ci.make_flower(5, 0.3, 512)


@pytest.fixture(scope="session")
def disk_pair(unit_disk):
    return ci.compute_cgpt(unit_disk, LAM, 4)


@pytest.fixture(scope="session")
def ellipse_pair(ellipse):
    return ci.compute_cgpt(ellipse, LAM, 5)


@pytest.fixture(scope="session")
def flower5_pair(flower5):
    return ci.compute_cgpt(flower5, LAM, 5)


def random_cgpt_pair(order, seed=0):
    """Structurally valid random tensors (N1 symmetric, N2 Hermitian)."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((order, order)) + 1j * rng.standard_normal((order, order))
    n1 = a + a.T
    b = rng.standard_normal((order, order)) + 1j * rng.standard_normal((order, order))
    n2 = b + b.conj().T
    n2[np.diag_indices(order)] = np.abs(np.diag(n2).real) + order
    return ci.CgptPair(order=order, n1=n1, n2=n2, contrast=LAM)
