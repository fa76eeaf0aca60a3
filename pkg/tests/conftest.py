import numpy as np
import pytest

from dhlab.catalog import catalog_get
from dhlab.pushforward import GridSpec, dh_monte_carlo

SAMPLES = 1_000_000
SEED = 7


@pytest.fixture(scope="session")
def disc():
    return catalog_get("disc")


@pytest.fixture(scope="session")
def hopf():
    return catalog_get("hopf")


@pytest.fixture(scope="session")
def weighted():
    return catalog_get("weighted")


@pytest.fixture(scope="session")
def sphere():
    return catalog_get("sphere")


@pytest.fixture(scope="session")
def tent():
    return catalog_get("tent")


@pytest.fixture(scope="session")
def surface_product():
    return catalog_get("surface_product")


@pytest.fixture(scope="session")
def swap_quotient():
    return catalog_get("swap_quotient")


@pytest.fixture(scope="session")
def rank2():
    return catalog_get("rank2")


@pytest.fixture(scope="session")
def disc_density(disc):
    return dh_monte_carlo(disc, GridSpec.build([(0.05, 0.95)], 64), SAMPLES, SEED)


@pytest.fixture(scope="session")
def hopf_density(hopf):
    return dh_monte_carlo(hopf, GridSpec.build([(0.1, 1.0)], 64), SAMPLES, SEED)


@pytest.fixture(scope="session")
def tent_density(tent):
    return dh_monte_carlo(tent, GridSpec.build([(-1.8, 1.8)], 64), SAMPLES, SEED)


@pytest.fixture(scope="session")
def sphere_density(sphere):
    return dh_monte_carlo(sphere, GridSpec.build([(-0.9, 0.9)], 64), SAMPLES, SEED)


def probe_grid_1d(lo, hi, n):
    return np.linspace(lo, hi, n)[:, None]
