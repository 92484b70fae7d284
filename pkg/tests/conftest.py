import numpy as np
import pytest

from homocut import geometries as geo


@pytest.fixture(scope="session")
def torus4():
    return geo.flat_torus_mesh(4)


@pytest.fixture(scope="session")
def torus8():
    return geo.flat_torus_mesh(8)


@pytest.fixture(scope="session")
def cylinder_small():
    return geo.hyperbolic_cylinder_mesh(-1.0, 1.0, 4, 6)


@pytest.fixture(scope="session")
def disk_small():
    return geo.flat_disk_mesh(2, 8)


@pytest.fixture(scope="session")
def solid_torus_small():
    return geo.solid_torus_mesh(5, 5)


def pairing(cochain, chain):
    """Evaluate an edge cochain (array or map) on a chain {edge: weight}."""
    if isinstance(cochain, dict):
        return sum(cochain.get(ei, 0) * w for ei, w in chain.items())
    return sum(cochain[ei] * w for ei, w in chain.items())
