import pytest

from pmarray.geometry import ArrayModel

from ..models import curved_material, halbach_ring, two_cubes


@pytest.fixture
def pair() -> ArrayModel:
    return two_cubes()


@pytest.fixture
def curved_pair() -> ArrayModel:
    return two_cubes(material=curved_material())


@pytest.fixture
def quad() -> ArrayModel:
    """Four cubes of the reference material on a 30 mm Halbach circle."""
    return halbach_ring(count=4, radius=0.03)


@pytest.fixture
def ring() -> ArrayModel:
    return halbach_ring(count=8, radius=0.05)
