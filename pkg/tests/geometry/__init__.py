import pytest

from pmarray.geometry import ArrayModel, Material

from ..models import curved_material, halbach_ring, linear_material, two_cubes


@pytest.fixture
def material() -> Material:
    return curved_material()


@pytest.fixture
def pair() -> ArrayModel:
    return two_cubes(material=linear_material())


@pytest.fixture
def ring() -> ArrayModel:
    return halbach_ring(count=12, rings=(-0.02, 0.02))
