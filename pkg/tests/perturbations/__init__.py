import pytest

from pmarray.geometry import ArrayModel
from pmarray.perturbations import TorqueReport, torque_map
from pmarray.solver import solve

from ..models import halbach_ring


@pytest.fixture
def ring() -> ArrayModel:
    """Two 12-magnet rings 40 mm apart."""
    return halbach_ring(count=12, rings=(-0.02, 0.02))


@pytest.fixture
def report(ring: ArrayModel) -> TorqueReport:
    return torque_map(ring, solve(ring, "linear"))
