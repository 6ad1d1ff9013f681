import pytest

from pmarray.montecarlo import BasePerturbations, build_base
from pmarray.sampling import SampleGrid, dsv_grid

from ..models import halbach_ring


@pytest.fixture(scope="module")
def base() -> BasePerturbations:
    """A linear-mode base configuration of a small two-ring array."""
    return build_base(halbach_ring(count=12, rings=(-0.02, 0.02)), angle=1.2, mode="linear")


@pytest.fixture(scope="module")
def grid() -> SampleGrid:
    return dsv_grid(0.05, 0.01)
