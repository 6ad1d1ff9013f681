import numpy as np
import pytest

from pmarray.sampling import FieldMap, Provenance, ProvenanceKind, SampleGrid, dsv_grid


@pytest.fixture
def grid() -> SampleGrid:
    return dsv_grid(0.06, 0.01)


@pytest.fixture
def fmap(grid: SampleGrid) -> FieldMap:
    """A smooth synthetic 50 mT map with a small quadratic inhomogeneity."""
    x, y, z = grid.points.T
    Bx = 0.05 * (1 + 2.0 * x**2 - 1.0 * y**2 - 1.0 * z**2)
    B = np.column_stack([Bx, 1e-4 * x * y, np.zeros(len(grid))])
    return FieldMap(grid, B, Provenance(ProvenanceKind.SIMULATED, mode="linear", temperature=18.0))
