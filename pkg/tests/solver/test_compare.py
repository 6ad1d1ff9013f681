import numpy as np
import pytest

from pmarray.geometry import ArrayModel
from pmarray.sampling import ProvenanceKind, dsv_grid
from pmarray.solver import SolverMode, compare_modes, isocenter_field, simulate_map, solve

from . import ring


def test_halbach_field_points_along_x(ring: ArrayModel):
    """Asserts a k = 2 ring produces a transverse field along +x at its center."""
    B = isocenter_field(ring, solve(ring, SolverMode.IDEAL))
    assert B[0] > 0
    assert abs(B[1]) < 1e-9 * B[0]
    assert abs(B[2]) < 1e-9 * B[0]


def test_compare_modes(ring: ArrayModel):
    """Checks the three modes share one grid and order by field strength."""
    grid = dsv_grid(0.04, 0.01)
    results = compare_modes(ring, grid)
    assert [r.mode for r in results] == list(SolverMode)

    ideal, linear, nonlinear = results
    # Interaction with neighbours demagnetizes the magnets below their remanence
    assert ideal.isocenter_Bx > linear.isocenter_Bx > 0
    assert nonlinear.isocenter_Bx == pytest.approx(linear.isocenter_Bx, rel=0.05)

    for r in results:
        assert r.metrics.points == len(grid)
        assert r.fieldmap.provenance.mode == r.mode.value
        record = r.to_dict()
        assert record["mode"] == r.mode.value
        assert "solve" in record["timings"]
    assert "assemble" not in ideal.timings


def test_simulated_map_provenance(ring: ArrayModel):
    """Asserts simulated maps record their mode and temperature."""
    warm = ring.at_temperature(23.7)
    solution = solve(warm, "linear")
    fmap = simulate_map(warm, solution, dsv_grid(0.04, 0.01))
    assert fmap.provenance.kind == ProvenanceKind.SIMULATED
    assert fmap.provenance.temperature == 23.7

    cold = simulate_map(ring, solve(ring, "linear"), dsv_grid(0.04, 0.01))
    assert np.all(np.abs(fmap.Bx) < np.abs(cold.Bx))
