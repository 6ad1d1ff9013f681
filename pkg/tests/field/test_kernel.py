import math

import numpy as np
import pytest

from pmarray.errors import DomainError
from pmarray.field import (
    GUARD_DISTANCE,
    bar_field_global,
    bar_field_local,
    field_at,
    oracle_field_at,
    oracle_surface_charge,
    superpose,
)
from pmarray.geometry import BarMagnet
from pmarray.sampling import Convention, FieldMap, dsv_grid, l2_discrepancy
from pmarray.utils import MU0

from . import LONG, bar, exterior_points, near_face_points
from ..models import CUBE, halbach_ring, two_cubes


def test_far_field_is_dipolar():
    """Asserts the field far from a cube approaches that of a point dipole."""
    J = 1.4
    moment = J / MU0 * 0.012**3
    for r in (0.3, 0.5):
        axial = bar_field_local(CUBE, J, np.array([0.0, r, 0.0]))
        np.testing.assert_allclose(axial, [0.0, 2 * moment / (4 * math.pi * r**3), 0.0],
                                   rtol=1e-3, atol=1e-6)
        equatorial = bar_field_local(CUBE, J, np.array([r, 0.0, 0.0]))
        np.testing.assert_allclose(equatorial, [0.0, -moment / (4 * math.pi * r**3), 0.0],
                                   rtol=1e-3, atol=1e-6)


def test_field_is_linear_in_polarization():
    """Checks that the field scales with J_v and flips with its sign."""
    points = np.array([[0.02, 0.01, -0.015], [0.0, 0.05, 0.0]])
    H1 = bar_field_local(LONG, 1.0, points)
    np.testing.assert_allclose(bar_field_local(LONG, -2.5, points), -2.5 * H1)


def test_kernel_symmetry():
    """Checks the mirror symmetries of a bar magnetized along v."""
    p = np.array([0.013, 0.021, 0.017])
    H = bar_field_local(LONG, 1.0, p)
    Hx = bar_field_local(LONG, 1.0, p * [-1, 1, 1])
    Hy = bar_field_local(LONG, 1.0, p * [1, -1, 1])
    np.testing.assert_allclose(Hx, H * [-1, 1, 1], rtol=1e-10)
    np.testing.assert_allclose(Hy, H * [-1, 1, -1], rtol=1e-10)


def test_kernel_is_curl_and_divergence_free():
    """Asserts the exterior field has vanishing divergence and curl."""
    p = np.array([0.02, 0.03, -0.01])
    step = 1e-6
    J = np.zeros((3, 3))
    for k in range(3):
        d = np.zeros(3)
        d[k] = step
        J[:, k] = (bar_field_local(LONG, 1.0, p + d) - bar_field_local(LONG, 1.0, p - d)) / (2 * step)

    scale = np.abs(J).max()
    assert abs(np.trace(J)) < 1e-6 * scale
    np.testing.assert_allclose(J - J.T, 0.0, atol=1e-6 * scale)


def test_points_inside_are_rejected(bar: BarMagnet):
    """Checks that points inside or on a bar raise DomainError."""
    with pytest.raises(DomainError):
        bar_field_local(CUBE, 1.0, np.zeros(3))
    with pytest.raises(DomainError):
        bar_field_local(CUBE, 1.0, np.array([0.006, 0.0, 0.0]))
    with pytest.raises(DomainError):
        bar_field_global(bar, 1.0, np.array(bar.center))


def test_face_plane_guard():
    """Checks that points on a face plane but outside the bar are nudged and flagged."""
    points = np.array([[0.02, 0.006, 0.0], [0.02, 0.01, 0.0]])
    H, nudged = bar_field_local(CUBE, 1.0, points, with_flags=True)
    assert np.isfinite(H).all()
    assert nudged.tolist() == [True, False]

    near = bar_field_local(CUBE, 1.0, np.array([0.02, 0.006 + 10 * GUARD_DISTANCE, 0.0]))
    np.testing.assert_allclose(H[0], near, rtol=1e-5)


def _assert_matches_oracle(magnet: BarMagnet, points: np.ndarray) -> None:
    for p in points:
        closed = bar_field_global(magnet, 1.3, p)
        numeric = oracle_surface_charge(magnet, 1.3, p, rtol=1e-8)
        np.testing.assert_allclose(closed, numeric, rtol=1e-6, atol=1e-6 * np.linalg.norm(numeric))


def test_kernel_matches_oracle(bar: BarMagnet):
    """Asserts the closed form agrees with surface-charge integration to 1e-6."""
    _assert_matches_oracle(bar, exterior_points(bar, 20, seed=1))
    _assert_matches_oracle(bar, near_face_points(bar, 20, seed=1))


@pytest.mark.slow
def test_kernel_matches_oracle_on_many_points(bar: BarMagnet):
    """Asserts the agreement holds on 1000 random exterior points, half of them close to a face."""
    _assert_matches_oracle(bar, exterior_points(bar, 500, seed=2))
    _assert_matches_oracle(bar, near_face_points(bar, 500, seed=2))


def test_field_at_is_worker_invariant():
    """Checks that threading does not change the summed field."""
    array = two_cubes()
    rng = np.random.default_rng(3)
    points = rng.uniform(-0.004, 0.004, size=(257, 3)) + [0.0, 0.0, 0.05]
    J = np.array([1.3, 1.1])

    serial = field_at(array, J, points, chunk_size=16)
    threaded = field_at(array, J, points, workers=4, chunk_size=16)
    np.testing.assert_array_equal(serial, threaded)

    separate = bar_field_global(array.magnets[0], J[0], points) + bar_field_global(
        array.magnets[1], J[1], points
    )
    np.testing.assert_allclose(serial, separate, rtol=1e-13)

    only_first = field_at(array, J, points, magnets=[0])
    np.testing.assert_allclose(only_first, bar_field_global(array.magnets[0], J[0], points))


def test_superpose_reports_flux_density():
    """Asserts each sample carries B = μ0·H."""
    array = two_cubes()
    samples = superpose(array, [1.4, 1.4], np.array([[0.0, 0.0, 0.03], [0.0, 0.05, 0.0]]))
    assert len(samples) == 2
    for s in samples:
        np.testing.assert_allclose(s.B, MU0 * s.H)

    with pytest.raises(DomainError):
        field_at(array, [1.4], np.zeros((1, 3)))


def test_toy_array_map_matches_oracle():
    """Asserts a three-magnet map differs from the oracle map by less than 1e-10 in L2."""
    array = halbach_ring(count=3, radius=0.03)
    J = np.array([1.2, 1.3, 1.4])
    grid = dsv_grid(0.02, 0.01, convention=Convention.CENTERED)

    closed = FieldMap(grid, MU0 * field_at(array, J, grid.points))
    numeric = FieldMap(grid, MU0 * oracle_field_at(array, J, grid.points, rtol=1e-10))
    assert l2_discrepancy(closed, numeric) < 1e-10
