from pathlib import Path

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from pmarray.errors import DomainError, GeometryError, MaterialReferenceError, ParseError
from pmarray.geometry import (
    ArrayModel,
    halbach_array,
    HalbachDesign,
    HalbachLayer,
    load_array,
    load_materials,
    load_ring_offsets,
    reference_materials,
    reference_ring_offsets,
    save_array,
    save_ring_offsets,
)

from . import pair, ring
from ..models import cube, linear_material


def test_array_validation():
    """Checks duplicate indices, unknown materials and overlaps."""
    material = linear_material()
    table = {material.id: material}

    with pytest.raises(DomainError):
        ArrayModel((cube(0, (0.0, 0.0, 0.0)), cube(0, (0.1, 0.0, 0.0))), table)
    with pytest.raises(MaterialReferenceError) as info:
        ArrayModel((cube(0, (0.0, 0.0, 0.0), "unknown"),), table)
    assert info.value.material_id == "unknown"
    with pytest.raises(GeometryError) as info:
        ArrayModel((cube(3, (0.0, 0.0, 0.0)), cube(7, (0.01, 0.0, 0.0))), table)
    assert info.value.pair == (3, 7)
    with pytest.raises(DomainError):
        ArrayModel((cube(0, (0.0, 0.0, 0.0)),), table, temperature=200.0)


def test_touching_magnets_do_not_overlap():
    """Asserts magnets sharing a face are accepted."""
    material = linear_material()
    array = ArrayModel(
        (cube(0, (0.0, 0.0, 0.0)), cube(1, (0.012, 0.0, 0.0))),
        {material.id: material},
    )
    assert len(array) == 2


def test_coplanar_tilted_neighbours_overlap():
    """Checks that a tilted cube cutting into a neighbour with the same z extent is rejected."""
    material = linear_material()
    table = {material.id: material}
    tilt = Rotation.from_rotvec([0.0, 0.0, np.radians(10.0)])

    with pytest.raises(GeometryError) as info:
        ArrayModel((cube(0, (0.0, 0.0, 0.0)), cube(1, (0.0121, 0.0, 0.0)).rotated(tilt)), table)
    assert info.value.pair == (0, 1)

    apart = ArrayModel((cube(0, (0.0, 0.0, 0.0)), cube(1, (0.0150, 0.0, 0.0)).rotated(tilt)), table)
    assert len(apart) == 2


def test_array_views(pair: ArrayModel):
    """Checks the vectorized views over magnets."""
    assert pair.centers.shape == (2, 3)
    assert pair.frames.shape == (2, 3, 3)
    np.testing.assert_allclose(pair.axes, [[0.0, 1.0, 0.0]] * 2)
    np.testing.assert_allclose(pair.volumes, 0.012**3)
    np.testing.assert_allclose(pair.remanences(), [1.4, 1.4])

    low, high = pair.extents()
    np.testing.assert_allclose(low, [-0.021, -0.006, -0.006])
    np.testing.assert_allclose(high, [0.021, 0.006, 0.006])

    warm = pair.at_temperature(25.0)
    assert warm.temperature == 25.0
    assert warm.remanences()[0] < pair.remanences()[0]


def test_halbach_layout(ring: ArrayModel):
    """Asserts the generated dipole has the expected rings and orientations."""
    assert len(ring) == 24
    assert sorted(set(ring.rings.tolist())) == [0, 1]

    # k = 2: the magnet at azimuth θ points along 2θ
    theta = np.arctan2(ring.centers[:, 1], ring.centers[:, 0])
    expected = np.column_stack([np.cos(2 * theta), np.sin(2 * theta), np.zeros(len(ring))])
    np.testing.assert_allclose(ring.axes, expected, atol=1e-12)


def test_halbach_overlap_is_rejected():
    """Checks that a design packing too many magnets into a layer fails."""
    design = HalbachDesign(ring_z=(0.0,), layers=(HalbachLayer(0.02, 40),), end_ring_z=())
    with pytest.raises(GeometryError):
        halbach_array(design, reference_materials())


def test_geometry_round_trip(tmp_path: Path, ring: ArrayModel):
    """Asserts saving and loading a geometry reproduces it exactly, in both formats."""
    shifted = ring.with_magnets(ring.magnets, ring_z_offsets={0: 0.0003, 1: -0.0001})
    for name in ("geometry.json", "geometry.txt"):
        path = tmp_path / name
        save_array(shifted, path)
        assert load_array(path) == shifted


def test_geometry_parse_errors(tmp_path: Path):
    """Checks that malformed geometry files raise ParseError with context."""
    path = tmp_path / "geometry.json"
    path.write_text('{"schema": "pmarray.geometry", "version": 1, "magnets": [{"index": 0}]}')
    with pytest.raises(ParseError) as info:
        load_array(path)
    assert info.value.record == 0

    path.write_text("{not json")
    with pytest.raises(ParseError) as info:
        load_array(path)
    assert info.value.line == 1

    path.write_text('{"schema": "something.else", "version": 1}')
    with pytest.raises(ParseError):
        load_array(path)


def test_reference_data():
    """Checks the shipped materials and ring offsets load and are flagged as placeholders."""
    materials = reference_materials()
    assert {"N52-cube", "N52-long"} <= set(materials)
    for m in materials.values():
        assert m.placeholder
        assert m.hj_curve is not None
        assert m.mu_M is not None

    linear = reference_materials(with_curves=False)
    assert all(m.hj_curve is None for m in linear.values())

    offsets = reference_ring_offsets()
    assert set(offsets) == set(range(9))
    assert all(abs(dz) < 0.005 for dz in offsets.values())


def test_ring_offsets_round_trip(tmp_path: Path):
    """Asserts ring offsets survive a save and load."""
    offsets = {0: 0.0003, 4: -0.00015, 8: 0.0}
    path = tmp_path / "offsets.json"
    save_ring_offsets(offsets, path)
    assert load_ring_offsets(path) == offsets


def test_materials_file_resolves_curves(tmp_path: Path):
    """Checks that a materials document resolves curve files relative to itself."""
    (tmp_path / "curve.txt").write_text("# H[A/m] J[T]\n-1000000.0 0.0\n0.0 1.2\n100000.0 1.21\n")
    (tmp_path / "materials.json").write_text(
        '{"schema": "pmarray.materials", "version": 1, "materials": ['
        '{"id": "m", "J_r0": 1.2, "H_c0": -900000.0, "hj_curve_file": "curve.txt"}]}'
    )
    materials = load_materials(tmp_path / "materials.json")
    curve = materials["m"].hj_curve
    assert curve is not None
    assert float(curve(0.0)) == 1.2
