import math

import numpy as np
import pytest

from pmarray.errors import DomainError
from pmarray.geometry import HJCurve, Material, material_at_temperature

from . import material


def test_curve_validation():
    """Checks that non-monotone or malformed tables are rejected."""
    with pytest.raises(DomainError):
        HJCurve((0.0,), (1.0,))
    with pytest.raises(DomainError):
        HJCurve((0.0, 1.0), (1.0,))
    with pytest.raises(DomainError):
        HJCurve((0.0, 0.0), (1.0, 1.1))
    with pytest.raises(DomainError):
        HJCurve((0.0, 1.0), (1.1, 1.0))
    with pytest.raises(DomainError):
        HJCurve((0.0, math.inf), (1.0, 1.1))


def test_curve_extrapolates_linearly():
    """Asserts evaluation beyond the table follows the end segments."""
    curve = HJCurve((0.0, 1.0, 2.0), (0.0, 1.0, 3.0))
    assert float(curve(-1.0)) == pytest.approx(-1.0)
    assert float(curve(3.0)) == pytest.approx(5.0)
    np.testing.assert_allclose(curve.slopes(), [1.0, 2.0])


def test_curve_shape(material: Material):
    """Checks that the zero-remanence shape passes through the origin."""
    assert material.hj_curve is not None
    shape = material.hj_curve.shape(material.J_r0)
    assert not shape.includes_remanence
    assert float(shape(0.0)) == pytest.approx(0.0, abs=1e-12)
    assert shape.shape(material.J_r0) is shape


def test_material_validation():
    """Checks the sign conventions and the remanence-point invariant."""
    with pytest.raises(DomainError):
        Material("bad", J_r0=0.0, H_c0=-1.0)
    with pytest.raises(DomainError):
        Material("bad", J_r0=1.0, H_c0=1.0)
    with pytest.raises(DomainError):
        Material("bad", J_r0=1.0, H_c0=-1.0, mu_M=-0.1)

    off = HJCurve.linear(1.2, 0.05, -1e6, 1e5)
    with pytest.raises(DomainError):
        Material("bad", J_r0=1.4, H_c0=-955_000.0, hj_curve=off)


def test_temperature_laws(material: Material):
    """Asserts the remanence and coercivity follow their temperature laws."""
    state = material_at_temperature(material, material.T_ref)
    assert state.J_r == material.J_r0
    assert state.H_c == material.H_c0
    assert state.curve is material.hj_curve

    dT = 5.7
    state = material_at_temperature(material, material.T_ref + dT)
    assert state.J_r == pytest.approx(material.J_r0 * (1 + material.K_J * dT))
    assert state.H_c == pytest.approx(
        material.H_c0 * (1 + material.K_H1 * dT + material.K_H2 * dT**2)
    )
    assert state.curve is not None
    assert float(state.curve(0.0)) == pytest.approx(state.J_r, rel=1e-3)


def test_temperature_bound(material: Material):
    """Checks that temperatures outside the sanity bound are rejected."""
    for T in (-41.0, 121.0):
        with pytest.raises(DomainError):
            material_at_temperature(material, T)
