"""Checks against reference values that need data files outside the repository.

Set ``PMARRAY_ARRAY_GEOMETRY`` to the array file of the full design and
``PMARRAY_MEASURED_MAP`` to the measured map (in mm and mT) to run them.
"""
import os

import pytest

from pmarray.geometry import ArrayModel, load_array, reference_materials
from pmarray.sampling import FieldMap, load_fieldmap


def _path(variable: str) -> str:
    path = os.environ.get(variable)
    if not path:
        pytest.skip(f"{variable} is not set")
    return path


@pytest.fixture(scope="module")
def full_array() -> ArrayModel:
    path = _path("PMARRAY_ARRAY_GEOMETRY")
    return load_array(path, materials=reference_materials()).at_temperature(18.0)


@pytest.fixture(scope="module")
def measured() -> FieldMap:
    return load_fieldmap(_path("PMARRAY_MEASURED_MAP"), length_unit="mm", field_unit="mT")
