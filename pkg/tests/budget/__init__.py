import numpy as np
import pytest

from pmarray.sampling import FieldMap

from ..models import measured_map


@pytest.fixture
def scan() -> FieldMap:
    """A measured map around 50 mT whose neighbouring values are 20 μT apart."""
    return measured_map(50e-3 + np.linspace(-100e-6, 100e-6, 11))
