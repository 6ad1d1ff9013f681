"""The magnetic field of bar magnets, in closed form and by numerical integration."""
from .kernel import (
    GUARD_DISTANCE,
    FieldSample,
    bar_field_global,
    bar_field_local,
    field_at,
    superpose,
)
from .oracle import oracle_field_at, oracle_surface_charge
