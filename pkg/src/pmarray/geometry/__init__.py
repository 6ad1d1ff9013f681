"""Magnets, materials and arrays, along with their file formats."""
from .array import OVERLAP_TOLERANCE, ArrayModel, find_overlap
from .halbach import HalbachDesign, HalbachLayer, halbach_array
from .io import (
    load_array,
    load_hj_curve,
    load_materials,
    load_ring_offsets,
    reference_materials,
    reference_ring_offsets,
    save_array,
    save_hj_curve,
    save_ring_offsets,
)
from .magnet import BarMagnet, demag_factor
from .material import (
    TEMPERATURE_BOUNDS,
    HJCurve,
    Material,
    MaterialState,
    material_at_temperature,
)
