"""Sample grids, field maps and homogeneity metrics."""
from .fieldmap import (
    FIELDMAP_SCHEMA,
    FieldMap,
    Provenance,
    ProvenanceKind,
    load_fieldmap,
    save_fieldmap,
    save_profiles,
)
from .grid import (
    Convention,
    GridShape,
    GridSpec,
    SampleGrid,
    dsv_grid,
    make_grid,
    zlines_grid,
)
from .metrics import PPM, Metrics, bx_metrics, l2_discrepancy, max_gradient, metrics
