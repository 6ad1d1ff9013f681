from .budget import (
    BudgetComponent,
    BudgetResult,
    combine_analytic,
    combine_mc_oracle,
    default_budget,
    load_budget,
    reference_budget,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    GeometryError,
    InvalidStateError,
    MaterialReferenceError,
    MonteCarloError,
    NumericalError,
    ParseError,
    PmArrayError,
)
from .field import bar_field_global, bar_field_local, field_at, oracle_field_at, superpose
from .geometry import (
    ArrayModel,
    BarMagnet,
    HalbachDesign,
    HJCurve,
    Material,
    demag_factor,
    halbach_array,
    load_array,
    load_materials,
    load_ring_offsets,
    material_at_temperature,
    reference_materials,
    reference_ring_offsets,
    save_array,
)
from .montecarlo import (
    BasePerturbations,
    McResult,
    VariabilityConfig,
    build_base,
    load_variability,
    mc_stability,
    reference_preset,
    run_mc,
)
from .perturbations import (
    TorqueReport,
    apply_ring_shifts,
    apply_rotations,
    displace,
    rotation_sweep,
    torque_map,
)
from .sampling import (
    FieldMap,
    GridSpec,
    Metrics,
    SampleGrid,
    dsv_grid,
    l2_discrepancy,
    load_fieldmap,
    make_grid,
    metrics,
    save_fieldmap,
    zlines_grid,
)
from .solver import (
    FixedPointConfig,
    InteractionMatrix,
    SolverMode,
    WorkingPointSolution,
    assemble,
    compare_modes,
    simulate_map,
    solve,
    update_matrix,
)

__version__ = "0.1.0"
