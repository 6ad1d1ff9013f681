"""Working points of interacting magnets."""
from .compare import ModeComparison, compare_modes, isocenter_field, simulate_map
from .interaction import InteractionMatrix, assemble, update_matrix
from .working_point import (
    Characteristics,
    FixedPointConfig,
    SolverMode,
    WorkingPointSolution,
    WorkingPointSummary,
    solve,
    solve_ideal,
    solve_linear,
    solve_nonlinear,
    summarize,
    write_working_points,
)
