"""
Evaluates solved arrays on sample grids and compares solver modes.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from ..field import field_at
from ..geometry import ArrayModel
from ..sampling import FieldMap, Metrics, Provenance, SampleGrid, metrics
from ..utils import MU0
from .interaction import InteractionMatrix, assemble
from .working_point import (
    Characteristics,
    FixedPointConfig,
    SolverMode,
    WorkingPointSolution,
    WorkingPointSummary,
    solve,
    summarize,
)

__all__ = (
    "ModeComparison",
    "simulate_map",
    "isocenter_field",
    "compare_modes",
)

log = logging.getLogger(__name__)


def simulate_map(
    array: ArrayModel,
    solution: WorkingPointSolution,
    grid: SampleGrid,
    *,
    workers: int | None = None,
) -> FieldMap:
    """Evaluates the field of a solved array on a grid.

    :raises DomainError: A grid point lies inside a magnet.

    """
    H = field_at(array, solution.J_v, grid.points, workers=workers)
    provenance = Provenance.simulated(solution.mode.value, array.temperature)
    return FieldMap(grid, MU0 * H, provenance)


def isocenter_field(array: ArrayModel, solution: WorkingPointSolution) -> np.ndarray:
    """Returns the flux density at the origin in tesla."""
    return MU0 * field_at(array, solution.J_v, np.zeros((1, 3)))[0]


@dataclass(frozen=True, eq=False)
class ModeComparison:
    """One solver mode's results on a grid."""

    mode: SolverMode
    solution: WorkingPointSolution
    fieldmap: FieldMap
    metrics: Metrics
    isocenter_Bx: float
    summary: WorkingPointSummary
    timings: dict[str, float] = field(default_factory=dict)
    """Wall-clock seconds per phase."""

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode.value,
            "isocenter_Bx": self.isocenter_Bx,
            "metrics": self.metrics.to_dict(),
            "working_points": self.summary.to_dict(),
            "iterations": self.solution.iterations,
            "timings": dict(self.timings),
        }


def compare_modes(
    array: ArrayModel,
    grid: SampleGrid,
    modes: Iterable[SolverMode | str] = tuple(SolverMode),
    *,
    characteristics: Characteristics | None = None,
    config: FixedPointConfig | None = None,
    matrix: InteractionMatrix | None = None,
    workers: int | None = None,
) -> list[ModeComparison]:
    """Solves the same array in several modes and evaluates each on a grid.

    The interaction matrix is assembled once and shared by every mode.

    """
    modes = [SolverMode(m) for m in modes]
    assembly_time = 0.0
    if matrix is None and any(m != SolverMode.IDEAL for m in modes):
        start = time.perf_counter()
        matrix = assemble(array, workers=workers)
        assembly_time = time.perf_counter() - start

    results = []
    for mode in modes:
        timings: dict[str, float] = {}
        if mode != SolverMode.IDEAL:
            timings["assemble"] = assembly_time

        start = time.perf_counter()
        solution = solve(
            array,
            mode,
            matrix,
            characteristics=characteristics,
            config=config,
            workers=workers,
        )
        timings["solve"] = time.perf_counter() - start

        start = time.perf_counter()
        fmap = simulate_map(array, solution, grid, workers=workers)
        iso = isocenter_field(array, solution)
        timings["field"] = time.perf_counter() - start

        result = ModeComparison(
            mode,
            solution,
            fmap,
            metrics(fmap),
            float(iso[0]),
            summarize(solution),
            timings,
        )
        log.info(
            f"{mode.value}: isocenter B_x {result.isocenter_Bx * 1e3:.4f} mT, "
            f"DIS1 {result.metrics.DIS1:.0f} ppm, DIS2 {result.metrics.DIS2:.0f} ppm"
        )
        results.append(result)
    return results
