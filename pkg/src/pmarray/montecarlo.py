"""
Monte Carlo variability of an array's homogeneity.

Each draw samples remanences, a characteristic scale, rotation magnitudes
and in-pocket displacements on top of a deterministic base configuration,
re-solves the working points and evaluates the sample grid. Every draw
has its own counter-based random stream derived from the seed and the
draw index, so results do not depend on the worker count or on which
draws are evaluated together.
"""
from __future__ import annotations

import enum
import importlib.resources
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, MonteCarloError, PmArrayError
from .geometry import ArrayModel
from .perturbations import (
    MAX_ROTATION_DEG,
    TorqueReport,
    apply_ring_shifts,
    apply_rotations,
    displace,
    torque_map,
)
from .sampling import FieldMap, SampleGrid, bx_metrics
from .solver import (
    Characteristics,
    FixedPointConfig,
    InteractionMatrix,
    SolverMode,
    assemble,
    simulate_map,
    solve,
    update_matrix,
)
from .utils import parallel_map, read_json_document, write_json_document, write_table

__all__ = (
    "MC_CONFIG_SCHEMA",
    "MC_RESULT_SCHEMA",
    "OUTPUTS",
    "MAX_FAILURE_RATE",
    "Source",
    "RemanenceSpec",
    "VariabilityConfig",
    "BasePerturbations",
    "OutputStats",
    "McResult",
    "StabilityRow",
    "build_base",
    "draw_generator",
    "run_mc",
    "mc_stability",
    "stability_rows",
    "output_stats",
    "load_variability",
    "reference_preset",
    "write_mc_result",
    "write_mc_raw",
    "write_stability",
)

log = logging.getLogger(__name__)

MC_CONFIG_SCHEMA = "pmarray.mc"
MC_RESULT_SCHEMA = "pmarray.mc_result"
OUTPUTS = ("mean_Bx", "DIS1", "DIS2")
MAX_FAILURE_RATE = 0.01
"""The largest fraction of failed draws tolerated before a run is aborted."""
RNG_ALGORITHM = "Philox"


class Source(enum.Enum):
    """A source of variability between nominally identical magnets."""

    REMANENCE = "remanence"
    """Each magnet's remanence is drawn from its material's distribution."""

    CHARACTERIZATION = "characterization"
    """The H-J characteristics are scaled along J by a common factor."""

    ORIENTATION = "orientation"
    """The torque-signed rotation magnitude of each magnet is redrawn."""

    POSITION = "position"
    """Each magnet is displaced within its pocket."""


class RemanenceSpec(NamedTuple):
    mean: float
    """The mean remanence at the operating temperature of the array, in tesla.

    The value is used as drawn; the material's temperature law is not applied
    on top of it.
    """
    std: float


@dataclass(frozen=True)
class VariabilityConfig:
    """The input distributions of a Monte Carlo run."""

    sources: frozenset[Source] = frozenset()
    remanence: Mapping[str, RemanenceSpec] = field(default_factory=dict)
    """The Gaussian remanence distribution of each material."""
    characterization_std: float = 0.0075
    """The standard deviation of the multiplicative characteristic scale."""
    per_material: bool = False
    """Draws one characteristic scale per material instead of one per draw."""
    orientation_bounds: tuple[float, float] = (0.68, 1.72)
    """The uniform bounds of the rotation magnitude in degrees."""
    additive: bool = False
    """Adds the drawn rotation to the base angle instead of replacing it."""
    position_bound: float = 0.00014
    """The half-width in metres of the uniform in-pocket displacements."""
    draws: int = 1000
    seed: int = 42

    def __post_init__(self) -> None:
        object.__setattr__(self, "sources", frozenset(Source(s) for s in self.sources))
        object.__setattr__(
            self,
            "remanence",
            {k: RemanenceSpec(float(v[0]), float(v[1])) for k, v in self.remanence.items()},
        )
        object.__setattr__(self, "orientation_bounds", tuple(map(float, self.orientation_bounds)))

        if self.draws < 1:
            raise ConfigurationError("draws must be 1 or higher")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a non-negative 64-bit integer")
        if self.characterization_std < 0:
            raise ConfigurationError("characterization std must be non-negative")
        if self.position_bound < 0:
            raise ConfigurationError("position bound must be non-negative")

        low, high = self.orientation_bounds
        if not 0 <= low <= high:
            raise ConfigurationError(f"orientation bounds {low}, {high} are not ordered")
        if high >= MAX_ROTATION_DEG:
            raise ConfigurationError(f"orientation bound {high}° is not below {MAX_ROTATION_DEG}°")
        for mid, spec in self.remanence.items():
            if spec.std < 0 or spec.mean <= 0:
                raise ConfigurationError(f"invalid remanence distribution for {mid}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> VariabilityConfig:
        """Builds a configuration from a ``pmarray.mc`` document body.

        :raises ConfigurationError: A value is missing its fields or invalid.

        """
        try:
            kwargs: dict[str, Any] = {}
            if "sources" in data:
                kwargs["sources"] = frozenset(Source(s) for s in data["sources"])
            if "remanence" in data:
                kwargs["remanence"] = {
                    mid: RemanenceSpec(float(d["mean"]), float(d["std"]))
                    for mid, d in data["remanence"].items()
                }
            if "characterization" in data:
                c = data["characterization"]
                kwargs["characterization_std"] = float(c.get("std", cls.characterization_std))
                kwargs["per_material"] = bool(c.get("per_material", False))
            if "orientation" in data:
                o = data["orientation"]
                kwargs["orientation_bounds"] = tuple(o.get("bounds_deg", cls.orientation_bounds))
                kwargs["additive"] = bool(o.get("additive", False))
            if "position" in data:
                kwargs["position_bound"] = float(data["position"]["bound"])
            if "draws" in data:
                kwargs["draws"] = int(data["draws"])
            if "seed" in data:
                kwargs["seed"] = int(data["seed"])
        except (AttributeError, KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"invalid Monte Carlo configuration: {e!r}") from e
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "sources": sorted(s.value for s in self.sources),
            "draws": self.draws,
            "seed": self.seed,
            "remanence": {
                mid: {"mean": spec.mean, "std": spec.std}
                for mid, spec in sorted(self.remanence.items())
            },
            "characterization": {
                "std": self.characterization_std,
                "per_material": self.per_material,
            },
            "orientation": {
                "bounds_deg": list(self.orientation_bounds),
                "additive": self.additive,
            },
            "position": {"bound": self.position_bound},
        }


def load_variability(path: str | os.PathLike[str]) -> VariabilityConfig:
    """Loads a Monte Carlo configuration file.

    :raises ParseError: The file is not a ``pmarray.mc`` document.
    :raises ConfigurationError: The configuration is invalid.

    """
    return VariabilityConfig.from_dict(read_json_document(path, MC_CONFIG_SCHEMA))


def reference_preset(name: str) -> VariabilityConfig:
    """Loads one of the shipped presets, e.g. ``variability_all``.

    :raises ConfigurationError: No preset has the given name.

    """
    resource = importlib.resources.files("pmarray.data") / "presets" / f"{name}.json"
    if not resource.is_file():
        raise ConfigurationError(f"unknown Monte Carlo preset {name!r}")
    with importlib.resources.as_file(resource) as path:
        return load_variability(path)


@dataclass(frozen=True, eq=False)
class BasePerturbations:
    """The deterministic configuration every draw is applied on top of."""

    array: ArrayModel
    """The array with its ring shifts applied but not yet rotated."""
    report: TorqueReport
    """The torque report providing each magnet's rotation sign."""
    angle: float = 1.2
    """The deterministic rotation magnitude in degrees."""
    mode: SolverMode = SolverMode.NONLINEAR
    solver_config: FixedPointConfig = field(default_factory=FixedPointConfig)

    def rotated(self) -> ArrayModel:
        """Returns the array with the deterministic rotations applied."""
        return apply_rotations(self.array, self.report, self.angle)


def build_base(
    array: ArrayModel,
    *,
    ring_offsets: Mapping[int, float] | None = None,
    angle: float = 1.2,
    mode: SolverMode | str = SolverMode.NONLINEAR,
    solver_config: FixedPointConfig | None = None,
    workers: int | None = None,
) -> BasePerturbations:
    """Applies ring shifts and computes the torque signs of an array.

    The torque is evaluated on the shifted, unrotated array.

    """
    mode = SolverMode(mode)
    solver_config = solver_config or FixedPointConfig()
    if ring_offsets:
        array = apply_ring_shifts(array, ring_offsets)
    solution = solve(array, mode, config=solver_config, workers=workers)
    report = torque_map(array, solution)
    return BasePerturbations(array, report, float(angle), mode, solver_config)


class OutputStats(NamedTuple):
    """The distribution of one output over the successful draws."""

    mean: float
    std: float
    q025: float
    q975: float
    half_width: float
    """The expanded half-width ``2·std``."""

    @property
    def interval(self) -> tuple[float, float]:
        return self.mean - self.half_width, self.mean + self.half_width

    def to_dict(self) -> dict[str, float]:
        return self._asdict()


def output_stats(values: Sequence[float] | np.ndarray) -> OutputStats:
    """Summarizes the finite values of one output.

    :raises DomainError: No finite values are given.

    """
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if len(values) == 0:
        raise DomainError("no successful draws to summarize")

    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    q025, q975 = (float(q) for q in np.quantile(values, [0.025, 0.975]))
    return OutputStats(mean, std, q025, q975, 2 * std)


@dataclass(frozen=True, eq=False)
class McResult:
    """The outcome of a Monte Carlo run."""

    outputs: dict[str, OutputStats]
    raw: np.ndarray
    """One row of :py:data:`OUTPUTS` per draw, NaN for failed draws."""
    seed: int
    draws: int
    config: VariabilityConfig
    failures: tuple[tuple[int, str], ...] = ()
    algorithm: str = RNG_ALGORITHM
    maps: tuple[FieldMap | None, ...] | None = None
    """The field map of every draw, if they were kept."""

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "draws": self.draws,
            "algorithm": self.algorithm,
            "outputs": {k: v.to_dict() for k, v in self.outputs.items()},
            "failures": [{"draw": i, "message": msg} for i, msg in self.failures],
            "config": self.config.to_dict(),
        }


class _Draw(NamedTuple):
    outputs: tuple[float, float, float] | None
    error: str | None
    fieldmap: FieldMap | None


def draw_generator(seed: int, draw: int) -> np.random.Generator:
    """Returns the random stream of one draw."""
    sequence = np.random.SeedSequence(seed, spawn_key=(draw,))
    return np.random.Generator(np.random.Philox(sequence))


class _Runner:
    """Evaluates individual draws against a fixed base configuration."""

    def __init__(
        self,
        base: BasePerturbations,
        config: VariabilityConfig,
        grid: SampleGrid,
        *,
        keep_maps: bool,
        workers: int | None,
    ):
        self.base = base
        self.config = config
        self.grid = grid
        self.keep_maps = keep_maps

        self.rotated = base.rotated()
        self.characteristics = Characteristics.from_array(self.rotated)
        self.matrix: InteractionMatrix | None = None
        if base.mode != SolverMode.IDEAL:
            self.matrix = assemble(self.rotated, workers=workers)

        array = self.rotated
        self.material_ids = np.array(array.material_ids)
        self.groups = self.characteristics.groups()

        if Source.REMANENCE in config.sources:
            missing = sorted(set(self.groups) - set(config.remanence))
            if missing:
                raise ConfigurationError(
                    f"no remanence distribution for {', '.join(missing)}"
                )

    def sample(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, ArrayModel]:
        """Draws the per-magnet remanence, scale and geometry of one draw."""
        config = self.config
        P = len(self.rotated)

        remanence = self.characteristics.remanence
        if Source.REMANENCE in config.sources:
            z = rng.standard_normal(P)
            remanence = np.empty(P)
            for mid, idx in self.groups.items():
                spec = config.remanence[mid]
                remanence[idx] = spec.mean + spec.std * z[idx]

        scale = np.ones(P)
        if Source.CHARACTERIZATION in config.sources:
            if config.per_material:
                for mid in sorted(self.groups):
                    scale[self.groups[mid]] = rng.normal(1.0, config.characterization_std)
            else:
                scale[:] = rng.normal(1.0, config.characterization_std)

        array = self.rotated
        if Source.ORIENTATION in config.sources:
            low, high = config.orientation_bounds
            angles = rng.uniform(low, high, P)
            if config.additive:
                angles = self.base.angle + angles
            array = apply_rotations(self.base.array, self.base.report, angles)

        if Source.POSITION in config.sources:
            bound = config.position_bound
            du, dw = rng.uniform(-bound, bound, (2, P))
            array = displace(array, du, dw)

        return remanence, scale, array

    def __call__(self, draw: int) -> _Draw:
        rng = draw_generator(self.config.seed, draw)
        try:
            remanence, scale, array = self.sample(rng)

            matrix = self.matrix
            if matrix is not None and array is not self.rotated:
                moved = [
                    i
                    for i, (a, b) in enumerate(zip(self.rotated.magnets, array.magnets))
                    if a != b
                ]
                matrix = update_matrix(matrix, array, moved)

            chars = Characteristics(
                scale * remanence,
                scale,
                self.characteristics.mu_M,
                self.characteristics.material_ids,
                self.characteristics.shapes,
            )
            solution = solve(
                array,
                self.base.mode,
                matrix,
                characteristics=chars,
                config=self.base.solver_config,
            )
            fmap = simulate_map(array, solution, self.grid)
            m = bx_metrics(fmap.Bx)
        except PmArrayError as e:
            log.warning(f"draw {draw} failed: {e}")
            return _Draw(None, f"{type(e).__name__}: {e}", None)

        log.debug(f"draw {draw}: DIS1 {m.DIS1:.1f} ppm, DIS2 {m.DIS2:.1f} ppm")
        return _Draw((m.mean_Bx, m.DIS1, m.DIS2), None, fmap if self.keep_maps else None)


def run_mc(
    base: BasePerturbations,
    config: VariabilityConfig,
    *,
    grid: SampleGrid,
    workers: int | None = None,
    keep_maps: bool = False,
) -> McResult:
    """Runs a Monte Carlo variability study.

    Draws are evaluated concurrently and reduced in draw order, so the
    result only depends on the base configuration and ``config``.

    :param base: The deterministic configuration the draws perturb.
    :param config: The input distributions, draw count and seed.
    :param grid: The points the homogeneity is evaluated on.
    :param workers: The number of draws evaluated concurrently.
    :param keep_maps: Retains the field map of every draw.
    :raises ConfigurationError:
        Remanence variability is enabled for a material without a distribution.
    :raises MonteCarloError: More than 1% of the draws failed.

    """
    runner = _Runner(base, config, grid, keep_maps=keep_maps, workers=workers)
    sources = ", ".join(sorted(s.value for s in config.sources)) or "none"
    log.info(f"running {config.draws} draws with seed {config.seed} (sources: {sources})")

    draws = parallel_map(runner, range(config.draws), workers=workers)

    raw = np.full((config.draws, len(OUTPUTS)), np.nan)
    failures = []
    for i, d in enumerate(draws):
        if d.outputs is None:
            failures.append((i, d.error or ""))
        else:
            raw[i] = d.outputs

    if len(failures) > MAX_FAILURE_RATE * config.draws:
        raise MonteCarloError(
            f"{len(failures)} of {config.draws} draws failed",
            failures=failures,
        )

    outputs = {name: output_stats(raw[:, k]) for k, name in enumerate(OUTPUTS)}
    log.info(
        f"Monte Carlo finished: DIS1 {outputs['DIS1'].mean:.0f} "
        f"± {outputs['DIS1'].half_width:.0f} ppm, {len(failures)} failed draws"
    )
    return McResult(
        outputs,
        raw,
        config.seed,
        config.draws,
        config,
        tuple(failures),
        maps=tuple(d.fieldmap for d in draws) if keep_maps else None,
    )


class StabilityRow(NamedTuple):
    draws: int
    means: dict[str, float]
    deviation: dict[str, float]
    """The relative deviation of each mean from the largest draw count."""


def mc_stability(
    base: BasePerturbations,
    config: VariabilityConfig,
    draw_counts: Iterable[int],
    *,
    grid: SampleGrid,
    workers: int | None = None,
) -> list[StabilityRow]:
    """Compares the expected outputs of runs with increasing draw counts.

    Only the largest run is evaluated. Smaller runs are its prefixes,
    which are identical to independent runs with the same seed.

    :raises DomainError: The counts are empty or not strictly ascending.

    """
    counts = _ascending(draw_counts)
    result = run_mc(base, replace(config, draws=counts[-1]), grid=grid, workers=workers)
    return stability_rows(result, counts)


def _ascending(draw_counts: Iterable[int]) -> list[int]:
    counts = [int(c) for c in draw_counts]
    if not counts or counts[0] < 1 or any(b <= a for a, b in zip(counts, counts[1:])):
        raise DomainError("draw counts must be positive and strictly ascending")
    return counts


def stability_rows(result: McResult, draw_counts: Iterable[int]) -> list[StabilityRow]:
    """Compares the expected outputs of the prefixes of a run.

    :raises DomainError:
        The counts are not strictly ascending or exceed the draws of the run.

    """
    counts = _ascending(draw_counts)
    if counts[-1] > result.draws:
        raise DomainError(f"run has only {result.draws} draws")
    reference = {
        name: output_stats(result.raw[: counts[-1], k]).mean for k, name in enumerate(OUTPUTS)
    }

    rows = []
    for count in counts:
        means = {
            name: output_stats(result.raw[:count, k]).mean for k, name in enumerate(OUTPUTS)
        }
        deviation = {
            name: abs(means[name] - reference[name]) / abs(reference[name]) for name in OUTPUTS
        }
        rows.append(StabilityRow(count, means, deviation))
    return rows


def write_mc_result(result: McResult, path: str | os.PathLike[str]) -> None:
    write_json_document(path, MC_RESULT_SCHEMA, result.to_dict())


def write_mc_raw(result: McResult, path: str | os.PathLike[str]) -> None:
    """Writes one row per successful draw. Failed draws are listed in the metadata."""
    rows = (
        (i, *(float(v) for v in row))
        for i, row in enumerate(result.raw)
        if np.isfinite(row).all()
    )
    write_table(
        path,
        ("draw", "mean_Bx[T]", "DIS1[ppm]", "DIS2[ppm]"),
        rows,
        metadata={
            "schema": "pmarray.mc_raw",
            "version": 1,
            "seed": result.seed,
            "algorithm": result.algorithm,
            "failed": [i for i, _ in result.failures],
        },
    )


def write_stability(rows: Sequence[StabilityRow], path: str | os.PathLike[str]) -> None:
    columns = ["draws"]
    columns += [f"{name}_mean" for name in OUTPUTS]
    columns += [f"{name}_deviation" for name in OUTPUTS]
    write_table(
        path,
        columns,
        (
            (r.draws, *(r.means[n] for n in OUTPUTS), *(r.deviation[n] for n in OUTPUTS))
            for r in rows
        ),
    )
