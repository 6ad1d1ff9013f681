"""
The ``pmarray`` command line.

Each subcommand resolves its configuration from the built-in defaults, an
optional ``--config`` document and the explicit flags, in that order.
Outputs are written into a staging directory that only replaces the
requested output directory once the command succeeds, together with a
``manifest.json`` echoing the resolved configuration and the hashes of
every input file. A JSON summary is printed on stdout.

On failure, one JSON error record is printed on stderr and the process
exits with a status identifying the kind of error:

====== ==============================================================
Status Meaning
====== ==============================================================
0      Success
2      Invalid configuration, unreadable input or domain violation
3      Invalid geometry, e.g. overlapping magnets
4      Numerical failure, including an aborted Monte Carlo run
5      The fixed-point iteration did not converge
====== ==============================================================
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import shutil
import sys
import tempfile
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterator, Mapping, Sequence

import numpy as np

from . import __version__
from .budget import (
    combine_analytic,
    combine_mc_oracle,
    default_budget,
    load_budget,
    write_budget_result,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    GeometryError,
    NumericalError,
    ParseError,
    PmArrayError,
)
from .geometry import (
    ArrayModel,
    HalbachDesign,
    halbach_array,
    load_array,
    load_materials,
    load_ring_offsets,
    reference_materials,
    reference_ring_offsets,
    save_array,
)
from .montecarlo import (
    MC_CONFIG_SCHEMA,
    VariabilityConfig,
    build_base,
    reference_preset,
    run_mc,
    stability_rows,
    write_mc_raw,
    write_mc_result,
    write_stability,
)
from .perturbations import (
    apply_ring_shifts,
    rotation_sweep,
    torque_map,
    write_torque_report,
)
from .sampling import (
    Convention,
    FieldMap,
    GridShape,
    GridSpec,
    l2_discrepancy,
    load_fieldmap,
    make_grid,
    max_gradient,
    metrics,
    save_fieldmap,
    save_profiles,
)
from .solver import (
    FixedPointConfig,
    SolverMode,
    assemble,
    compare_modes,
    simulate_map,
    solve,
    write_working_points,
)
from .utils import sha256_file, write_json_document, write_table

__all__ = (
    "RUN_SCHEMA",
    "MANIFEST_SCHEMA",
    "RunConfig",
    "build_parser",
    "resolve_config",
    "exit_status",
    "main",
)

log = logging.getLogger(__name__)

RUN_SCHEMA = "pmarray.run"
MANIFEST_SCHEMA = "pmarray.manifest"
CUBE_MATERIAL = "N52-cube"
SIGN_AGREEMENT_THRESHOLD = 0.99
ZLINES_SPEC = GridSpec(GridShape.ZLINES, diameter=0.24, step=0.005, lines=8, length=0.18)
DEFAULT_TEMPERATURE = 18.0
"""The temperature of generated arrays when none is configured, in °C."""


@dataclass(frozen=True)
class RunConfig:
    """The fully resolved configuration of one command."""

    command: str = ""
    geometry: str | None = None
    """The geometry file, or ``None`` for the built-in Halbach demo array."""
    materials: str = "two"
    """``two`` keeps each magnet's material, ``cube`` uses the cube material for all."""
    materials_file: str | None = None
    temperature: float | None = None
    """The array temperature in °C, or ``None`` to keep the geometry file's own.

    Generated arrays use 18 °C when unset.
    """
    mode: str = "nonlinear"
    """A solver mode, or ``all`` to compare every mode."""
    grid: GridSpec = field(default_factory=GridSpec)
    ring_offsets: str | None = None
    """A ring offset file, or ``reference`` for the shipped offsets."""
    rotations: tuple[float, ...] = ()
    angle: float = 1.2
    """The deterministic rotation underlying Monte Carlo draws, in degrees."""
    mc: VariabilityConfig | None = None
    budget: str | None = None
    """A budget file, or ``default`` to derive the budget from the map."""
    maps: tuple[str, ...] = ()
    design: str | None = None
    seed: int = 0
    oracle_draws: int = 0
    """The draws of the sampled budget propagation, 0 to skip it."""
    stability: tuple[int, ...] = ()
    output: str = "pmarray-out"
    solver: FixedPointConfig = field(default_factory=FixedPointConfig)
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.materials not in ("two", "cube"):
            raise ConfigurationError(f"materials must be 'two' or 'cube', not {self.materials!r}")
        if self.mode != "all":
            try:
                SolverMode(self.mode)
            except ValueError:
                raise ConfigurationError(f"unknown solver mode {self.mode!r}") from None
        if self.threads is not None and self.threads < 1:
            raise ConfigurationError("threads must be 1 or higher")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base: RunConfig | None = None) -> RunConfig:
        """Overlays a ``pmarray.run`` document body onto a configuration.

        :raises ConfigurationError: A key is unknown or has an invalid value.

        """
        config = base or cls()
        known = set(cls.__dataclass_fields__) - {"command", "schema", "version"}
        unknown = set(data) - known - {"schema", "version"}
        if unknown:
            raise ConfigurationError(f"unknown run configuration keys: {', '.join(sorted(unknown))}")

        values: dict[str, Any] = {k: v for k, v in data.items() if k in known}
        try:
            if "grid" in values:
                values["grid"] = GridSpec.from_dict(values["grid"])
            if values.get("mc") is not None:
                values["mc"] = VariabilityConfig.from_dict(values["mc"])
            if "solver" in values:
                values["solver"] = FixedPointConfig.from_dict(values["solver"])
            for key in ("rotations", "maps", "stability"):
                if key in values:
                    values[key] = tuple(values[key])
            if values.get("temperature") is not None:
                values["temperature"] = float(values["temperature"])
        except (TypeError, ValueError) as e:
            if isinstance(e, PmArrayError):
                raise
            raise ConfigurationError(f"invalid run configuration: {e}") from e
        return replace(config, **values)

    def to_dict(self) -> dict[str, Any]:
        """Returns the configuration without the thread count, which never affects results."""
        data = {
            k: getattr(self, k)
            for k in self.__dataclass_fields__
            if k not in ("threads", "grid", "mc", "solver")
        }
        data["rotations"] = list(self.rotations)
        data["maps"] = list(self.maps)
        data["stability"] = list(self.stability)
        data["grid"] = self.grid.to_dict()
        data["mc"] = None if self.mc is None else self.mc.to_dict()
        data["solver"] = asdict(self.solver)
        return data


def _read_config_document(path: str) -> dict[str, Any]:
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ParseError(f"could not read file: {e.strerror}", path=path) from e
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path=path, line=e.lineno) from e
    if not isinstance(document, dict):
        raise ParseError("expected a JSON object at the top level", path=path)
    if document.get("version") != 1:
        raise ParseError(f"unsupported version {document.get('version')!r}", path=path)
    return document


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Resolves defaults, the ``--config`` document and explicit flags.

    The document may be a run configuration or, for ``mc``, a Monte Carlo
    configuration.

    :raises ConfigurationError: A value is invalid.
    :raises ParseError: The configuration document is malformed.

    """
    config = RunConfig(command=args.command)

    if args.config is not None:
        document = _read_config_document(args.config)
        schema = document.get("schema")
        if schema == RUN_SCHEMA:
            config = RunConfig.from_dict(document, config)
        elif schema == MC_CONFIG_SCHEMA:
            config = replace(config, mc=VariabilityConfig.from_dict(document))
        else:
            raise ParseError(f"unexpected configuration schema {schema!r}", path=args.config)

    flags = {
        "geometry": getattr(args, "geometry", None),
        "materials": getattr(args, "materials", None),
        "materials_file": getattr(args, "materials_file", None),
        "temperature": getattr(args, "temp", None),
        "mode": getattr(args, "mode", None),
        "ring_offsets": getattr(args, "offsets", None),
        "angle": getattr(args, "angle", None),
        "budget": getattr(args, "budget", None),
        "design": getattr(args, "design", None),
        "seed": getattr(args, "seed", None),
        "oracle_draws": getattr(args, "oracle_draws", None),
        "output": getattr(args, "output", None),
        "threads": getattr(args, "threads", None),
    }
    for key in ("rotations", "maps", "stability"):
        value = getattr(args, key, None)
        if value is not None:
            flags[key] = tuple(value)
    config = replace(config, **{k: v for k, v in flags.items() if v is not None})

    grid = config.grid
    if getattr(args, "preset", None) == "zlines":
        grid = ZLINES_SPEC
    elif getattr(args, "preset", None) == "dsv":
        grid = GridSpec()
    grid_flags = {
        "diameter": getattr(args, "diameter", None),
        "step": getattr(args, "step", None),
        "convention": getattr(args, "convention", None),
    }
    grid_flags = {k: v for k, v in grid_flags.items() if v is not None}
    if "convention" in grid_flags:
        grid_flags["convention"] = Convention(grid_flags["convention"])
    config = replace(config, grid=replace(grid, **grid_flags))

    if args.command == "mc":
        config = _resolve_mc(config, args)
    return config


def _resolve_mc(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    mc = config.mc
    if args.mc_preset is not None:
        mc = reference_preset(args.mc_preset)
    if mc is None:
        raise ConfigurationError("mc needs a Monte Carlo configuration (--config or --mc-preset)")

    overrides: dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.draws is not None:
        overrides["draws"] = args.draws
    if args.additive:
        overrides["additive"] = True
    if args.per_material:
        overrides["per_material"] = True
    if config.stability and config.stability[-1] > overrides.get("draws", mc.draws):
        overrides["draws"] = config.stability[-1]
    return replace(config, mc=replace(mc, **overrides))


def _input_paths(config: RunConfig) -> list[str]:
    paths = [config.geometry, config.materials_file, config.design, *config.maps]
    if config.ring_offsets not in (None, "reference"):
        paths.append(config.ring_offsets)
    if config.budget not in (None, "default"):
        paths.append(config.budget)
    return [p for p in paths if p is not None]


def _input_hashes(config: RunConfig, config_path: str | None) -> dict[str, str]:
    paths = _input_paths(config)
    if config_path is not None:
        paths.append(config_path)

    hashes = {}
    for path in paths:
        try:
            hashes[path] = sha256_file(path)
        except OSError as e:
            raise ParseError(f"could not read file: {e.strerror}", path=path) from e
    return hashes


def write_manifest(path: Path, config: RunConfig, inputs: Mapping[str, str]) -> None:
    body = {
        "tool": "pmarray",
        "tool_version": __version__,
        "config": config.to_dict(),
        "inputs": dict(sorted(inputs.items())),
    }
    write_json_document(path, MANIFEST_SCHEMA, body)


@contextlib.contextmanager
def staged_output(target: Path, *, force: bool = False) -> Iterator[Path]:
    """Yields a staging directory that replaces ``target`` on success.

    :raises ConfigurationError:
        ``target`` exists and is not an empty directory, and ``force`` is not set.

    """
    if target.exists() and not force:
        if not target.is_dir() or any(target.iterdir()):
            raise ConfigurationError(f"output directory {target} already exists")

    target.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{target.name}-", dir=target.parent))
    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise

    if target.is_dir():
        shutil.rmtree(target)
    elif target.exists():
        target.unlink()
    os.replace(staging, target)


# Shared helpers


def _temperature(config: RunConfig) -> float:
    return DEFAULT_TEMPERATURE if config.temperature is None else config.temperature


def build_array(config: RunConfig) -> ArrayModel:
    """Loads or generates the array of a run at its temperature."""
    if config.materials_file is not None:
        materials = load_materials(config.materials_file)
    else:
        materials = reference_materials()

    if config.geometry is None:
        array = halbach_array(materials=materials, temperature=_temperature(config))
    else:
        array = load_array(config.geometry, materials=materials)
        if config.temperature is not None:
            array = array.at_temperature(config.temperature)

    if config.materials == "cube":
        array = array.with_uniform_material(CUBE_MATERIAL)
    return array


def _ring_offsets(config: RunConfig) -> dict[int, float]:
    if config.ring_offsets is None:
        return {}
    if config.ring_offsets == "reference":
        return reference_ring_offsets()
    return load_ring_offsets(config.ring_offsets)


def _single_mode(config: RunConfig) -> SolverMode:
    if config.mode == "all":
        raise ConfigurationError(f"{config.command} needs a single solver mode")
    return SolverMode(config.mode)


def _load_map(path: str, args: argparse.Namespace) -> FieldMap:
    return load_fieldmap(path, length_unit=args.length_unit, field_unit=args.field_unit)


# Commands

Summary = dict[str, Any]


def cmd_solve(config: RunConfig, args: argparse.Namespace, out: Path) -> Summary:
    array = build_array(config)
    grid = make_grid(config.grid)
    modes = tuple(SolverMode) if config.mode == "all" else (SolverMode(config.mode),)

    results = compare_modes(array, grid, modes, config=config.solver, workers=config.threads)

    summary: Summary = {
        "magnets": len(array),
        "points": len(grid),
        "temperature": array.temperature,
        "modes": {},
    }
    timings = {}
    for r in results:
        name = r.mode.value
        save_fieldmap(r.fieldmap, out / f"fieldmap_{name}.txt")
        if config.grid.shape == GridShape.ZLINES:
            save_profiles(r.fieldmap, out / f"profiles_{name}.txt")
        write_working_points(out / f"working_points_{name}.txt", array, r.solution)

        row = r.to_dict()
        timings[name] = row.pop("timings")
        summary["modes"][name] = row

    write_json_document(out / "metrics.json", "pmarray.solve", summary)
    # Wall-clock times vary between runs so they stay out of the numeric outputs
    write_json_document(out / "timings.json", "pmarray.timings", {"seconds": timings})
    return summary


def cmd_torque(config: RunConfig, args: argparse.Namespace, out: Path) -> Summary:
    mode = _single_mode(config)
    array = apply_ring_shifts(build_array(config), _ring_offsets(config))
    matrix = assemble(array, workers=config.threads)

    solution = solve(array, mode, matrix, config=config.solver)
    report = torque_map(array, solution)
    write_torque_report(report, out / "torque.txt")

    summary: Summary = {
        "magnets": len(report),
        "mode": mode.value,
        "positive": int((report.sign > 0).sum()),
        "negative": int((report.sign < 0).sum()),
        "zero": int((report.sign == 0).sum()),
    }
    if mode == SolverMode.NONLINEAR:
        linear = torque_map(array, solve(array, SolverMode.LINEAR, matrix, config=config.solver))
        agreement = report.sign_agreement(linear)
        summary["linear_sign_agreement"] = agreement
        if agreement < SIGN_AGREEMENT_THRESHOLD:
            log.warning(
                f"torque signs of the linear and nonlinear solves agree for only "
                f"{agreement:.1%} of the magnets"
            )

    write_json_document(out / "torque.json", "pmarray.torque_summary", summary)
    return summary


def cmd_perturb(config: RunConfig, args: argparse.Namespace, out: Path) -> Summary:
    mode = _single_mode(config)
    grid = make_grid(config.grid)
    array = build_array(config)

    def evaluate(a: ArrayModel) -> tuple[Any, dict[str, Any]]:
        solution = solve(a, mode, config=config.solver, workers=config.threads)
        return solution, metrics(simulate_map(a, solution, grid, workers=config.threads)).to_dict()

    steps: list[dict[str, Any]] = []
    solution, m = evaluate(array)
    steps.append({"step": "reference", "metrics": m})

    offsets = _ring_offsets(config)
    if offsets:
        array = apply_ring_shifts(array, offsets)
        save_array(array, out / "geometry_shifted.json")
        solution, m = evaluate(array)
        steps.append({"step": "ring_shifts", "metrics": m})

    if config.rotations:
        report = torque_map(array, solution)
        write_torque_report(report, out / "torque.txt")
        sweep = rotation_sweep(
            array,
            report,
            config.rotations,
            grid,
            mode=mode,
            config=config.solver,
            workers=config.threads,
        )
        for angle, m in sweep:
            steps.append({"step": "rotation", "angle": angle, "metrics": m.to_dict()})

    summary: Summary = {"mode": mode.value, "steps": steps}
    write_json_document(out / "perturb.json", "pmarray.perturb", summary)
    return summary


def cmd_mc(config: RunConfig, args: argparse.Namespace, out: Path) -> Summary:
    mode = _single_mode(config)
    if config.mc is None:
        raise ConfigurationError("mc needs a Monte Carlo configuration")
    base = build_base(
        build_array(config),
        ring_offsets=_ring_offsets(config),
        angle=config.angle,
        mode=mode,
        solver_config=config.solver,
        workers=config.threads,
    )
    result = run_mc(base, config.mc, grid=make_grid(config.grid), workers=config.threads)
    write_mc_result(result, out / "mc_result.json")
    write_mc_raw(result, out / "mc_raw.txt")

    summary = result.to_dict()
    if config.stability:
        rows = stability_rows(result, config.stability)
        write_stability(rows, out / "stability.txt")
        summary["stability"] = [row._asdict() for row in rows]
    return summary


def cmd_budget(config: RunConfig, args: argparse.Namespace, out: Path) -> Summary:
    if len(config.maps) != 1:
        raise ConfigurationError("budget needs exactly one field map")
    fmap = _load_map(config.maps[0], args)

    if config.budget in (None, "default"):
        gradient = args.gradient if args.gradient is not None else max_gradient(fmap, args.spacing)
        budget = default_budget(fmap, gradient)
    else:
        budget = load_budget(config.budget)

    correlated = bool(args.correlated_temperature)
    analytic = combine_analytic(fmap, budget, correlated_temperature=correlated)
    write_budget_result(analytic, out / "budget.json", budget)
    summary: Summary = {"analytic": analytic.to_dict()}

    if config.oracle_draws > 0:
        oracle = combine_mc_oracle(
            fmap,
            budget,
            config.oracle_draws,
            seed=config.seed,
            correlated_temperature=correlated,
            workers=config.threads,
        )
        write_budget_result(oracle, out / "budget_oracle.json", budget)
        summary["mc_oracle"] = oracle.to_dict()
    return summary


def cmd_metrics(config: RunConfig, args: argparse.Namespace, out: Path) -> Summary:
    if len(config.maps) != 1:
        raise ConfigurationError("metrics needs exactly one field map")
    fmap = _load_map(config.maps[0], args)

    summary: Summary = {
        "points": len(fmap),
        "provenance": fmap.provenance.to_dict(),
        "metrics": metrics(fmap).to_dict(),
    }
    if config.budget is not None:
        if config.budget == "default":
            gradient = (
                args.gradient if args.gradient is not None else max_gradient(fmap, args.spacing)
            )
            budget = default_budget(fmap, gradient)
        else:
            budget = load_budget(config.budget)
        result = combine_analytic(fmap, budget)
        summary["budget"] = result.to_dict()

    write_json_document(out / "metrics.json", "pmarray.metrics", summary)
    return summary


def cmd_compare(config: RunConfig, args: argparse.Namespace, out: Path) -> Summary:
    if len(config.maps) != 2:
        raise ConfigurationError("compare needs exactly two field maps")
    a, b = (_load_map(path, args) for path in config.maps)
    summary: Summary = {"l2_discrepancy": l2_discrepancy(a, b)}
    write_json_document(out / "compare.json", "pmarray.compare", summary)
    return summary


def cmd_grid(config: RunConfig, args: argparse.Namespace, out: Path) -> Summary:
    grid = make_grid(config.grid)
    write_table(
        out / "grid.txt",
        ("x", "y", "z"),
        (map(float, p) for p in grid.points),
        metadata={"schema": "pmarray.grid", "version": 1, "grid": config.grid.to_dict()},
    )
    return {"points": len(grid), "grid": config.grid.to_dict()}


def cmd_halbach(config: RunConfig, args: argparse.Namespace, out: Path) -> Summary:
    design = HalbachDesign()
    if config.design is not None:
        design = HalbachDesign.from_dict(_read_config_document(config.design))

    materials = (
        load_materials(config.materials_file)
        if config.materials_file is not None
        else reference_materials()
    )
    array = halbach_array(design, materials, temperature=_temperature(config))
    if config.materials == "cube":
        array = array.with_uniform_material(CUBE_MATERIAL)
    save_array(array, out / "geometry.json")
    return {"magnets": len(array), "rings": len(np.unique(array.rings))}


COMMANDS: dict[str, Callable[[RunConfig, argparse.Namespace, Path], Summary]] = {
    "solve": cmd_solve,
    "torque": cmd_torque,
    "perturb": cmd_perturb,
    "mc": cmd_mc,
    "budget": cmd_budget,
    "metrics": cmd_metrics,
    "compare": cmd_compare,
    "grid": cmd_grid,
    "halbach": cmd_halbach,
}


# Parser


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="a pmarray.run or pmarray.mc JSON document")
    common.add_argument("-o", "--output", help="the output directory (default: pmarray-out)")
    common.add_argument(
        "--force", action="store_true", help="replace an existing output directory"
    )
    common.add_argument("--threads", type=int, help="the largest number of worker threads")
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="log more; repeat for debug output"
    )
    common.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    return common


def _array_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--geometry", help="the array file (default: the Halbach demo array)")
    parser.add_argument("--materials", choices=("two", "cube"))
    parser.add_argument("--materials-file", help="a pmarray.materials document")
    parser.add_argument(
        "--temp",
        type=float,
        help="the array temperature in °C (default: the geometry file's, or 18 °C)",
    )
    return parser


def _grid_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--preset", choices=("dsv", "zlines"), help="a named grid")
    parser.add_argument("--diameter", type=float, help="the DSV diameter in metres")
    parser.add_argument("--step", type=float, help="the lattice step in metres")
    parser.add_argument("--convention", choices=[c.value for c in Convention])
    return parser


def _solver_parser(*, allow_all: bool) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    choices = [m.value for m in SolverMode] + (["all"] if allow_all else [])
    parser.add_argument("--mode", choices=choices)
    return parser


def _map_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--length-unit", default="m", choices=("m", "cm", "mm"))
    parser.add_argument("--field-unit", default="T", choices=("T", "mT", "uT", "G"))
    return parser


def _gradient_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--gradient", type=float, help="the largest B_x gradient in T/m for the default budget"
    )
    parser.add_argument(
        "--spacing", type=float, help="the map's lattice step, to estimate the gradient"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmarray",
        description="Simulate and analyse permanent-magnet arrays.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = _common_parser()
    array = _array_parser()
    grid = _grid_parser()

    sub.add_parser(
        "solve",
        parents=[common, array, grid, _solver_parser(allow_all=True)],
        help="solve the working points and sample the field",
    )

    p = sub.add_parser(
        "torque",
        parents=[common, array, _solver_parser(allow_all=False)],
        help="compute the bore-axis torque on each magnet",
    )
    p.add_argument("--offsets", help="a ring offset file, or 'reference'")

    p = sub.add_parser(
        "perturb",
        parents=[common, array, grid, _solver_parser(allow_all=False)],
        help="apply ring shifts and torque-signed rotations",
    )
    p.add_argument("--offsets", help="a ring offset file, or 'reference'")
    p.add_argument(
        "--rotate", dest="rotations", type=float, nargs="+", help="rotation angles in degrees"
    )

    p = sub.add_parser(
        "mc",
        parents=[common, array, grid, _solver_parser(allow_all=False)],
        help="run a Monte Carlo variability study",
    )
    p.add_argument("--mc-preset", help="a shipped Monte Carlo preset, e.g. variability_all")
    p.add_argument("--offsets", help="a ring offset file, or 'reference'")
    p.add_argument("--angle", type=float, help="the deterministic rotation in degrees")
    p.add_argument("--seed", type=int)
    p.add_argument("--draws", type=int)
    p.add_argument("--additive", action="store_true", help="add drawn rotations to the angle")
    p.add_argument(
        "--per-material", action="store_true", help="draw one characteristic scale per material"
    )
    p.add_argument("--stability", type=int, nargs="+", help="ascending draw counts to compare")

    p = sub.add_parser(
        "budget",
        parents=[common, _map_parser()],
        help="propagate a measurement budget to the metrics of a map",
    )
    p.add_argument("maps", nargs=1, metavar="MAP")
    p.add_argument("--budget", help="a pmarray.budget document (default: derived from the map)")
    _gradient_arguments(p)
    p.add_argument("--oracle-draws", type=int, help="also propagate by sampling this many draws")
    p.add_argument("--seed", type=int)
    p.add_argument("--correlated-temperature", action="store_true")

    p = sub.add_parser(
        "metrics",
        parents=[common, _map_parser()],
        help="compute the homogeneity metrics of a map",
    )
    p.add_argument("maps", nargs=1, metavar="MAP")
    p.add_argument(
        "--budget",
        nargs="?",
        const="default",
        help="attach the uncertainty from a budget file, or the default budget",
    )
    _gradient_arguments(p)

    p = sub.add_parser(
        "compare",
        parents=[common, _map_parser()],
        help="compute the relative L2 discrepancy between two maps",
    )
    p.add_argument("maps", nargs=2, metavar="MAP")

    sub.add_parser("grid", parents=[common, grid], help="write the sample points of a grid")

    p = sub.add_parser(
        "halbach",
        parents=[common, array],
        help="generate a Halbach demo array",
    )
    p.add_argument("--design", help="a JSON document of Halbach design parameters")

    return parser


def configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(
        format="%(levelname)s %(name)s: %(message)s",
        level=level,
        stream=sys.stderr,
    )


def exit_status(error: PmArrayError) -> int:
    """Maps an error to the exit status of the command line."""
    if isinstance(error, ConvergenceError):
        return 5
    if isinstance(error, NumericalError):
        return 4
    if isinstance(error, GeometryError):
        return 3
    return 2


def error_record(error: PmArrayError) -> dict[str, Any]:
    """Describes an error as a JSON-serializable record."""
    record: dict[str, Any] = {
        "error": type(error).__name__,
        "message": str(error),
        "exit_status": exit_status(error),
    }
    for attr in ("path", "line", "record", "pair", "material_id", "achieved", "missing"):
        value = getattr(error, attr, None)
        if value is not None:
            record[attr] = list(value) if isinstance(value, tuple) else value
    if isinstance(error, ConvergenceError):
        record["iterations"] = len(error.history)
    failures = getattr(error, "failures", None)
    if failures:
        record["failures"] = [{"draw": i, "message": msg} for i, msg in failures]
    return record


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        config = resolve_config(args)
        inputs = _input_hashes(config, args.config)
        with staged_output(Path(config.output), force=args.force) as out:
            summary = COMMANDS[config.command](config, args, out)
            write_manifest(out / "manifest.json", config, inputs)
    except PmArrayError as e:
        status = exit_status(e)
        log.error(f"{args.command} failed: {e}")
        print(json.dumps(error_record(e)), file=sys.stderr)
        return status

    log.info(f"wrote outputs to {config.output}")
    print(json.dumps(summary, default=str))
    return 0
