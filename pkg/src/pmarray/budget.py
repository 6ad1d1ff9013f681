"""
Measurement uncertainty of a scanned field map and its homogeneity metrics.

Every point of a measured map carries the sensor, noise, resolution,
averaging, positioning and temperature contributions of the budget. The
contributions are combined per point and propagated to DIS1 and DIS2
either analytically, to first order, or by sampling the component
distributions directly.
"""
from __future__ import annotations

import enum
import importlib.resources
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, ParseError
from .sampling import PPM, FieldMap, ProvenanceKind, bx_metrics
from .utils import parallel_map, read_json_document, write_json_document

__all__ = (
    "BUDGET_SCHEMA",
    "BUDGET_RESULT_SCHEMA",
    "NORMAL_COVERAGE",
    "UNIFORM_COVERAGE",
    "ComponentName",
    "PDF",
    "BudgetComponent",
    "BudgetResult",
    "default_budget",
    "combine_analytic",
    "combine_mc_oracle",
    "load_budget",
    "save_budget",
    "reference_budget",
    "write_budget_result",
)

log = logging.getLogger(__name__)

BUDGET_SCHEMA = "pmarray.budget"
BUDGET_RESULT_SCHEMA = "pmarray.budget_result"
NORMAL_COVERAGE = 2.0
UNIFORM_COVERAGE = 0.95 * math.sqrt(3)
"""The coverage factor of a uniform PDF at 95% probability."""


class ComponentName(enum.Enum):
    """The contributions to the uncertainty of a measured point."""

    BX_MEAS = "Bx_meas"
    """The calibration of the sensor, relative to the reading."""
    C_NOISE = "C_noise"
    C_RES = "C_res"
    """The display resolution of the instrument."""
    C_AVG = "C_avg"
    """The averaging of the sensor over its active area."""
    C_POS = "C_pos"
    """The positioning of the sensor in the field gradient."""
    C_TEMP = "C_temp"
    """The temperature drift of the array, relative to the reading."""
    C_OFF1 = "C_off1"
    """The placement of the array in the scanner, relative to DIS1."""
    C_OFF2 = "C_off2"
    """The placement of the array in the scanner, relative to DIS2."""


_POINT_COMPONENTS = (
    ComponentName.BX_MEAS,
    ComponentName.C_NOISE,
    ComponentName.C_RES,
    ComponentName.C_AVG,
    ComponentName.C_POS,
    ComponentName.C_TEMP,
)


class PDF(enum.Enum):
    NORMAL = "normal"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class BudgetComponent:
    """One row of an uncertainty budget.

    :raises DomainError:
        The standard uncertainty is negative or the coverage factor is not positive.

    """

    name: ComponentName
    best_estimate: float | None
    """The best estimate of the quantity, or ``None`` when it is the reading itself."""
    standard_uncertainty: float
    """The standard uncertainty, in tesla or relative if :py:attr:`relative` is set."""
    pdf: PDF
    coverage_factor: float | None = None
    """The coverage factor. Defaults to 2 for normal and 0.95·√3 for uniform PDFs."""
    relative: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", ComponentName(self.name))
        object.__setattr__(self, "pdf", PDF(self.pdf))
        if self.coverage_factor is None:
            k = NORMAL_COVERAGE if self.pdf == PDF.NORMAL else UNIFORM_COVERAGE
            object.__setattr__(self, "coverage_factor", k)

        if not self.standard_uncertainty >= 0:
            raise DomainError(f"{self.name.value}: standard uncertainty must be non-negative")
        if not self.coverage_factor > 0:  # type: ignore[operator]
            raise DomainError(f"{self.name.value}: coverage factor must be positive")

    @property
    def expanded(self) -> float:
        return self.coverage_factor * self.standard_uncertainty  # type: ignore[operator]

    def scaled(self, factor: float) -> BudgetComponent:
        """Returns the component with its standard uncertainty multiplied."""
        return BudgetComponent(
            self.name,
            self.best_estimate,
            self.standard_uncertainty * factor,
            self.pdf,
            self.coverage_factor,
            self.relative,
        )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> BudgetComponent:
        best = data.get("best_estimate")
        k = data.get("coverage_factor")
        return cls(
            name=ComponentName(data["name"]),
            best_estimate=None if best is None else float(best),
            standard_uncertainty=float(data["standard_uncertainty"]),
            pdf=PDF(data["pdf"]),
            coverage_factor=None if k is None else float(k),
            relative=bool(data.get("relative", False)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name.value,
            "best_estimate": self.best_estimate,
            "standard_uncertainty": self.standard_uncertainty,
            "pdf": self.pdf.value,
            "coverage_factor": self.coverage_factor,
            "expanded": self.expanded,
            "relative": self.relative,
        }


def load_budget(path: str | os.PathLike[str]) -> list[BudgetComponent]:
    """Loads a budget file.

    :raises ParseError: The file is malformed or names a component twice.

    """
    document = read_json_document(path, BUDGET_SCHEMA)
    components = []
    seen = set()
    for i, record in enumerate(document.get("components", [])):
        try:
            c = BudgetComponent.from_dict(record)
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"invalid budget component: {e!r}", path=path, record=i) from e
        if c.name in seen:
            raise ParseError(f"duplicate component {c.name.value}", path=path, record=i)
        seen.add(c.name)
        components.append(c)
    return components


def save_budget(budget: Iterable[BudgetComponent], path: str | os.PathLike[str]) -> None:
    write_json_document(path, BUDGET_SCHEMA, {"components": [c.to_dict() for c in budget]})


def reference_budget() -> list[BudgetComponent]:
    """Returns the shipped budget of a Hall-probe scan at about 50 mT."""
    with importlib.resources.as_file(
        importlib.resources.files("pmarray.data") / "budget_hall_probe.json"
    ) as path:
        return load_budget(path)


def default_budget(
    fmap: FieldMap,
    gradient_max: float,
    *,
    K_J: float = -1.26e-3,
    temperature_spread: float | None = None,
    sensor: float = 50e-6,
    floor: float = 1e-6,
    position_tolerance: float = 1e-3,
    offset_DIS1: float = 0.014,
    offset_DIS2: float = 0.003,
) -> list[BudgetComponent]:
    """Instantiates the budget of a measured map.

    :param fmap: The measured map.
    :param gradient_max: The largest B_x gradient in the sampled volume in T/m.
    :param K_J: The temperature coefficient of the remanence in 1/°C.
    :param temperature_spread:
        The temperature variation during the scan in °C. Defaults to the
        spread recorded in the map's provenance.
    :param sensor: The relative calibration uncertainty of the sensor.
    :param floor:
        The bound in tesla used for the noise, resolution and averaging
        contributions.
    :param position_tolerance: The full width of the positioning tolerance in metres.
    :param offset_DIS1: The relative change of DIS1 under array misplacement.
    :param offset_DIS2: The relative change of DIS2 under array misplacement.
    :raises ConfigurationError:
        The map is not measured or carries no temperature metadata.

    """
    provenance = fmap.provenance
    if provenance.kind != ProvenanceKind.MEASURED:
        raise ConfigurationError("a measurement budget needs a measured field map")
    if provenance.temperature is None:
        raise ConfigurationError("field map has no temperature metadata")

    spread = provenance.temperature_spread if temperature_spread is None else temperature_spread
    if spread is None:
        raise ConfigurationError("field map has no temperature spread")
    if gradient_max < 0:
        raise DomainError("gradient must be non-negative")

    u_pos = position_tolerance * gradient_max / (2 * math.sqrt(3))
    u_temp = abs(spread * K_J)
    log.debug(f"budget: u(C_pos) {u_pos:.3g} T, u(C_temp) {u_temp:.3g} relative")

    return [
        BudgetComponent(ComponentName.BX_MEAS, None, sensor, PDF.NORMAL, relative=True),
        BudgetComponent(ComponentName.C_NOISE, 0.0, floor, PDF.NORMAL),
        BudgetComponent(ComponentName.C_RES, 0.0, floor, PDF.UNIFORM),
        BudgetComponent(ComponentName.C_AVG, 0.0, floor, PDF.UNIFORM),
        BudgetComponent(ComponentName.C_POS, 0.0, u_pos, PDF.UNIFORM),
        BudgetComponent(ComponentName.C_TEMP, 0.0, u_temp, PDF.UNIFORM, relative=True),
        BudgetComponent(ComponentName.C_OFF1, 1.0, offset_DIS1, PDF.UNIFORM, relative=True),
        BudgetComponent(ComponentName.C_OFF2, 1.0, offset_DIS2, PDF.UNIFORM, relative=True),
    ]


@dataclass(frozen=True, eq=False)
class BudgetResult:
    """The uncertainty of a measured map and of its metrics.

    Metric values and their uncertainties are in ppm.

    """

    method: str
    """Either ``analytic`` or ``mc_oracle``."""
    point_u: np.ndarray
    """The combined standard uncertainty of B_x at each point, in tesla."""
    mean_Bx: float
    DIS1: float
    DIS2: float
    u_DIS1: float
    u_DIS2: float
    u_mean_relative: float
    """The relative standard uncertainty of the mean B_x."""
    k: float = NORMAL_COVERAGE
    intervals: dict[str, tuple[float, float]] = field(default_factory=dict)
    """Empirical 95% intervals of the sampled metrics, for the oracle."""
    draws: int | None = None
    seed: int | None = None

    @property
    def U_DIS1(self) -> float:
        return self.k * self.u_DIS1

    @property
    def U_DIS2(self) -> float:
        return self.k * self.u_DIS2

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "method": self.method,
            "mean_Bx": self.mean_Bx,
            "u_mean_relative": self.u_mean_relative,
            "DIS1": self.DIS1,
            "u_DIS1": self.u_DIS1,
            "U_DIS1": self.U_DIS1,
            "DIS2": self.DIS2,
            "u_DIS2": self.u_DIS2,
            "U_DIS2": self.U_DIS2,
            "k": self.k,
            "max_point_u": float(self.point_u.max(initial=0.0)),
        }
        if self.intervals:
            data["intervals"] = {k: list(v) for k, v in self.intervals.items()}
        if self.draws is not None:
            data["draws"] = self.draws
            data["seed"] = self.seed
        return data


def _components(budget: Iterable[BudgetComponent]) -> dict[ComponentName, BudgetComponent]:
    table: dict[ComponentName, BudgetComponent] = {}
    for c in budget:
        if c.name in table:
            raise DomainError(f"duplicate component {c.name.value}")
        table[c.name] = c
    return table


def _u(table: Mapping[ComponentName, BudgetComponent], name: ComponentName) -> float:
    c = table.get(name)
    return 0.0 if c is None else c.standard_uncertainty


def _point_variance(
    Bx: np.ndarray,
    table: Mapping[ComponentName, BudgetComponent],
    *,
    correlated_temperature: bool,
) -> np.ndarray:
    variance = np.zeros_like(Bx)
    for name in _POINT_COMPONENTS:
        c = table.get(name)
        if c is None or (name == ComponentName.C_TEMP and correlated_temperature):
            continue
        u = c.standard_uncertainty * np.abs(Bx) if c.relative else c.standard_uncertainty
        variance = variance + u**2
    return variance


def combine_analytic(
    fmap: FieldMap,
    budget: Iterable[BudgetComponent],
    *,
    correlated_temperature: bool = False,
) -> BudgetResult:
    """Propagates a budget to the metrics by first-order sensitivities.

    The extreme points are treated as independent of each other and of
    the mean, whose variance is that of the point average. A temperature
    drift common to every point scales the whole map and leaves both
    metrics unchanged, so with ``correlated_temperature`` it only enters
    the uncertainty of the mean.

    :raises DomainError: The map is empty or its mean B_x is zero.

    """
    table = _components(budget)
    Bx = np.asarray(fmap.Bx, dtype=float)
    m = bx_metrics(Bx)
    N = len(Bx)
    mean = abs(m.mean_Bx)
    dis1 = m.DIS1 / PPM
    dis2 = m.DIS2 / PPM

    variance = _point_variance(Bx, table, correlated_temperature=correlated_temperature)
    i_max, i_min = int(np.argmax(Bx)), int(np.argmin(Bx))
    mean_variance = float(variance.sum()) / N**2

    u_dis1_sq = (variance[i_max] + variance[i_min]) / mean**2
    u_dis1_sq += dis1**2 * mean_variance / mean**2
    u_dis1_sq += (_u(table, ComponentName.C_OFF1) * dis1) ** 2

    deviation = Bx - m.mean_Bx
    spread = deviation / m.std_Bx if m.std_Bx > 0 else np.zeros(N)
    sensitivity = (spread - math.copysign(dis2, m.mean_Bx)) / (N * mean)
    u_dis2_sq = float(np.sum(sensitivity**2 * variance))
    u_dis2_sq += (_u(table, ComponentName.C_OFF2) * dis2) ** 2

    u_mean_sq = mean_variance / mean**2
    if correlated_temperature:
        u_mean_sq += _u(table, ComponentName.C_TEMP) ** 2

    result = BudgetResult(
        "analytic",
        np.sqrt(variance),
        m.mean_Bx,
        m.DIS1,
        m.DIS2,
        math.sqrt(u_dis1_sq) * PPM,
        math.sqrt(u_dis2_sq) * PPM,
        math.sqrt(u_mean_sq),
    )
    log.info(
        f"analytic budget: U(DIS1) {result.U_DIS1:.0f} ppm, U(DIS2) {result.U_DIS2:.0f} ppm"
    )
    return result


def _sample(
    rng: np.random.Generator,
    c: BudgetComponent | None,
    shape: Sequence[int],
) -> np.ndarray:
    """Samples zero-mean deviations with the component's standard uncertainty."""
    if c is None or c.standard_uncertainty == 0:
        return np.zeros(shape)
    u = c.standard_uncertainty
    if c.pdf == PDF.NORMAL:
        return rng.normal(0.0, u, shape)
    half = math.sqrt(3) * u
    return rng.uniform(-half, half, shape)


def _oracle_batch(
    Bx: np.ndarray,
    table: Mapping[ComponentName, BudgetComponent],
    rng: np.random.Generator,
    size: int,
    correlated_temperature: bool,
) -> np.ndarray:
    N = len(Bx)
    perturbed = np.broadcast_to(Bx, (size, N)).copy()

    for name in _POINT_COMPONENTS:
        c = table.get(name)
        if name == ComponentName.C_TEMP and correlated_temperature:
            perturbed *= 1 + _sample(rng, c, (size, 1))
        elif c is not None and c.relative:
            perturbed += Bx * _sample(rng, c, (size, N))
        else:
            perturbed += _sample(rng, c, (size, N))

    mean = perturbed.mean(axis=1)
    high = perturbed.max(axis=1)
    low = perturbed.min(axis=1)
    std = perturbed.std(axis=1)

    dis1 = (high - low) / np.abs(mean)
    dis2 = std / np.abs(mean)
    dis1 = dis1 * (1 + _sample(rng, table.get(ComponentName.C_OFF1), (size,)))
    dis2 = dis2 * (1 + _sample(rng, table.get(ComponentName.C_OFF2), (size,)))
    return np.column_stack([mean, dis1 * PPM, dis2 * PPM])


def combine_mc_oracle(
    fmap: FieldMap,
    budget: Iterable[BudgetComponent],
    draws: int = 100_000,
    *,
    seed: int = 0,
    batch: int = 1000,
    correlated_temperature: bool = False,
    workers: int | None = None,
) -> BudgetResult:
    """Propagates a budget to the metrics by sampling every component.

    Each point is perturbed independently by the point components, the
    metrics are recomputed per draw and the offset components are applied
    multiplicatively to the metrics. Draws are evaluated in batches with
    one random stream per batch, so the result does not depend on
    ``workers``.

    :raises DomainError: ``draws`` or ``batch`` is less than 1, or the map is empty.

    """
    if draws < 1 or batch < 1:
        raise DomainError("draws and batch must be 1 or higher")

    table = _components(budget)
    Bx = np.asarray(fmap.Bx, dtype=float)
    m = bx_metrics(Bx)
    sizes = [min(batch, draws - start) for start in range(0, draws, batch)]

    def run(b: int) -> np.ndarray:
        sequence = np.random.SeedSequence(seed, spawn_key=(b,))
        rng = np.random.Generator(np.random.Philox(sequence))
        return _oracle_batch(Bx, table, rng, sizes[b], correlated_temperature)

    samples = np.concatenate(parallel_map(run, range(len(sizes)), workers=workers))

    def spread(column: np.ndarray) -> float:
        return float(np.std(column, ddof=1)) if len(column) > 1 else 0.0

    intervals = {
        name: tuple(float(q) for q in np.quantile(samples[:, k], [0.025, 0.975]))
        for k, name in ((1, "DIS1"), (2, "DIS2"))
    }
    variance = _point_variance(Bx, table, correlated_temperature=correlated_temperature)
    result = BudgetResult(
        "mc_oracle",
        np.sqrt(variance),
        m.mean_Bx,
        m.DIS1,
        m.DIS2,
        spread(samples[:, 1]),
        spread(samples[:, 2]),
        spread(samples[:, 0]) / abs(m.mean_Bx),
        intervals=intervals,  # type: ignore[arg-type]
        draws=draws,
        seed=seed,
    )
    log.info(
        f"oracle budget over {draws} draws: U(DIS1) {result.U_DIS1:.0f} ppm, "
        f"U(DIS2) {result.U_DIS2:.0f} ppm"
    )
    return result


def write_budget_result(
    result: BudgetResult,
    path: str | os.PathLike[str],
    budget: Iterable[BudgetComponent] = (),
) -> None:
    body = result.to_dict()
    body["components"] = [c.to_dict() for c in budget]
    write_json_document(path, BUDGET_RESULT_SCHEMA, body)
