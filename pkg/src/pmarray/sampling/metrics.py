"""
Homogeneity metrics of a field map.

``DIS1`` is the peak-to-peak spread of B_x over its mean and ``DIS2`` the
population standard deviation over the mean, both in ppm. Values are
sorted before reduction so the result does not depend on point order.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DomainError, NumericalError
from .fieldmap import FieldMap

__all__ = (
    "PPM",
    "Metrics",
    "metrics",
    "bx_metrics",
    "l2_discrepancy",
    "max_gradient",
)

PPM = 1e6


@dataclass(frozen=True)
class Metrics:
    """Statistics of B_x over a map. Fields are in tesla, DIS values in ppm."""

    mean_Bx: float
    DIS1: float
    DIS2: float
    max_Bx: float
    min_Bx: float
    std_Bx: float
    points: int

    def to_dict(self) -> dict[str, float | int]:
        return asdict(self)


def bx_metrics(Bx: np.ndarray) -> Metrics:
    """Computes the metrics of a set of B_x values.

    The spread is normalized by ``|mean|`` so that both metrics are
    non-negative for fields pointing along -x.

    :raises DomainError: There are no values or their mean is zero.

    """
    values = np.sort(np.asarray(Bx, dtype=float).ravel())
    if len(values) == 0:
        raise DomainError("cannot compute metrics of an empty map")

    mean = float(values.mean())
    if mean == 0:
        raise DomainError("mean B_x is zero")

    high, low = float(values[-1]), float(values[0])
    std = float(np.sqrt(np.mean((values - mean) ** 2)))
    dis1 = (high - low) / abs(mean) * PPM
    dis2 = std / abs(mean) * PPM

    if dis2 > dis1 * (1 + 1e-12):
        raise NumericalError(f"DIS2 {dis2} ppm exceeds DIS1 {dis1} ppm")
    return Metrics(mean, dis1, dis2, high, low, std, len(values))


def metrics(fmap: FieldMap) -> Metrics:
    """Computes the homogeneity metrics of a field map.

    :raises DomainError: The map is empty or its mean B_x is zero.

    """
    return bx_metrics(fmap.Bx)


def l2_discrepancy(a: FieldMap, b: FieldMap) -> float:
    """Computes ``Σ(Bx_a - Bx_b)² / Σ Bx_b²``.

    Note this is the ratio of squared norms, not of norms.

    :raises DomainError: The maps are sampled on different points.

    """
    if len(a) != len(b) or not np.array_equal(a.points, b.points):
        raise DomainError("field maps are sampled on different grids")
    denominator = float(np.sum(b.Bx**2))
    if denominator == 0:
        raise DomainError("reference map has zero B_x everywhere")
    return float(np.sum((a.Bx - b.Bx) ** 2)) / denominator


def max_gradient(fmap: FieldMap, spacing: float | None = None) -> float:
    """Estimates the largest B_x gradient in T/m from neighbouring lattice points.

    :param spacing:
        The lattice step in metres. Defaults to the step of the map's grid spec.
    :raises DomainError: The spacing is unknown or no neighbours exist.

    """
    if spacing is None:
        if fmap.grid.spec is None:
            raise DomainError("grid spacing is unknown")
        spacing = fmap.grid.spec.step

    pairs = cKDTree(fmap.points).query_pairs(spacing * 1.001, output_type="ndarray")
    if len(pairs) == 0:
        raise DomainError("no neighbouring points within the grid spacing")
    distance = np.linalg.norm(fmap.points[pairs[:, 0]] - fmap.points[pairs[:, 1]], axis=1)
    return float(np.max(np.abs(fmap.Bx[pairs[:, 0]] - fmap.Bx[pairs[:, 1]]) / distance))
