"""
Generates the point sets a field is sampled on.

The DSV grid is a Cartesian lattice clipped to a sphere. Two lattice
conventions exist: ``offset`` places nodes at half-integer multiples of the
step (no node at the origin), ``centered`` at integer multiples. For a
200 mm sphere with a 10 mm step they contain 4224 and 4169 points.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from ..errors import ConfigurationError, DomainError

__all__ = (
    "GridShape",
    "Convention",
    "GridSpec",
    "SampleGrid",
    "dsv_grid",
    "zlines_grid",
    "make_grid",
)


class GridShape(enum.Enum):
    SPHERE = "sphere"
    """A lattice clipped to a sphere centered on the origin."""

    ZLINES = "zlines"
    """Lines parallel to z at a fixed radius, one per azimuth."""


class Convention(enum.Enum):
    """The placement of the lattice relative to the origin."""

    CENTERED = "centered"
    OFFSET = "offset"


@dataclass(frozen=True)
class GridSpec:
    """Describes a sample grid.

    For spheres, ``diameter`` is the sphere diameter. For z-lines it is
    twice the line radius, ``step`` is the spacing along z, ``length`` the
    total z-extent and ``lines`` the number of azimuths.

    """

    shape: GridShape = GridShape.SPHERE
    diameter: float = 0.2
    step: float = 0.01
    convention: Convention = Convention.OFFSET
    lines: int = 8
    length: float = 0.18

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise DomainError(f"grid step must be positive, not {self.step}")
        if not self.diameter > self.step:
            raise DomainError("grid diameter must exceed the step")
        if self.shape == GridShape.ZLINES and (self.lines < 1 or self.length < 0):
            raise DomainError("z-lines need at least one line and a non-negative length")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> GridSpec:
        try:
            return cls(
                shape=GridShape(data.get("shape", "sphere")),
                diameter=float(data.get("diameter", 0.2)),
                step=float(data.get("step", 0.01)),
                convention=Convention(data.get("convention", "offset")),
                lines=int(data.get("lines", 8)),
                length=float(data.get("length", 0.18)),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, DomainError):
                raise
            raise ConfigurationError(f"invalid grid spec: {e}") from e

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "shape": self.shape.value,
            "diameter": self.diameter,
            "step": self.step,
        }
        if self.shape == GridShape.SPHERE:
            data["convention"] = self.convention.value
        else:
            data["lines"] = self.lines
            data["length"] = self.length
        return data


@dataclass(frozen=True, eq=False)
class SampleGrid:
    """A set of sample points with the spec that generated it, if any."""

    points: np.ndarray
    """The points in metres, shape ``(N, 3)``."""
    spec: GridSpec | None = None

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SampleGrid):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def translated(self, offset: np.ndarray) -> SampleGrid:
        return SampleGrid(self.points + np.asarray(offset, dtype=float), self.spec)


def dsv_grid(
    diameter: float,
    step: float,
    convention: Convention | str = Convention.OFFSET,
) -> SampleGrid:
    """Generates the lattice points inside a sphere.

    Points are ordered lexicographically by x, then y, then z. The sphere
    boundary is inclusive.

    :param diameter: The sphere diameter in metres.
    :param step: The lattice step in metres.
    :param convention: Whether the lattice is centered on the origin or offset by half a step.
    :raises DomainError: The step is not positive or not smaller than the diameter.

    """
    spec = GridSpec(GridShape.SPHERE, diameter, step, Convention(convention))
    radius = diameter / 2 / step
    shift = 0.5 if spec.convention == Convention.OFFSET else 0.0

    n = math.ceil(radius) + 1
    k = np.arange(-n, n + 1, dtype=float) + shift
    k = k[np.abs(k) <= radius * (1 + 1e-12)]
    X, Y, Z = np.meshgrid(k, k, k, indexing="ij")
    r2 = X * X + Y * Y + Z * Z
    inside = r2 <= radius * radius * (1 + 1e-12)

    points = np.column_stack([X[inside], Y[inside], Z[inside]]) * step
    return SampleGrid(points, spec)


def zlines_grid(
    radius: float = 0.12,
    lines: int = 8,
    length: float = 0.18,
    step: float = 0.005,
) -> SampleGrid:
    """Generates lines parallel to z at a fixed radius.

    The default samples eight azimuths 45° apart at 120 mm radius from
    z = -90 mm to +90 mm in 5 mm steps. Points are ordered by line, then z.

    """
    spec = GridSpec(GridShape.ZLINES, 2 * radius, step, lines=lines, length=length)
    count = int(round(length / step)) + 1
    z = -length / 2 + step * np.arange(count)
    rows = []
    for n in range(lines):
        alpha = 2 * math.pi * n / lines
        xy = np.array([radius * math.cos(alpha), radius * math.sin(alpha)])
        rows.append(np.column_stack([np.full(count, xy[0]), np.full(count, xy[1]), z]))
    return SampleGrid(np.concatenate(rows), spec)


def make_grid(spec: GridSpec) -> SampleGrid:
    """Generates the grid described by a spec."""
    if spec.shape == GridShape.SPHERE:
        return dsv_grid(spec.diameter, spec.step, spec.convention)
    return zlines_grid(spec.diameter / 2, spec.lines, spec.length, spec.step)
