"""
Generates discretised Halbach dipole arrays for demonstrations and tests.

Each ring is a stack of concentric layers of magnets placed evenly around
the bore. A magnet at azimuth θ is magnetized along ``(cos kθ, sin kθ, 0)``
which, for ``k = 2``, produces a transverse field along +x in the bore.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..errors import DomainError
from .array import ArrayModel
from .magnet import BarMagnet
from .material import Material

__all__ = (
    "HalbachLayer",
    "HalbachDesign",
    "halbach_array",
)

log = logging.getLogger(__name__)

CUBE_HALF_DIMS = (0.006, 0.006, 0.006)
LONG_HALF_DIMS = (0.006, 0.025, 0.006)


@dataclass(frozen=True)
class HalbachLayer:
    """A circle of identical magnets within a ring."""

    radius: float
    """The radius of the magnet barycenters in metres."""
    count: int
    """The number of magnets in the layer."""
    half_dims: tuple[float, float, float] = CUBE_HALF_DIMS
    material_id: str = "N52-cube"

    def __post_init__(self) -> None:
        if self.radius <= 0 or self.count < 1:
            raise DomainError("layers need a positive radius and at least one magnet")


@dataclass(frozen=True)
class HalbachDesign:
    """The parameters of a multi-ring Halbach dipole.

    The defaults describe a compact 50 mT-class design with nine rings of
    12 mm cubes and two end rings of 12x12x50 mm bars magnetized along
    their long edge.

    """

    ring_z: tuple[float, ...] = tuple(float(z) for z in np.linspace(-0.18, 0.18, 9))
    layers: tuple[HalbachLayer, ...] = (
        HalbachLayer(0.175, 40),
        HalbachLayer(0.200, 46),
    )
    end_ring_z: tuple[float, ...] = (-0.225, 0.225)
    end_layers: tuple[HalbachLayer, ...] = (
        HalbachLayer(0.22, 16, LONG_HALF_DIMS, "N52-long"),
    )
    k: int = 2
    """The Halbach mode; 2 gives a dipole."""
    stagger: bool = True
    """Whether to offset every other layer by half an angular step."""

    @classmethod
    def from_dict(cls, data: Mapping) -> HalbachDesign:
        def layers(records: Sequence[Mapping]) -> tuple[HalbachLayer, ...]:
            return tuple(
                HalbachLayer(
                    float(r["radius"]),
                    int(r["count"]),
                    tuple(float(v) for v in r.get("half_dims", CUBE_HALF_DIMS)),  # type: ignore[arg-type]
                    str(r.get("material", "N52-cube")),
                )
                for r in records
            )

        default = cls()
        return cls(
            ring_z=tuple(float(z) for z in data.get("ring_z", default.ring_z)),
            layers=layers(data["layers"]) if "layers" in data else default.layers,
            end_ring_z=tuple(float(z) for z in data.get("end_ring_z", default.end_ring_z)),
            end_layers=(
                layers(data["end_layers"]) if "end_layers" in data else default.end_layers
            ),
            k=int(data.get("k", default.k)),
            stagger=bool(data.get("stagger", default.stagger)),
        )


def _ring_magnets(
    design: HalbachDesign,
    layers: Sequence[HalbachLayer],
    z: float,
    ring: int,
    start: int,
) -> list[BarMagnet]:
    magnets = []
    for layer_index, layer in enumerate(layers):
        offset = math.pi / layer.count if design.stagger and layer_index % 2 else 0.0
        for n in range(layer.count):
            theta = 2 * math.pi * n / layer.count + offset
            v = np.array([math.cos(design.k * theta), math.sin(design.k * theta), 0.0])
            w = np.array([0.0, 0.0, 1.0])
            u = np.cross(v, w)
            center = (layer.radius * math.cos(theta), layer.radius * math.sin(theta), z)
            magnets.append(
                BarMagnet.from_frame(
                    start + len(magnets),
                    center,
                    np.column_stack([u, v, w]),
                    layer.half_dims,
                    layer.material_id,
                    ring=ring,
                    layer=layer_index,
                )
            )
    return magnets


def halbach_array(
    design: HalbachDesign | None = None,
    materials: Mapping[str, Material] | None = None,
    temperature: float = 18.0,
) -> ArrayModel:
    """Builds a Halbach array.

    Rings are numbered along +z starting from 0, followed by the end rings.

    :param design: The array parameters. Uses :py:class:`HalbachDesign` defaults if ``None``.
    :param materials:
        The material table. Uses the shipped reference materials if ``None``.
    :param temperature: The operating temperature in °C.
    :raises GeometryError: The design places overlapping magnets.

    """
    if design is None:
        design = HalbachDesign()
    if materials is None:
        from .io import reference_materials

        materials = reference_materials()

    magnets: list[BarMagnet] = []
    ring = 0
    for z in design.ring_z:
        magnets.extend(_ring_magnets(design, design.layers, z, ring, len(magnets)))
        ring += 1
    for z in design.end_ring_z:
        magnets.extend(_ring_magnets(design, design.end_layers, z, ring, len(magnets)))
        ring += 1

    log.info(f"generated Halbach array with {len(magnets)} magnets in {ring} rings")
    return ArrayModel(tuple(magnets), materials, temperature)
