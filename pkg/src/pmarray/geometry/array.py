"""
Defines the magnet array, a validated collection of bar magnets sharing
a set of materials and an operating temperature.
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DomainError, GeometryError, MaterialReferenceError
from .magnet import BarMagnet
from .material import Material, MaterialState, material_at_temperature

__all__ = (
    "OVERLAP_TOLERANCE",
    "ArrayModel",
    "find_overlap",
)

log = logging.getLogger(__name__)

OVERLAP_TOLERANCE = 1e-9
"""The depth in metres two magnets must interpenetrate to count as overlapping."""


@dataclass(frozen=True, eq=False)
class ArrayModel:
    """An immutable array of bar magnets.

    Construction validates that magnet indices are unique, every material
    resolves, the temperature is within the material sanity bound and no
    two magnets overlap.

    :raises DomainError: Duplicate indices or an out-of-range temperature.
    :raises MaterialReferenceError: A magnet refers to an unknown material.
    :raises GeometryError: Two magnets overlap.

    """

    magnets: tuple[BarMagnet, ...]
    materials: Mapping[str, Material]
    temperature: float = 18.0
    """The operating temperature in °C."""
    ring_z_offsets: Mapping[int, float] = field(default_factory=dict)
    """The cumulative z-offsets in metres applied to each ring so far."""

    def __post_init__(self) -> None:
        object.__setattr__(self, "magnets", tuple(self.magnets))
        object.__setattr__(self, "materials", dict(self.materials))
        object.__setattr__(self, "ring_z_offsets", dict(self.ring_z_offsets))

        indices = [m.index for m in self.magnets]
        if len(set(indices)) != len(indices):
            raise DomainError("magnet indices must be unique")

        for m in self.magnets:
            if m.material_id not in self.materials:
                raise MaterialReferenceError(m.material_id)

        # Validates the temperature bound for every material in use
        self.material_states()

        pair = find_overlap(self.magnets)
        if pair is not None:
            a, b = (self.magnets[i].index for i in pair)
            raise GeometryError(f"magnets {a} and {b} overlap", pair=(a, b))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ArrayModel):
            return NotImplemented
        return (
            self.magnets == other.magnets
            and self.materials == other.materials
            and self.temperature == other.temperature
            and self.ring_z_offsets == other.ring_z_offsets
        )

    def __len__(self) -> int:
        return len(self.magnets)

    @functools.cached_property
    def centers(self) -> np.ndarray:
        """The barycenters as an array of shape ``(P, 3)``."""
        return np.array([m.center for m in self.magnets], dtype=float).reshape(-1, 3)

    @functools.cached_property
    def frames(self) -> np.ndarray:
        """The rotation matrices as an array of shape ``(P, 3, 3)``."""
        return np.array([m.frame for m in self.magnets], dtype=float).reshape(-1, 3, 3)

    @property
    def axes(self) -> np.ndarray:
        """The magnetization directions as an array of shape ``(P, 3)``."""
        return self.frames[:, :, 1]

    @functools.cached_property
    def half_dims(self) -> np.ndarray:
        return np.array([m.half_dims for m in self.magnets], dtype=float).reshape(-1, 3)

    @functools.cached_property
    def volumes(self) -> np.ndarray:
        return 8 * np.prod(self.half_dims, axis=1)

    @property
    def rings(self) -> np.ndarray:
        return np.array([m.ring for m in self.magnets], dtype=int)

    @property
    def layers(self) -> np.ndarray:
        return np.array([m.layer for m in self.magnets], dtype=int)

    @property
    def material_ids(self) -> list[str]:
        return [m.material_id for m in self.magnets]

    def material_states(self) -> dict[str, MaterialState]:
        """Evaluates every material at the array temperature.

        :raises DomainError: The temperature is outside the sanity bound.

        """
        return {
            mid: material_at_temperature(mat, self.temperature)
            for mid, mat in self.materials.items()
        }

    def remanences(self) -> np.ndarray:
        """Returns each magnet's remanence J_r at the array temperature."""
        states = self.material_states()
        return np.array([states[m.material_id].J_r for m in self.magnets], dtype=float)

    def extents(self) -> tuple[np.ndarray, np.ndarray]:
        """Returns the minimum and maximum coordinates over all magnet vertices."""
        if not self.magnets:
            raise DomainError("array has no magnets")
        vertices = np.concatenate([m.vertices() for m in self.magnets])
        return vertices.min(axis=0), vertices.max(axis=0)

    def at_temperature(self, T: float) -> ArrayModel:
        """Returns the same array operating at another temperature."""
        return replace(self, temperature=float(T))

    def with_magnets(
        self,
        magnets: Iterable[BarMagnet],
        ring_z_offsets: Mapping[int, float] | None = None,
    ) -> ArrayModel:
        """Returns a revalidated array with the magnets replaced."""
        return replace(
            self,
            magnets=tuple(magnets),
            ring_z_offsets=self.ring_z_offsets if ring_z_offsets is None else ring_z_offsets,
        )

    def with_materials(self, materials: Mapping[str, Material]) -> ArrayModel:
        """Returns the array with its material table replaced."""
        return replace(self, materials=materials)

    def with_uniform_material(self, material_id: str) -> ArrayModel:
        """Returns the array with every magnet made of the same material.

        :raises MaterialReferenceError: The material is not in the array's table.

        """
        if material_id not in self.materials:
            raise MaterialReferenceError(material_id)
        magnets = (replace(m, material_id=material_id) for m in self.magnets)
        return self.with_magnets(magnets)


def find_overlap(
    magnets: Sequence[BarMagnet],
    tolerance: float = OVERLAP_TOLERANCE,
) -> tuple[int, int] | None:
    """Finds the first pair of overlapping magnets.

    Candidate pairs come from their bounding spheres. Each candidate pair
    is tested for a separating axis among the three face normals of each
    magnet and the nine cross products of their edges. A pair overlaps
    when no axis separates it by more than ``-tolerance``, so magnets
    sharing a face or an edge are accepted.

    :returns: The positions of the overlapping magnets in the sequence, or ``None``.

    """
    if len(magnets) < 2:
        return None

    centers = np.array([m.center for m in magnets], dtype=float)
    radius = 2 * max(m.bounding_radius for m in magnets)
    pairs = cKDTree(centers).query_pairs(radius, output_type="ndarray")
    if len(pairs) == 0:
        return None
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]

    # Rows are the local axes in global coordinates
    axes = np.array([m.frame for m in magnets]).transpose(0, 2, 1)
    half = np.array([m.half_dims for m in magnets])

    a, b = pairs[:, 0], pairs[:, 1]
    A, B = axes[a], axes[b]
    edges = np.cross(A[:, :, None, :], B[:, None, :, :]).reshape(-1, 9, 3)
    L = np.concatenate([A, B, edges], axis=1)

    norm = np.linalg.norm(L, axis=-1)
    # Parallel edges give no axis of their own
    valid = norm > 1e-9
    L = L / np.where(valid, norm, 1.0)[..., None]

    extent_a = np.einsum("kj,kjn->kn", half[a], np.abs(np.einsum("kjd,knd->kjn", A, L)))
    extent_b = np.einsum("kj,kjn->kn", half[b], np.abs(np.einsum("kjd,knd->kjn", B, L)))
    distance = np.abs(np.einsum("kd,knd->kn", centers[b] - centers[a], L))

    separated = valid & (distance >= extent_a + extent_b - tolerance)
    hits = ~separated.any(axis=1)
    if not hits.any():
        return None

    i, j = pairs[np.argmax(hits)]
    log.debug(f"overlap detected between positions {i} and {j}")
    return int(i), int(j)
