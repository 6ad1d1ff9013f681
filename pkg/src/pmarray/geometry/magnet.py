"""
Defines the uniformly magnetized bar magnet and its demagnetizing factor.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from ..errors import DomainError, GeometryError

__all__ = (
    "FRAME_TOLERANCE",
    "BarMagnet",
    "demag_factor",
)

FRAME_TOLERANCE = 1e-12
"""The tolerance for a frame to be considered a proper rotation."""

_CORNERS = np.array(
    [[su, sv, sw] for su in (-1, 1) for sv in (-1, 1) for sw in (-1, 1)],
    dtype=float,
)


def demag_factor(half_dims: Sequence[float]) -> float:
    """Returns the demagnetizing factor of a bar magnetized along its v axis.

    The factor is ``L_u·L_w / (L_u·L_v + L_u·L_w + L_v·L_w)`` which lies
    strictly between 0 and 1, equals 1/3 for a cube and vanishes for a
    long rod magnetized along its length.

    :param half_dims: The half-dimensions ``(L_u, L_v, L_w)`` in metres.
    :raises DomainError: A dimension is not strictly positive.

    """
    lu, lv, lw = (float(v) for v in half_dims)
    if not (lu > 0 and lv > 0 and lw > 0):
        raise DomainError(f"half-dimensions must be positive, got {(lu, lv, lw)}")
    return lu * lw / (lu * lv + lu * lw + lv * lw)


@dataclass(frozen=True)
class BarMagnet:
    """A rectangular, uniformly magnetized bar magnet.

    The orientation is stored as a unit quaternion in scalar-last
    ``(x, y, z, w)`` order; :py:attr:`frame` exposes it as a rotation matrix
    whose columns are the local ``u``, ``v`` and ``w`` axes in global
    coordinates. The local ``v`` axis is the magnetization direction.

    :raises DomainError: A half-dimension is not strictly positive.
    :raises GeometryError: The quaternion is not of unit length.

    """

    index: int
    center: tuple[float, float, float]
    """The barycenter in metres, global frame."""
    quaternion: tuple[float, float, float, float]
    """The orientation as a unit quaternion ``(x, y, z, w)``."""
    half_dims: tuple[float, float, float]
    """The half-dimensions ``(L_u, L_v, L_w)`` in metres."""
    material_id: str
    ring: int = 0
    layer: int = 0

    def __post_init__(self) -> None:
        if len(self.center) != 3 or len(self.half_dims) != 3 or len(self.quaternion) != 4:
            raise DomainError(f"magnet {self.index}: malformed center, quaternion or half_dims")
        if not all(math.isfinite(v) for v in self.center + self.quaternion + self.half_dims):
            raise DomainError(f"magnet {self.index}: non-finite geometry")
        if not all(v > 0 for v in self.half_dims):
            raise DomainError(
                f"magnet {self.index}: half-dimensions must be positive, got {self.half_dims}"
            )
        norm = math.sqrt(sum(v * v for v in self.quaternion))
        if abs(norm - 1) > FRAME_TOLERANCE:
            raise GeometryError(
                f"magnet {self.index}: quaternion norm {norm!r} is not 1 "
                f"within {FRAME_TOLERANCE}"
            )

    @classmethod
    def from_frame(
        cls,
        index: int,
        center: Sequence[float],
        frame: np.ndarray,
        half_dims: Sequence[float],
        material_id: str,
        ring: int = 0,
        layer: int = 0,
    ) -> BarMagnet:
        """Creates a magnet from a rotation matrix.

        :param frame:
            A 3x3 matrix whose columns are the local axes in global coordinates.
        :raises GeometryError:
            The matrix is not orthonormal with determinant +1.

        """
        frame = np.asarray(frame, dtype=float)
        if frame.shape != (3, 3):
            raise GeometryError(f"magnet {index}: frame must be 3x3, not {frame.shape}")
        deviation = np.abs(frame.T @ frame - np.eye(3)).max()
        if deviation > FRAME_TOLERANCE or np.linalg.det(frame) < 0:
            raise GeometryError(f"magnet {index}: frame is not a proper rotation")

        quaternion = Rotation.from_matrix(frame).as_quat()
        return cls(
            index=index,
            center=_vec3(center),
            quaternion=_unit_quat(quaternion),
            half_dims=_vec3(half_dims),
            material_id=material_id,
            ring=ring,
            layer=layer,
        )

    @functools.cached_property
    def rotation(self) -> Rotation:
        return Rotation.from_quat(self.quaternion)

    @functools.cached_property
    def frame(self) -> np.ndarray:
        """The rotation matrix mapping local ``(u, v, w)`` to global axes."""
        return self.rotation.as_matrix()

    @property
    def axis(self) -> np.ndarray:
        """The magnetization direction (local ``v``) in global coordinates."""
        return self.frame[:, 1]

    @property
    def volume(self) -> float:
        lu, lv, lw = self.half_dims
        return 8 * lu * lv * lw

    @property
    def demag(self) -> float:
        """The demagnetizing factor of this magnet."""
        return demag_factor(self.half_dims)

    @property
    def bounding_radius(self) -> float:
        return math.sqrt(sum(v * v for v in self.half_dims))

    def vertices(self) -> np.ndarray:
        """Returns the eight corners of the bar in global coordinates."""
        local = _CORNERS * np.array(self.half_dims)
        return self.to_global(local)

    def to_local(self, points: np.ndarray) -> np.ndarray:
        """Transforms global points of shape ``(..., 3)`` into the local frame."""
        return (np.asarray(points, dtype=float) - np.array(self.center)) @ self.frame

    def to_global(self, points: np.ndarray) -> np.ndarray:
        """Transforms local points of shape ``(..., 3)`` into the global frame."""
        return np.asarray(points, dtype=float) @ self.frame.T + np.array(self.center)

    def contains(self, points: np.ndarray, tolerance: float = 0.0) -> np.ndarray:
        """Returns a mask of points lying strictly inside the bar shrunk by ``tolerance``."""
        local = np.abs(self.to_local(points))
        return np.all(local < np.array(self.half_dims) - tolerance, axis=-1)

    def rotated(self, rotation: Rotation) -> BarMagnet:
        """Returns the magnet rotated about its own barycenter.

        The rotation is applied in the global frame, i.e. pre-multiplied.

        """
        return replace(self, quaternion=_unit_quat((rotation * self.rotation).as_quat()))

    def translated(self, offset: Sequence[float]) -> BarMagnet:
        return replace(
            self,
            center=_vec3(np.array(self.center) + np.asarray(offset, dtype=float)),
        )


def _vec3(values: Sequence[float] | np.ndarray) -> tuple[float, float, float]:
    x, y, z = (float(v) for v in values)
    return x, y, z


def _unit_quat(values: Sequence[float] | np.ndarray) -> tuple[float, float, float, float]:
    q = np.asarray(values, dtype=float)
    q = q / np.linalg.norm(q)
    x, y, z, w = (float(v) for v in q)
    return x, y, z, w
