"""
Deterministic deviations from a reference array: ring z-shifts, per-magnet
torque and torque-signed rotations about the bore axis.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import DomainError, InvalidStateError
from .field import bar_field_global
from .geometry import ArrayModel
from .sampling import Metrics, SampleGrid, metrics
from .solver import (
    Characteristics,
    FixedPointConfig,
    SolverMode,
    WorkingPointSolution,
    simulate_map,
    solve,
)
from .utils import MU0, write_table

__all__ = (
    "MAX_ROTATION_DEG",
    "MAX_RING_SHIFT",
    "TorqueReport",
    "torque_map",
    "apply_rotations",
    "apply_ring_shifts",
    "displace",
    "rotation_sweep",
    "write_torque_report",
)

log = logging.getLogger(__name__)

MAX_ROTATION_DEG = 5.0
"""The largest rotation accepted by :py:func:`apply_rotations`, in degrees."""
MAX_RING_SHIFT = 0.005
"""The largest ring offset accepted by :py:func:`apply_ring_shifts`, in metres."""


@dataclass(frozen=True, eq=False)
class TorqueReport:
    """The bore-axis torque on every magnet from the other magnets in its ring."""

    index: np.ndarray
    ring: np.ndarray
    layer: np.ndarray
    torque_z: np.ndarray
    """The z-component of the torque in N·m."""
    sign: np.ndarray
    """The sign of :py:attr:`torque_z`: +1, -1 or 0."""
    grouping: str = "same_ring"

    def __len__(self) -> int:
        return len(self.index)

    def sign_agreement(self, other: TorqueReport) -> float:
        """Returns the fraction of magnets whose torque sign matches another report."""
        if not np.array_equal(self.index, other.index):
            raise DomainError("torque reports cover different magnets")
        if len(self) == 0:
            return 1.0
        return float(np.mean(self.sign == other.sign))


def torque_map(
    array: ArrayModel,
    solution: WorkingPointSolution | None,
    *,
    zero_tolerance: float = 0.0,
) -> TorqueReport:
    """Computes the dipole torque ``m × B`` on each magnet.

    The moment is ``m = J_v·V·v̂/μ0`` and ``B`` is the closed-form field of
    the other magnets in the same ring at the magnet's barycenter; other
    rings are ignored.

    :param array: The array.
    :param solution: The solved working points of the array.
    :param zero_tolerance:
        Torques with ``|τ_z|`` at most this value (N·m) are given sign 0.
    :raises InvalidStateError: No solution was given.
    :raises DomainError: The solution does not match the array.

    """
    if solution is None:
        raise InvalidStateError("solved working points")
    if len(solution.J_v) != len(array):
        raise DomainError("solution does not match the array")

    P = len(array)
    rings = array.rings
    B = np.zeros((P, 3))
    for ring in np.unique(rings):
        members = np.flatnonzero(rings == ring)
        for j in members:
            others = members[members != j]
            if len(others) == 0 or solution.J_v[j] == 0:
                continue
            H = bar_field_global(array.magnets[j], solution.J_v[j], array.centers[others])
            B[others] += MU0 * H

    moments = (solution.J_v * array.volumes / MU0)[:, None] * array.axes
    torque = np.cross(moments, B)
    tz = torque[:, 2]
    sign = np.where(np.abs(tz) <= zero_tolerance, 0, np.sign(tz)).astype(int)

    log.info(
        f"torque map: {int((sign > 0).sum())} positive, "
        f"{int((sign < 0).sum())} negative, {int((sign == 0).sum())} zero"
    )
    return TorqueReport(
        np.array([m.index for m in array.magnets], dtype=int),
        rings,
        array.layers,
        tz,
        sign,
    )


def apply_rotations(
    array: ArrayModel,
    report: TorqueReport,
    angle: float | Sequence[float] | np.ndarray,
) -> ArrayModel:
    """Rotates each magnet about the z-axis through its own barycenter.

    Magnet ``i`` turns by ``sign_i × angle_i`` degrees, pre-multiplied onto
    its frame. Magnets with torque sign 0 are left unrotated.

    :param array: The array.
    :param report: The torque report providing the rotation signs.
    :param angle: One angle in degrees for every magnet, or one per magnet.
    :raises DomainError:
        An angle is not below :py:data:`MAX_ROTATION_DEG` in magnitude or
        the report does not match the array.
    :raises GeometryError: The rotation makes two magnets overlap.

    """
    indices = np.array([m.index for m in array.magnets], dtype=int)
    if not np.array_equal(indices, report.index):
        raise DomainError("torque report does not match the array")

    angles = np.broadcast_to(np.asarray(angle, dtype=float), (len(array),))
    if np.any(np.abs(angles) >= MAX_ROTATION_DEG):
        raise DomainError(f"rotation angles must be below {MAX_ROTATION_DEG}°")

    signed = np.radians(report.sign * angles)
    if not signed.any():
        return array

    magnets = []
    for m, theta in zip(array.magnets, signed):
        if theta == 0:
            magnets.append(m)
        else:
            magnets.append(m.rotated(Rotation.from_rotvec([0.0, 0.0, theta])))
    return array.with_magnets(magnets)


def apply_ring_shifts(array: ArrayModel, offsets: Mapping[int, float]) -> ArrayModel:
    """Translates every magnet of a ring along z by that ring's offset.

    The offsets are accumulated into :py:attr:`ArrayModel.ring_z_offsets`.

    :raises DomainError:
        An offset is not below :py:data:`MAX_RING_SHIFT` in magnitude, or
        refers to a ring with no magnets.
    :raises GeometryError: The shift makes two magnets overlap.

    """
    present = set(int(r) for r in array.rings)
    for ring, dz in offsets.items():
        if abs(dz) >= MAX_RING_SHIFT:
            raise DomainError(f"ring {ring} offset {dz} m exceeds {MAX_RING_SHIFT} m")
        if ring not in present:
            raise DomainError(f"ring {ring} has no magnets")

    if not any(offsets.values()):
        return array

    magnets = [
        m.translated((0.0, 0.0, offsets[m.ring])) if offsets.get(m.ring) else m
        for m in array.magnets
    ]
    cumulative = dict(array.ring_z_offsets)
    for ring, dz in offsets.items():
        cumulative[ring] = cumulative.get(ring, 0.0) + dz

    log.info(f"shifted {len([d for d in offsets.values() if d])} rings along z")
    return array.with_magnets(magnets, ring_z_offsets=cumulative)


def displace(
    array: ArrayModel,
    du: Sequence[float] | np.ndarray,
    dw: Sequence[float] | np.ndarray,
) -> ArrayModel:
    """Moves each magnet within its pocket along its local u and w axes.

    :param du: The displacement of each magnet along its local u axis in metres.
    :param dw: The displacement of each magnet along its local w axis in metres.
    :raises GeometryError: Two magnets overlap after the move.

    """
    du = np.asarray(du, dtype=float)
    dw = np.asarray(dw, dtype=float)
    offsets = du[:, None] * array.frames[:, :, 0] + dw[:, None] * array.frames[:, :, 2]
    magnets = [
        m.translated(d) if d.any() else m for m, d in zip(array.magnets, offsets)
    ]
    return array.with_magnets(magnets)


def rotation_sweep(
    array: ArrayModel,
    report: TorqueReport,
    angles: Iterable[float],
    grid: SampleGrid,
    *,
    mode: SolverMode | str = SolverMode.NONLINEAR,
    characteristics: Characteristics | None = None,
    config: FixedPointConfig | None = None,
    workers: int | None = None,
) -> list[tuple[float, Metrics]]:
    """Re-solves the array rotated by each angle and returns the metrics."""
    results = []
    for angle in angles:
        rotated = apply_rotations(array, report, angle)
        solution = solve(
            rotated,
            mode,
            characteristics=characteristics,
            config=config,
            workers=workers,
        )
        m = metrics(simulate_map(rotated, solution, grid, workers=workers))
        log.info(f"rotation ±{angle}°: DIS1 {m.DIS1:.0f} ppm, DIS2 {m.DIS2:.0f} ppm")
        results.append((float(angle), m))
    return results


def write_torque_report(report: TorqueReport, path: str | os.PathLike[str]) -> None:
    rows = (
        (int(i), int(r), int(l), float(t), int(s))
        for i, r, l, t, s in zip(
            report.index, report.ring, report.layer, report.torque_z, report.sign
        )
    )
    write_table(
        path,
        ("index", "ring", "layer", "torque_z[N*m]", "sign"),
        rows,
        metadata={"schema": "pmarray.torque", "version": 1, "grouping": report.grouping},
    )
