"""
Closed-form field of a uniformly magnetized bar and its superposition.

The bar is replaced by two sheets of magnetic surface charge ``±M`` on
its faces normal to the magnetization axis ``v``, where ``M = J_v/μ0``.
Integrating the Coulomb kernel over each rectangular sheet gives, with
``ξ``, ``η``, ``ζ`` the offsets from a face corner along ``u``, ``v``,
``w`` and ``R`` their norm::

    H_u = M/4π · Σ ±(-ln(ζ + R))
    H_v = M/4π · Σ ±atan(ξζ / (ηR))
    H_w = M/4π · Σ ±(-ln(ξ + R))

where the sums run over the four corners of both faces. This is the
``M/4π`` scaling: it agrees with the dipole far field and with numerical
integration of the surface charge (see :py:mod:`pmarray.field.oracle`).
"""
from __future__ import annotations

import logging
from typing import Literal, NamedTuple, Sequence, overload

import numpy as np

from ..errors import DomainError
from ..geometry import ArrayModel, BarMagnet
from ..utils import MU0, parallel_map

__all__ = (
    "GUARD_DISTANCE",
    "FieldSample",
    "bar_field_local",
    "bar_field_global",
    "field_at",
    "superpose",
)

log = logging.getLogger(__name__)

GUARD_DISTANCE = 1e-9
"""Points within this distance in metres of a face plane are nudged outward."""

_SIGNS = np.array([1.0, -1.0])


class FieldSample(NamedTuple):
    """The field at one point outside every magnet."""

    point: np.ndarray
    """The point in metres, global frame."""
    H: np.ndarray
    """The magnetic field in A/m."""
    B: np.ndarray
    """The flux density in tesla, ``μ0·H``."""


def _log_sum(t: np.ndarray, R: np.ndarray, rest_sq: np.ndarray) -> np.ndarray:
    # ln(t + R) without cancellation when t is large and negative
    out = np.empty_like(t)
    positive = t >= 0
    out[positive] = np.log(t[positive] + R[positive])
    negative = ~positive
    out[negative] = np.log(rest_sq[negative]) - np.log(R[negative] - t[negative])
    return out


def _guard(points: np.ndarray, half: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    distance = np.abs(np.abs(points) - half)
    near = distance < GUARD_DISTANCE
    if not near.any():
        return points, np.zeros(len(points), dtype=bool)

    sign = np.where(points < 0, -1.0, 1.0)
    nudged = np.where(near, sign * (half + GUARD_DISTANCE), points)
    mask = near.any(axis=1)
    log.debug(f"nudged {int(mask.sum())} points off face planes")
    return nudged, mask


@overload
def bar_field_local(
    half_dims: Sequence[float] | np.ndarray,
    J_v: float,
    points: np.ndarray,
    *,
    with_flags: Literal[False] = False,
) -> np.ndarray:
    ...


@overload
def bar_field_local(
    half_dims: Sequence[float] | np.ndarray,
    J_v: float,
    points: np.ndarray,
    *,
    with_flags: Literal[True],
) -> tuple[np.ndarray, np.ndarray]:
    ...


def bar_field_local(
    half_dims: Sequence[float] | np.ndarray,
    J_v: float,
    points: np.ndarray,
    *,
    with_flags: bool = False,
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Computes the field of a bar in its own local frame.

    :param half_dims: The half-dimensions ``(L_u, L_v, L_w)`` in metres.
    :param J_v: The polarization along the local v axis in tesla.
    :param points: Local points of shape ``(3,)`` or ``(N, 3)`` in metres.
    :param with_flags:
        If ``True``, also return a mask of points that were within
        :py:data:`GUARD_DISTANCE` of a face plane and evaluated at a
        nudged position.
    :returns: The field in A/m with the same shape as ``points``.
    :raises DomainError: A point lies inside or on the surface of the bar.

    """
    half = np.asarray(half_dims, dtype=float)
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 3)

    inside = np.all(np.abs(pts) <= half + GUARD_DISTANCE, axis=1)
    if inside.any():
        first = int(np.argmax(inside))
        raise DomainError(f"point {pts[first].tolist()} lies inside the bar")

    pts, nudged = _guard(pts, half)
    a, b, c = half

    # Corner offsets, indexed [face, u-corner, w-corner, point]
    xi = (pts[:, 0] + _SIGNS[:, None] * a)[None, :, None, :]
    eta = (pts[:, 1] - _SIGNS[:, None] * b)[:, None, None, :]
    zeta = (pts[:, 2] + _SIGNS[:, None] * c)[None, None, :, :]
    xi, eta, zeta = np.broadcast_arrays(xi, eta, zeta)
    sign = (
        _SIGNS[:, None, None, None] * _SIGNS[None, :, None, None] * _SIGNS[None, None, :, None]
    )

    xi2, eta2, zeta2 = xi * xi, eta * eta, zeta * zeta
    R = np.sqrt(xi2 + eta2 + zeta2)

    f_u = -_log_sum(zeta, R, xi2 + eta2)
    f_v = np.arctan(xi * zeta / (eta * R))
    f_w = -_log_sum(xi, R, zeta2 + eta2)

    scale = J_v / (4 * np.pi * MU0)
    H = scale * np.stack(
        [
            (sign * f_u).sum(axis=(0, 1, 2)),
            (sign * f_v).sum(axis=(0, 1, 2)),
            (sign * f_w).sum(axis=(0, 1, 2)),
        ],
        axis=1,
    )

    if single:
        H = H[0]
    if with_flags:
        return H, nudged
    return H


def bar_field_global(magnet: BarMagnet, J_v: float, points: np.ndarray) -> np.ndarray:
    """Computes the field of a magnet at global points.

    :returns: The field in A/m, global frame, with the same shape as ``points``.
    :raises DomainError: A point lies inside the magnet.

    """
    local = magnet.to_local(points)
    return bar_field_local(magnet.half_dims, J_v, local) @ magnet.frame.T


def field_at(
    array: ArrayModel,
    J_v: Sequence[float] | np.ndarray,
    points: np.ndarray,
    *,
    magnets: Sequence[int] | None = None,
    workers: int | None = None,
    chunk_size: int = 4096,
) -> np.ndarray:
    """Sums the field of every magnet at the given points.

    Contributions are accumulated in magnet order within each chunk of
    points, so the result does not depend on the number of workers.

    :param array: The magnets.
    :param J_v: The polarization of each magnet in tesla.
    :param points: Global points of shape ``(N, 3)``.
    :param magnets: The positions of the magnets to include. Defaults to all.
    :param workers: The number of threads evaluating chunks of points.
    :param chunk_size: The maximum number of points per chunk.
    :returns: The field in A/m, shape ``(N, 3)``.
    :raises DomainError: A point lies inside a magnet.

    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    J = np.asarray(J_v, dtype=float)
    if J.shape != (len(array),):
        raise DomainError(f"expected {len(array)} polarizations, got shape {J.shape}")
    selected = range(len(array)) if magnets is None else magnets

    def evaluate(chunk: np.ndarray) -> np.ndarray:
        H = np.zeros_like(chunk)
        for i in selected:
            if J[i] != 0:
                H += bar_field_global(array.magnets[i], J[i], chunk)
        return H

    chunks = [pts[i : i + chunk_size] for i in range(0, len(pts), chunk_size)]
    if not chunks:
        return np.zeros((0, 3))
    return np.concatenate(parallel_map(evaluate, chunks, workers=workers))


def superpose(
    array: ArrayModel,
    J_v: Sequence[float] | np.ndarray,
    points: np.ndarray,
    *,
    workers: int | None = None,
) -> list[FieldSample]:
    """Computes the total field of an array at exterior points.

    :returns: One :py:class:`FieldSample` per point with ``B = μ0·H``.
    :raises DomainError: A point lies inside a magnet.

    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    H = field_at(array, J_v, pts, workers=workers)
    return [FieldSample(p, h, MU0 * h) for p, h in zip(pts, H)]
