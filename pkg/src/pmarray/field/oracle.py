"""
Numerical surface-charge integration, used to validate the closed-form kernel.

The field of a bar is integrated directly from its two charged faces with
tensor-product Gauss-Legendre rules on adaptively subdivided panels.
"""
from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from ..errors import DomainError, NumericalError
from ..geometry import ArrayModel, BarMagnet
from ..utils import MU0

__all__ = (
    "oracle_surface_charge",
    "oracle_field_at",
)

log = logging.getLogger(__name__)


def _rule(
    point: np.ndarray,
    panels: np.ndarray,
    nodes: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    """Integrates ``σ·(r - r')/|r - r'|³`` over each panel.

    Panels are rows of ``(u0, u1, w0, w1, v, σ)``.

    """
    u0, u1, w0, w1, v, sigma = panels.T
    hu, hw = (u1 - u0) / 2, (w1 - w0) / 2
    U = (u0 + u1)[:, None] / 2 + hu[:, None] * nodes
    W = (w0 + w1)[:, None] / 2 + hw[:, None] * nodes

    du = (point[0] - U)[:, :, None]
    dv = (point[1] - v)[:, None, None]
    dw = (point[2] - W)[:, None, :]
    r3 = (du * du + dv * dv + dw * dw) ** 1.5
    wt = (weights[:, None] * weights[None, :])[None] * (hu * hw)[:, None, None] / r3

    return (sigma / (4 * np.pi))[:, None] * np.stack(
        [
            (wt * du).sum(axis=(1, 2)),
            (wt * dv).sum(axis=(1, 2)),
            (wt * dw).sum(axis=(1, 2)),
        ],
        axis=1,
    )


def _split(panels: np.ndarray) -> np.ndarray:
    u0, u1, w0, w1, v, sigma = panels.T
    um, wm = (u0 + u1) / 2, (w0 + w1) / 2
    children = [
        (u0, um, w0, wm),
        (um, u1, w0, wm),
        (u0, um, wm, w1),
        (um, u1, wm, w1),
    ]
    # Children of one panel stay adjacent so the summation order is fixed
    out = np.stack([np.stack([*c, v, sigma], axis=1) for c in children], axis=1)
    return out.reshape(-1, 6)


def _integrate_local(
    half_dims: Sequence[float],
    J_v: float,
    point: np.ndarray,
    *,
    rtol: float,
    order: int,
    max_panels: int,
) -> np.ndarray:
    a, b, c = (float(v) for v in half_dims)
    if np.all(np.abs(point) <= np.array([a, b, c])):
        raise DomainError(f"point {point.tolist()} lies inside the bar")
    if J_v == 0:
        return np.zeros(3)

    M = J_v / MU0
    nodes, weights = np.polynomial.legendre.leggauss(order)
    faces = np.array([[-a, a, -c, c, b, M], [-a, a, -c, c, -b, -M]])
    face_area = 4 * a * c

    # A fixed 4x4 split of each face sets the scale of the tolerance
    start = _split(_split(faces))
    estimate = _rule(point, start, nodes, weights).sum(axis=0)
    scale = float(np.linalg.norm(estimate))
    if scale == 0:
        scale = abs(M) * face_area / (4 * np.pi * float(np.dot(point, point)))

    total = np.zeros(3)
    error = 0.0
    pending = start
    processed = 0
    while len(pending):
        processed += len(pending)
        if processed > max_panels:
            achieved = (error + _pending_error(point, pending, nodes, weights)) / scale
            raise NumericalError(
                f"surface-charge quadrature did not reach {rtol:g} relative "
                f"within {max_panels} panels",
                achieved=achieved,
            )

        coarse = _rule(point, pending, nodes, weights)
        children = _split(pending)
        fine = _rule(point, children, nodes, weights).reshape(-1, 4, 3).sum(axis=1)

        diff = np.linalg.norm(fine - coarse, axis=1)
        area = (pending[:, 1] - pending[:, 0]) * (pending[:, 3] - pending[:, 2])
        accept = diff <= rtol * scale * area / face_area

        total += fine[accept].sum(axis=0)
        error += float(diff[accept].sum())
        pending = children.reshape(-1, 4, 6)[~accept].reshape(-1, 6)

    log.debug(f"oracle used {processed} panels, estimated error {error / scale:.3g}")
    return total


def _pending_error(
    point: np.ndarray,
    pending: np.ndarray,
    nodes: np.ndarray,
    weights: np.ndarray,
) -> float:
    coarse = _rule(point, pending, nodes, weights)
    fine = _rule(point, _split(pending), nodes, weights).reshape(-1, 4, 3).sum(axis=1)
    return float(np.linalg.norm(fine - coarse, axis=1).sum())


def oracle_surface_charge(
    magnet: BarMagnet,
    J_v: float,
    point: Sequence[float] | np.ndarray,
    *,
    rtol: float = 1e-8,
    order: int = 8,
    max_panels: int = 200_000,
) -> np.ndarray:
    """Integrates the field of a magnet numerically at one global point.

    The magnetic surface charge ``σ = ±J_v/μ0`` on the two faces normal
    to the magnetization axis is integrated against the Coulomb kernel.
    Panels are split in four until the difference between a panel's rule
    and the sum of its children's rules is below its share of
    ``rtol·|H|``.

    :param magnet: The magnet.
    :param J_v: The polarization along the magnetization axis in tesla.
    :param point: The global point in metres.
    :param rtol: The requested relative accuracy.
    :param order: The number of Gauss-Legendre nodes per panel axis.
    :param max_panels: The maximum number of panels to evaluate.
    :returns: The field in A/m, global frame.
    :raises DomainError: The point lies inside the magnet.
    :raises NumericalError:
        The requested accuracy was not reached within ``max_panels``.

    """
    local = magnet.to_local(np.asarray(point, dtype=float))
    H = _integrate_local(
        magnet.half_dims,
        J_v,
        local,
        rtol=rtol,
        order=order,
        max_panels=max_panels,
    )
    return magnet.frame @ H


def oracle_field_at(
    array: ArrayModel,
    J_v: Sequence[float] | np.ndarray,
    points: np.ndarray,
    *,
    magnets: Sequence[int] | None = None,
    rtol: float = 1e-8,
) -> np.ndarray:
    """Sums :py:func:`oracle_surface_charge` over magnets at several points.

    :returns: The field in A/m, shape ``(N, 3)``.

    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    selected = range(len(array)) if magnets is None else magnets
    H = np.zeros_like(pts)
    for k, p in enumerate(pts):
        for i in selected:
            H[k] += oracle_surface_charge(array.magnets[i], float(J_v[i]), p, rtol=rtol)
    return H
