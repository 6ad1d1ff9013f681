"""
Assembles the dense matrix of pairwise interaction coefficients.

The coefficient ``G[p, i]`` is μ0 times the field of magnet ``p`` with unit
polarization, evaluated at the barycenter of magnet ``i`` and projected on
the magnetization axis of ``i``. It is dimensionless.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import DomainError, GeometryError
from ..field import bar_field_local
from ..geometry import ArrayModel, demag_factor
from ..utils import MU0, parallel_map

__all__ = (
    "InteractionMatrix",
    "assemble",
    "update_matrix",
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    """The interaction coefficients and demagnetizing factors of an array.

    The arrays are never modified once assembled, so one matrix may be
    shared by any number of concurrent solves.

    """

    coeffs: np.ndarray
    """The ``(P, P)`` coefficients ``G[p, i]``; the diagonal is zero."""
    demag: np.ndarray
    """The demagnetizing factor of each magnet."""

    def __post_init__(self) -> None:
        self.coeffs.setflags(write=False)
        self.demag.setflags(write=False)

    @property
    def P(self) -> int:
        """The number of magnets."""
        return len(self.demag)

    def system(self) -> np.ndarray:
        """Returns ``A = -diag(ℵ) + Gᵀ`` mapping polarizations to ``μ0·H_v``."""
        A = self.coeffs.T.copy()
        A[np.diag_indices_from(A)] = -self.demag
        return A


def _source_row(array: ArrayModel, p: int, targets: np.ndarray) -> np.ndarray:
    """Computes ``G[p, targets]``."""
    magnet = array.magnets[p]
    others = targets[targets != p]
    local = magnet.to_local(array.centers[others])
    try:
        H_local = bar_field_local(magnet.half_dims, 1.0, local)
    except DomainError as e:
        inside = magnet.contains(array.centers[others])
        i = int(others[np.argmax(inside)]) if inside.any() else int(others[0])
        pair = (magnet.index, array.magnets[i].index)
        raise GeometryError(
            f"barycenter of magnet {pair[1]} lies inside magnet {pair[0]}",
            pair=pair,
        ) from e

    H = H_local @ magnet.frame.T
    row = np.zeros(len(targets))
    row[targets != p] = MU0 * np.einsum("kj,kj->k", H, array.axes[others])
    return row


def assemble(array: ArrayModel, *, workers: int | None = None) -> InteractionMatrix:
    """Assembles the interaction matrix of a validated array.

    :param array: The array.
    :param workers: The number of threads assembling rows.
    :raises GeometryError: A barycenter lies inside another magnet.

    """
    P = len(array)
    targets = np.arange(P)
    rows = parallel_map(lambda p: _source_row(array, p, targets), range(P), workers=workers)
    coeffs = np.array(rows, dtype=float).reshape(P, P)
    demag = np.array([demag_factor(m.half_dims) for m in array.magnets], dtype=float)
    log.info(f"assembled {P}x{P} interaction matrix")
    return InteractionMatrix(coeffs, demag)


def update_matrix(
    matrix: InteractionMatrix,
    array: ArrayModel,
    moved: Iterable[int],
    *,
    workers: int | None = None,
) -> InteractionMatrix:
    """Returns the matrix of an array where only some magnets moved.

    Only the rows and columns of the moved magnets are recomputed; the
    result agrees with :py:func:`assemble` on the new array to rounding.

    :param matrix: The matrix of the array before the move.
    :param array: The array after the move, with the same magnet count.
    :param moved: The positions of the magnets whose pose changed.

    """
    P = len(array)
    if matrix.P != P:
        raise DomainError(f"matrix has {matrix.P} magnets but the array has {P}")

    moved = np.unique(np.fromiter(moved, dtype=int))
    if len(moved) == 0:
        return matrix
    if len(moved) == P:
        return assemble(array, workers=workers)

    coeffs = matrix.coeffs.copy()
    targets = np.arange(P)
    rows = parallel_map(lambda p: _source_row(array, p, targets), moved, workers=workers)
    coeffs[moved, :] = np.array(rows).reshape(len(moved), P)

    # Columns: unmoved sources evaluated at the moved barycenters
    unmoved = np.setdiff1d(targets, moved)
    cols = parallel_map(lambda p: _source_row(array, p, moved), unmoved, workers=workers)
    coeffs[np.ix_(unmoved, moved)] = np.array(cols).reshape(len(unmoved), len(moved))

    demag = np.array([demag_factor(m.half_dims) for m in array.magnets], dtype=float)
    log.debug(f"updated interaction matrix for {len(moved)} moved magnets")
    return InteractionMatrix(coeffs, demag)
