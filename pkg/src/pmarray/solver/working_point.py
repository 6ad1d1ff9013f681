"""
Solves the working point ``(H_v, J_v)`` of every magnet in an array.

With ``h = μ0·H_v`` and ``A = -diag(ℵ) + Gᵀ``, the internal fields satisfy
``h = A·J``. Splitting each characteristic as ``J = κ·h + J_r + R`` gives
the linear system::

    (I - A·diag(κ))·h = A·(J_r + R)

For linear magnets ``κ = μ_M`` and ``R = 0``. For nonlinear magnets the
residual ``R = g(H) - κ·h`` is updated by fixed-point iteration, with
``κ`` fixed at the midpoint of the curve's slope range so that the
system matrix is factorized only once.
"""
from __future__ import annotations

import enum
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from ..errors import ConvergenceError, DomainError, NumericalError
from ..geometry import ArrayModel, HJCurve
from ..utils import MU0, write_table
from .interaction import InteractionMatrix, assemble

__all__ = (
    "SolverMode",
    "FixedPointConfig",
    "Characteristics",
    "WorkingPointSolution",
    "WorkingPointSummary",
    "solve",
    "solve_ideal",
    "solve_linear",
    "solve_nonlinear",
    "summarize",
    "write_working_points",
)

log = logging.getLogger(__name__)


class SolverMode(enum.Enum):
    """How magnets respond to the field of their neighbours."""

    IDEAL = "ideal"
    """Every magnet is polarized at its remanence regardless of the field."""

    LINEAR = "linear"
    """Magnets follow the linear recoil law ``J = μ0·μ_M·H + J_r``."""

    NONLINEAR = "nonlinear"
    """Magnets follow their tabulated H-J characteristic."""


@dataclass(frozen=True)
class FixedPointConfig:
    """Settings of the working-point solvers."""

    tol: float = 1e-7
    """The relative change of H_v below which the iteration has converged."""
    max_iters: int = 200
    floor: float = 1.0
    """The smallest |H_v| in A/m used to normalize relative changes."""
    monotone_after: int = 5
    """The iteration after which a growing change is reported."""
    max_condition: float = 1e12
    """The largest acceptable condition estimate of the system matrix."""

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_iters < 1:
            raise DomainError("max_iters must be 1 or higher")
        if not self.floor > 0:
            raise DomainError("floor must be positive")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> FixedPointConfig:
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass(frozen=True, eq=False)
class Characteristics:
    """The per-magnet characteristics entering a solve.

    Each magnet follows ``J = c·(g(H) + J_r)`` where ``g`` is the
    zero-remanence shape of its material's curve at the array temperature
    and ``c`` scales the whole characteristic along J.

    """

    remanence: np.ndarray
    """The effective remanence ``c·J_r`` of each magnet in tesla."""
    scale: np.ndarray
    """The characteristic scale ``c`` of each magnet."""
    mu_M: np.ndarray
    """The linear slope of each magnet, NaN where unavailable."""
    material_ids: tuple[str, ...]
    shapes: Mapping[str, HJCurve | None]
    """The zero-remanence shape of each material, if it has a curve."""

    @classmethod
    def from_array(
        cls,
        array: ArrayModel,
        *,
        remanence: Sequence[float] | np.ndarray | None = None,
        scale: Sequence[float] | np.ndarray | float | None = None,
    ) -> Characteristics:
        """Evaluates an array's materials at its temperature.

        :param remanence:
            Per-magnet remanences overriding the material values, in tesla.
        :param scale: Per-magnet or global characteristic scale, default 1.

        """
        states = array.material_states()
        P = len(array)
        ids = tuple(array.material_ids)

        jr = array.remanences() if remanence is None else np.asarray(remanence, dtype=float)
        c = np.ones(P) if scale is None else np.broadcast_to(np.asarray(scale, float), (P,))
        if jr.shape != (P,):
            raise DomainError(f"expected {P} remanences, got shape {jr.shape}")

        mu = np.array(
            [
                math.nan if array.materials[mid].mu_M is None else array.materials[mid].mu_M
                for mid in ids
            ],
            dtype=float,
        )
        shapes = {
            mid: None if s.curve is None else s.curve.shape(s.J_r)
            for mid, s in states.items()
        }
        return cls(c * jr, np.array(c, dtype=float), mu, ids, shapes)

    def groups(self) -> dict[str, np.ndarray]:
        """Returns the magnet positions using each material."""
        ids = np.array(self.material_ids)
        return {mid: np.flatnonzero(ids == mid) for mid in dict.fromkeys(self.material_ids)}


@dataclass(frozen=True, eq=False)
class WorkingPointSolution:
    """The working point of every magnet after a solve."""

    H_v: np.ndarray
    """The internal field along each magnetization axis in A/m."""
    J_v: np.ndarray
    """The polarization along each magnetization axis in tesla."""
    mode: SolverMode
    iterations: int = 0
    """The number of linear solves performed."""
    residual_norm: float = 0.0
    """The relative residual of the final linear system or fixed-point step."""
    history: tuple[float, ...] = field(default=())
    """The relative change of H_v after each fixed-point iteration."""


@dataclass(frozen=True)
class WorkingPointSummary:
    """The distribution of working points over an array."""

    mode: SolverMode
    H_mean: float
    H_std: float
    H_min: float
    H_max: float
    J_mean: float
    J_std: float
    J_min: float
    J_max: float

    def to_dict(self) -> dict[str, Any]:
        return {k: (v.value if isinstance(v, SolverMode) else v) for k, v in vars(self).items()}


class _Factorization:
    """An LU factorization of the system matrix, reused across right-hand sides."""

    def __init__(self, matrix: np.ndarray, max_condition: float):
        self.matrix = matrix
        if matrix.shape[0] == 0:
            self.lu = (matrix, np.zeros(0, dtype=np.int32))
            return

        lu, piv = scipy.linalg.lu_factor(matrix, check_finite=True)
        anorm = np.linalg.norm(matrix, 1)
        rcond, info = lapack.dgecon(lu, anorm, norm="1")
        if info != 0 or rcond == 0:
            raise NumericalError("interaction system is singular", achieved=math.inf)
        condition = 1 / rcond
        if condition > max_condition:
            raise NumericalError(
                f"interaction system is ill-conditioned (estimate {condition:.3g})",
                achieved=condition,
            )
        log.debug(f"system condition estimate {condition:.3g}")
        self.lu = (lu, piv)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if len(rhs) == 0:
            return rhs.copy()
        return scipy.linalg.lu_solve(self.lu, rhs, check_finite=False)

    def residual(self, x: np.ndarray, rhs: np.ndarray) -> float:
        norm = np.linalg.norm(rhs)
        if norm == 0:
            return 0.0
        return float(np.linalg.norm(self.matrix @ x - rhs) / norm)


def _system(matrix: InteractionMatrix, kappa: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    A = matrix.system()
    return np.eye(matrix.P) - A * kappa[None, :], A


def _check_size(array: ArrayModel, matrix: InteractionMatrix, chars: Characteristics) -> None:
    if matrix.P != len(array) or len(chars.remanence) != len(array):
        raise DomainError("array, matrix and characteristics disagree on the magnet count")


def solve_ideal(
    array: ArrayModel,
    *,
    characteristics: Characteristics | None = None,
) -> WorkingPointSolution:
    """Polarizes every magnet at its remanence.

    H_v is reported as the self-demagnetizing field ``-ℵ·J_v/μ0``, which
    ignores the neighbours.

    """
    chars = characteristics or Characteristics.from_array(array)
    J = chars.remanence.copy()
    demag = np.array([m.demag for m in array.magnets], dtype=float)
    return WorkingPointSolution(-demag * J / MU0, J, SolverMode.IDEAL)


def solve_linear(
    array: ArrayModel,
    matrix: InteractionMatrix,
    *,
    characteristics: Characteristics | None = None,
    config: FixedPointConfig | None = None,
) -> WorkingPointSolution:
    """Solves the linear interaction system directly.

    :raises DomainError: A material has no linear slope.
    :raises NumericalError: The system is singular or ill-conditioned.

    """
    config = config or FixedPointConfig()
    chars = characteristics or Characteristics.from_array(array)
    _check_size(array, matrix, chars)

    missing = [mid for mid, i in chars.groups().items() if np.isnan(chars.mu_M[i]).any()]
    if missing:
        raise DomainError(f"materials without a linear slope: {', '.join(missing)}")

    kappa = chars.scale * chars.mu_M
    system, A = _system(matrix, kappa)
    lu = _Factorization(system, config.max_condition)

    rhs = A @ chars.remanence
    h = lu.solve(rhs)
    residual = lu.residual(h, rhs)
    J = kappa * h + chars.remanence
    log.info(f"linear solve of {len(array)} magnets, relative residual {residual:.3g}")
    return WorkingPointSolution(h / MU0, J, SolverMode.LINEAR, 1, residual)


def _fixed_point_slopes(chars: Characteristics) -> np.ndarray:
    kappa = np.empty(len(chars.remanence))
    for mid, idx in chars.groups().items():
        shape = chars.shapes[mid]
        if shape is None:
            raise DomainError(f"material {mid} has no H-J curve")
        s = shape.slopes()
        kappa[idx] = (s.min() + s.max()) / (2 * MU0)
    return chars.scale * kappa


def _characteristic(chars: Characteristics, H: np.ndarray) -> np.ndarray:
    """Evaluates ``c·g(H)`` per magnet, without the remanence."""
    out = np.empty_like(H)
    for mid, idx in chars.groups().items():
        out[idx] = chars.scale[idx] * chars.shapes[mid](H[idx])  # type: ignore[misc]
    return out


def solve_nonlinear(
    array: ArrayModel,
    matrix: InteractionMatrix,
    config: FixedPointConfig | None = None,
    *,
    characteristics: Characteristics | None = None,
) -> WorkingPointSolution:
    """Solves the nonlinear working points by fixed-point iteration.

    The iteration starts from ``R = 0`` and stops once the largest relative
    change of H_v between two iterations falls below ``config.tol``.

    :raises DomainError: A material has no H-J curve.
    :raises NumericalError: The system is singular or ill-conditioned.
    :raises ConvergenceError: The iteration did not converge within ``config.max_iters``.

    """
    config = config or FixedPointConfig()
    chars = characteristics or Characteristics.from_array(array)
    _check_size(array, matrix, chars)

    kappa = _fixed_point_slopes(chars)
    system, A = _system(matrix, kappa)
    lu = _Factorization(system, config.max_condition)

    R = np.zeros(len(array))
    H_prev: np.ndarray | None = None
    history: list[float] = []
    warned = False

    for iteration in range(1, config.max_iters + 1):
        h = lu.solve(A @ (chars.remanence + R))
        H = h / MU0
        R = _characteristic(chars, H) - kappa * h

        if H_prev is not None:
            denominator = np.maximum(np.abs(H), config.floor)
            change = float(np.max(np.abs(H - H_prev) / denominator, initial=0.0))
            history.append(change)
            log.debug(f"fixed-point iteration {iteration}: relative change {change:.3g}")

            if (
                not warned
                and iteration > config.monotone_after
                and len(history) >= 2
                and history[-1] > history[-2]
            ):
                log.warning(f"fixed-point change grew at iteration {iteration}")
                warned = True

            if change < config.tol:
                J = _characteristic(chars, H) + chars.remanence
                log.info(f"fixed point converged in {iteration} iterations")
                return WorkingPointSolution(
                    H, J, SolverMode.NONLINEAR, iteration, change, tuple(history)
                )
        H_prev = H

    raise ConvergenceError(
        f"fixed point did not converge in {config.max_iters} iterations",
        history=history,
    )


def solve(
    array: ArrayModel,
    mode: SolverMode | str,
    matrix: InteractionMatrix | None = None,
    *,
    characteristics: Characteristics | None = None,
    config: FixedPointConfig | None = None,
    workers: int | None = None,
) -> WorkingPointSolution:
    """Solves an array in the given mode, assembling its matrix if needed."""
    mode = SolverMode(mode)
    if mode == SolverMode.IDEAL:
        return solve_ideal(array, characteristics=characteristics)

    if matrix is None:
        matrix = assemble(array, workers=workers)
    if mode == SolverMode.LINEAR:
        return solve_linear(array, matrix, characteristics=characteristics, config=config)
    return solve_nonlinear(array, matrix, config, characteristics=characteristics)


def summarize(solution: WorkingPointSolution) -> WorkingPointSummary:
    """Summarizes the distribution of working points."""
    H, J = solution.H_v, solution.J_v
    if len(H) == 0:
        raise DomainError("solution has no magnets")
    return WorkingPointSummary(
        solution.mode,
        float(H.mean()),
        float(H.std()),
        float(H.min()),
        float(H.max()),
        float(J.mean()),
        float(J.std()),
        float(J.min()),
        float(J.max()),
    )


def write_working_points(
    path: str | os.PathLike[str],
    array: ArrayModel,
    solution: WorkingPointSolution,
) -> None:
    """Writes one ``index ring layer H_v J_v`` row per magnet."""
    rows = (
        (m.index, m.ring, m.layer, float(h), float(j))
        for m, h, j in zip(array.magnets, solution.H_v, solution.J_v)
    )
    write_table(
        path,
        ("index", "ring", "layer", "H_v[A/m]", "J_v[T]"),
        rows,
        metadata={
            "schema": "pmarray.working_points",
            "version": 1,
            "mode": solution.mode.value,
            "iterations": solution.iterations,
            "residual_norm": solution.residual_norm,
            "temperature": array.temperature,
        },
    )
