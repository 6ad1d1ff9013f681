"""
Defines permanent-magnet materials and their temperature dependence.

A :py:class:`Material` bundles the remanence/coercivity temperature laws
with either a linear recoil slope or a measured H-J characteristic.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import interp1d

from ..errors import DomainError
from ..utils import MU0

__all__ = (
    "TEMPERATURE_BOUNDS",
    "HJCurve",
    "Material",
    "MaterialState",
    "material_at_temperature",
)

log = logging.getLogger(__name__)

TEMPERATURE_BOUNDS = (-40.0, 120.0)
"""The sanity bound, in °C, accepted by :py:func:`material_at_temperature`."""

CURVE_REMANENCE_RTOL = 1e-3
"""The relative tolerance for the curve passing through the remanence point."""


@dataclass(frozen=True)
class HJCurve:
    """A tabulated, monotone H-J characteristic.

    Values are interpolated piecewise-linearly in H and extrapolated beyond
    the table using the slope of the first or last segment.

    :param h: The magnetic field values in A/m, strictly ascending.
    :param j: The polarization values in tesla, non-decreasing.
    :param includes_remanence:
        ``True`` if the table is the total characteristic passing through
        ``(0, J_r)``, ``False`` if it is the zero-remanence shape ``g``
        passing through ``(0, 0)`` to which J_r is added.
    :raises DomainError: The table is too short or not monotone.

    """

    h: tuple[float, ...]
    j: tuple[float, ...]
    includes_remanence: bool = True
    _interpolant: interp1d = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.h) != len(self.j):
            raise DomainError(
                f"H-J curve has {len(self.h)} H values but {len(self.j)} J values"
            )
        if len(self.h) < 2:
            raise DomainError("H-J curve needs at least two points")
        if not all(math.isfinite(v) for v in self.h + self.j):
            raise DomainError("H-J curve contains non-finite values")
        if any(b <= a for a, b in zip(self.h, self.h[1:])):
            raise DomainError("H-J curve must be strictly ascending in H")
        if any(b < a for a, b in zip(self.j, self.j[1:])):
            raise DomainError("H-J curve must be monotone non-decreasing in J")

        f = interp1d(
            np.array(self.h),
            np.array(self.j),
            kind="linear",
            fill_value="extrapolate",  # type: ignore[arg-type]
            assume_sorted=True,
        )
        object.__setattr__(self, "_interpolant", f)

    @classmethod
    def from_arrays(
        cls,
        h: np.ndarray,
        j: np.ndarray,
        *,
        includes_remanence: bool = True,
    ) -> HJCurve:
        return cls(
            tuple(float(v) for v in np.asarray(h).ravel()),
            tuple(float(v) for v in np.asarray(j).ravel()),
            includes_remanence,
        )

    @classmethod
    def linear(
        cls,
        j_r: float,
        mu_m: float,
        h_min: float,
        h_max: float,
        points: int = 11,
    ) -> HJCurve:
        """Tabulates the linear law ``J = μ0·μ_M·H + J_r``."""
        h = np.linspace(h_min, h_max, points)
        return cls.from_arrays(h, MU0 * mu_m * h + j_r)

    def __call__(self, h: np.ndarray | float) -> np.ndarray:
        """Evaluates the characteristic at the given field values."""
        return self._interpolant(np.asarray(h, dtype=float))

    def slopes(self) -> np.ndarray:
        """Returns the slope dJ/dH of every segment, in T/(A/m)."""
        return np.diff(np.array(self.j)) / np.diff(np.array(self.h))

    def shape(self, j_r: float) -> HJCurve:
        """Returns the zero-remanence shape of this curve.

        :param j_r: The remanence to subtract if the curve includes it.

        """
        if not self.includes_remanence:
            return self
        return HJCurve(self.h, tuple(v - j_r for v in self.j), includes_remanence=False)

    def scaled(self, h_factor: float, j_factor: float) -> HJCurve:
        """Returns the curve with both axes scaled affinely.

        A negative ``h_factor`` is rejected because it would reverse the curve.

        """
        if h_factor <= 0 or j_factor <= 0:
            raise DomainError("curve scale factors must be positive")
        return HJCurve(
            tuple(v * h_factor for v in self.h),
            tuple(v * j_factor for v in self.j),
            self.includes_remanence,
        )


@dataclass(frozen=True)
class Material:
    """A permanent-magnet material.

    The coercivity is negative by convention. Temperatures are in °C and
    coefficients in 1/°C (``K_H2`` in 1/°C²).

    :raises DomainError:
        The remanence is not positive, or the curve does not pass through
        the remanence point.

    """

    id: str
    """The identifier that magnets refer to."""
    J_r0: float
    """The remanent polarization at :py:attr:`T_ref`, in tesla."""
    H_c0: float
    """The coercivity at :py:attr:`T_ref`, in A/m (negative)."""
    T_ref: float = 18.0
    """The reference temperature of :py:attr:`J_r0` and :py:attr:`H_c0`."""
    K_J: float = -1.26e-3
    K_H1: float = -0.01
    K_H2: float = 3.8e-3
    mu_M: float | None = None
    """The relative susceptibility slope of the linear model, if available."""
    hj_curve: HJCurve | None = None
    """The measured characteristic at :py:attr:`T_ref`, if available."""
    placeholder: bool = field(default=False, compare=False)
    """Whether :py:attr:`hj_curve` is synthetic placeholder data."""

    def __post_init__(self) -> None:
        if not self.J_r0 > 0:
            raise DomainError(f"material {self.id!r}: J_r0 must be positive")
        if self.H_c0 >= 0:
            raise DomainError(f"material {self.id!r}: H_c0 must be negative")
        if self.mu_M is not None and self.mu_M < 0:
            raise DomainError(f"material {self.id!r}: mu_M must not be negative")
        if self.hj_curve is not None:
            expected = self.J_r0 if self.hj_curve.includes_remanence else 0.0
            at_zero = float(self.hj_curve(0.0))
            if abs(at_zero - expected) > CURVE_REMANENCE_RTOL * self.J_r0:
                raise DomainError(
                    f"material {self.id!r}: H-J curve gives {at_zero:.6g} T at H = 0, "
                    f"expected {expected:.6g} T"
                )


class MaterialState(NamedTuple):
    """The properties of a material at a given temperature."""

    J_r: float
    """The remanent polarization in tesla."""
    H_c: float
    """The coercivity in A/m."""
    curve: HJCurve | None
    """The temperature-scaled H-J curve, if the material has one."""


def material_at_temperature(m: Material, T: float) -> MaterialState:
    """Evaluates a material's temperature laws.

    The remanence follows ``J_r = J_r0·[1 + K_J·ΔT]`` and the coercivity
    ``H_c = H_c0·[1 + K_H1·ΔT + K_H2·ΔT²]`` with ``ΔT = T - T_ref``.
    A measured curve is scaled affinely, its J-axis by ``J_r/J_r0`` and its
    H-axis by ``H_c/H_c0``, which keeps the knee shape and moves both
    endpoints onto the temperature laws.

    :param m: The material to evaluate.
    :param T: The temperature in °C.
    :raises DomainError:
        The temperature is outside :py:data:`TEMPERATURE_BOUNDS`.

    """
    low, high = TEMPERATURE_BOUNDS
    if not low <= T <= high:
        raise DomainError(f"temperature {T} °C is outside [{low}, {high}] °C")

    dT = T - m.T_ref
    j_r = m.J_r0 * (1 + m.K_J * dT)
    h_c = m.H_c0 * (1 + m.K_H1 * dT + m.K_H2 * dT**2)

    curve = m.hj_curve
    if curve is not None and dT != 0:
        curve = curve.scaled(h_c / m.H_c0, j_r / m.J_r0)
    log.debug(f"material {m.id} at {T} °C: J_r = {j_r:.6g} T, H_c = {h_c:.6g} A/m")

    return MaterialState(j_r, h_c, curve)
