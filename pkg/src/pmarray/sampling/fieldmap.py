"""
Defines the field map container and its columnar text format.

A field map file starts with a comment line holding JSON metadata, then a
header comment and one ``x y z bx by bz [t]`` row per point::

    # {"schema":"pmarray.fieldmap","version":1,"provenance":{...},"grid":{...}}
    # x y z bx by bz
    -0.095 -0.015 -0.025 0.04801 1.2e-05 -3.1e-06
    ...

Measured scans without the metadata line are accepted as well and are
tagged with measured provenance.
"""
from __future__ import annotations

import enum
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from ..errors import DomainError, ParseError
from ..utils import read_table, write_table
from .grid import GridSpec, SampleGrid

__all__ = (
    "FIELDMAP_SCHEMA",
    "ProvenanceKind",
    "Provenance",
    "FieldMap",
    "load_fieldmap",
    "save_fieldmap",
    "save_profiles",
)

log = logging.getLogger(__name__)

FIELDMAP_SCHEMA = "pmarray.fieldmap"

LENGTH_UNITS = {"m": 1.0, "cm": 1e-2, "mm": 1e-3}
FIELD_UNITS = {"T": 1.0, "mT": 1e-3, "uT": 1e-6, "G": 1e-4}


class ProvenanceKind(enum.Enum):
    SIMULATED = "simulated"
    MEASURED = "measured"


@dataclass(frozen=True)
class Provenance:
    """Where a field map came from."""

    kind: ProvenanceKind
    mode: str | None = None
    """The solver mode of a simulated map."""
    temperature: float | None = None
    """The array temperature, or the mean measurement temperature, in °C."""
    temperature_spread: float | None = None
    """The spread of the measurement temperature in °C."""
    instrument: Mapping[str, Any] = field(default_factory=dict)
    """Free-form metadata about the instrument and the scan."""

    @classmethod
    def simulated(cls, mode: str, temperature: float) -> Provenance:
        return cls(ProvenanceKind.SIMULATED, mode=mode, temperature=temperature)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Provenance:
        def optional(key: str) -> float | None:
            value = data.get(key)
            return None if value is None else float(value)

        return cls(
            kind=ProvenanceKind(data.get("kind", "measured")),
            mode=data.get("mode"),
            temperature=optional("temperature"),
            temperature_spread=optional("temperature_spread"),
            instrument=dict(data.get("instrument", {})),
        )

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"kind": self.kind.value}
        for key in ("mode", "temperature", "temperature_spread"):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        if self.instrument:
            data["instrument"] = dict(self.instrument)
        return data


@dataclass(frozen=True, eq=False)
class FieldMap:
    """Flux-density vectors sampled on a grid.

    :raises DomainError:
        The field has the wrong shape or contains non-finite values.

    """

    grid: SampleGrid
    B: np.ndarray
    """The flux density in tesla, shape ``(N, 3)``."""
    provenance: Provenance = field(
        default_factory=lambda: Provenance(ProvenanceKind.SIMULATED)
    )
    temperatures: np.ndarray | None = None
    """The temperature logged at each point in °C, for measured maps."""

    def __post_init__(self) -> None:
        B = np.asarray(self.B, dtype=float)
        if B.shape != (len(self.grid), 3):
            raise DomainError(f"expected field of shape {(len(self.grid), 3)}, got {B.shape}")
        if not np.isfinite(B).all():
            raise DomainError("field map contains non-finite values")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)

        if self.temperatures is not None:
            T = np.asarray(self.temperatures, dtype=float)
            if T.shape != (len(self.grid),):
                raise DomainError("expected one temperature per point")
            object.__setattr__(self, "temperatures", T)

    def __len__(self) -> int:
        return len(self.grid)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FieldMap):
            return NotImplemented
        same_t = (self.temperatures is None) == (other.temperatures is None) and (
            self.temperatures is None or np.array_equal(self.temperatures, other.temperatures)
        )
        return (
            self.grid == other.grid
            and np.array_equal(self.B, other.B)
            and self.provenance == other.provenance
            and same_t
        )

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    @property
    def Bx(self) -> np.ndarray:
        return self.B[:, 0]

    def scaled(self, factor: float) -> FieldMap:
        return FieldMap(self.grid, self.B * factor, self.provenance, self.temperatures)


def load_fieldmap(
    path: str | os.PathLike[str],
    *,
    length_unit: str = "m",
    field_unit: str = "T",
    provenance: Provenance | None = None,
) -> FieldMap:
    """Loads a field map.

    Files without a metadata line are treated as measured scans whose
    columns are ``x y z bx by bz`` with an optional temperature column.

    :param length_unit: The unit of the coordinates of a scan without metadata.
    :param field_unit: The unit of the field of a scan without metadata.
    :param provenance: Overrides the provenance stored in or inferred for the file.
    :raises ParseError: The file is malformed or contains non-finite values.

    """
    try:
        length_scale = LENGTH_UNITS[length_unit]
        field_scale = FIELD_UNITS[field_unit]
    except KeyError as e:
        raise ParseError(f"unknown unit {e.args[0]!r}", path=path) from e

    table = read_table(path, min_columns=6)
    width = table.rows.shape[1]
    if width not in (6, 7):
        raise ParseError(f"expected 6 or 7 columns, found {width}", path=path)

    spec = None
    if table.metadata is not None:
        if table.metadata.get("schema") != FIELDMAP_SCHEMA:
            raise ParseError(f"expected schema {FIELDMAP_SCHEMA!r}", path=path, line=1)
        if table.metadata.get("version") != 1:
            raise ParseError("unsupported field map version", path=path, line=1)
        try:
            stored = Provenance.from_dict(table.metadata.get("provenance", {}))
            if table.metadata.get("grid") is not None:
                spec = GridSpec.from_dict(table.metadata["grid"])
        except (TypeError, ValueError) as e:
            raise ParseError(f"invalid metadata: {e}", path=path, line=1) from e
        length_scale = field_scale = 1.0
    else:
        stored = Provenance(ProvenanceKind.MEASURED)

    rows = table.rows
    temperatures = rows[:, 6].copy() if width == 7 else None
    if temperatures is not None and stored.temperature is None:
        stored = Provenance(
            stored.kind,
            stored.mode,
            float(temperatures.mean()),
            float(temperatures.std()),
            stored.instrument,
        )

    grid = SampleGrid(rows[:, :3] * length_scale, spec)
    fmap = FieldMap(grid, rows[:, 3:6] * field_scale, provenance or stored, temperatures)
    log.info(f"loaded {len(fmap)}-point {fmap.provenance.kind.value} field map from {path}")
    return fmap


def save_fieldmap(fmap: FieldMap, path: str | os.PathLike[str]) -> None:
    """Saves a field map so that :py:func:`load_fieldmap` returns an equal map."""
    metadata: dict[str, Any] = {
        "schema": FIELDMAP_SCHEMA,
        "version": 1,
        "provenance": fmap.provenance.to_dict(),
    }
    if fmap.grid.spec is not None:
        metadata["grid"] = fmap.grid.spec.to_dict()

    columns = ["x", "y", "z", "bx", "by", "bz"]
    data = np.column_stack([fmap.points, fmap.B])
    if fmap.temperatures is not None:
        columns.append("t")
        data = np.column_stack([data, fmap.temperatures])

    write_table(path, columns, (map(float, row) for row in data), metadata=metadata)


def save_profiles(fmap: FieldMap, path: str | os.PathLike[str]) -> None:
    """Writes one ``angle z bx by bz`` row per point, with the azimuth in degrees.

    Intended for maps sampled on z-lines, where each azimuth is one profile.

    """
    angles = np.degrees(np.arctan2(fmap.points[:, 1], fmap.points[:, 0])) % 360
    angles = np.round(angles, 9) % 360
    order = np.lexsort((fmap.points[:, 2], angles))
    data = np.column_stack([angles, fmap.points[:, 2], fmap.B])[order]
    write_table(
        path,
        ("angle[deg]", "z[m]", "bx[T]", "by[T]", "bz[T]"),
        (map(float, row) for row in data),
        metadata={"schema": "pmarray.profiles", "version": 1},
    )
