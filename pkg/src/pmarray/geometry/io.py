"""
Reads and writes geometry, material, H-J curve and ring-offset files.

Geometry files are JSON documents with the schema ``pmarray.geometry``::

    {
     "schema": "pmarray.geometry",
     "version": 1,
     "temperature": 18.0,
     "materials": [{"id": "N52-cube", "J_r0": 1.431, ...}],
     "ring_z_offsets": {"0": 0.0},
     "magnets": [
      {"index": 0, "ring": 0, "layer": 0, "center": [x, y, z],
       "quaternion": [qx, qy, qz, qw], "half_dims": [lu, lv, lw],
       "material": "N52-cube"}
     ]
    }

The same records can also be stored as a columnar text table with
one row per magnet, which is convenient when converting design tables.
"""
from __future__ import annotations

import importlib.resources
import logging
import os
from pathlib import Path
from typing import Any, Literal, Mapping

from ..errors import ConfigurationError, ParseError
from ..utils import read_json_document, read_table, write_json_document, write_table
from .array import ArrayModel
from .magnet import BarMagnet
from .material import HJCurve, Material

__all__ = (
    "GEOMETRY_SCHEMA",
    "MATERIALS_SCHEMA",
    "RING_OFFSETS_SCHEMA",
    "load_array",
    "save_array",
    "load_hj_curve",
    "save_hj_curve",
    "load_materials",
    "reference_materials",
    "load_ring_offsets",
    "save_ring_offsets",
    "reference_ring_offsets",
)

log = logging.getLogger(__name__)

GEOMETRY_SCHEMA = "pmarray.geometry"
MATERIALS_SCHEMA = "pmarray.materials"
RING_OFFSETS_SCHEMA = "pmarray.ring_offsets"

MAGNET_COLUMNS = (
    "index", "ring", "layer", "x", "y", "z",
    "qx", "qy", "qz", "qw", "lu", "lv", "lw", "material",
)  # fmt: skip

GeometryFormat = Literal["json", "text"]


def _infer_format(path: str | os.PathLike[str], format: str | None) -> GeometryFormat:
    if format is None:
        format = "json" if Path(path).suffix.lower() == ".json" else "text"
    if format not in ("json", "text"):
        raise ConfigurationError(f"unknown geometry format {format!r}")
    return format  # type: ignore[return-value]


# Materials


def _material_from_dict(
    data: Mapping[str, Any],
    *,
    base: Path | None = None,
    path: str | os.PathLike[str] | None = None,
    record: int | None = None,
) -> Material:
    try:
        curve = None
        if data.get("hj_curve") is not None:
            c = data["hj_curve"]
            curve = HJCurve(
                tuple(float(v) for v in c["h"]),
                tuple(float(v) for v in c["j"]),
                bool(c.get("includes_remanence", True)),
            )
        elif data.get("hj_curve_file") is not None:
            curve_path = Path(data["hj_curve_file"])
            if base is not None and not curve_path.is_absolute():
                curve_path = base / curve_path
            curve = load_hj_curve(
                curve_path,
                includes_remanence=bool(data.get("includes_remanence", True)),
            )

        mu_m = data.get("mu_M")
        return Material(
            id=str(data["id"]),
            J_r0=float(data["J_r0"]),
            H_c0=float(data["H_c0"]),
            T_ref=float(data.get("T_ref", 18.0)),
            K_J=float(data.get("K_J", -1.26e-3)),
            K_H1=float(data.get("K_H1", -0.01)),
            K_H2=float(data.get("K_H2", 3.8e-3)),
            mu_M=None if mu_m is None else float(mu_m),
            hj_curve=curve,
            placeholder=bool(data.get("placeholder", False)),
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"invalid material record: {e!r}", path=path, record=record) from e


def _material_to_dict(m: Material) -> dict[str, Any]:
    data: dict[str, Any] = {
        "id": m.id,
        "J_r0": m.J_r0,
        "H_c0": m.H_c0,
        "T_ref": m.T_ref,
        "K_J": m.K_J,
        "K_H1": m.K_H1,
        "K_H2": m.K_H2,
        "mu_M": m.mu_M,
        "hj_curve": None,
        "placeholder": m.placeholder,
    }
    if m.hj_curve is not None:
        data["hj_curve"] = {
            "h": list(m.hj_curve.h),
            "j": list(m.hj_curve.j),
            "includes_remanence": m.hj_curve.includes_remanence,
        }
    return data


def load_hj_curve(
    path: str | os.PathLike[str],
    *,
    includes_remanence: bool = True,
) -> HJCurve:
    """Loads a two-column H-J table (H in A/m, J in tesla, ascending H).

    :raises ParseError: The table is malformed or not monotone.

    """
    table = read_table(path)
    if table.rows.shape[1] != 2:
        raise ParseError(f"expected 2 columns, found {table.rows.shape[1]}", path=path)
    try:
        return HJCurve.from_arrays(
            table.rows[:, 0],
            table.rows[:, 1],
            includes_remanence=includes_remanence,
        )
    except ValueError as e:
        raise ParseError(str(e), path=path) from e


def save_hj_curve(curve: HJCurve, path: str | os.PathLike[str]) -> None:
    write_table(path, ("H[A/m]", "J[T]"), zip(curve.h, curve.j))


def load_materials(path: str | os.PathLike[str]) -> dict[str, Material]:
    """Loads a ``pmarray.materials`` document.

    Relative ``hj_curve_file`` entries are resolved against the document's
    directory.

    """
    document = read_json_document(path, MATERIALS_SCHEMA)
    base = Path(path).parent
    materials = {}
    for i, record in enumerate(document.get("materials", [])):
        m = _material_from_dict(record, base=base, path=path, record=i)
        materials[m.id] = m
    return materials


def reference_materials(*, with_curves: bool = True) -> dict[str, Material]:
    """Returns the shipped N52 materials.

    The shipped H-J curves are synthetic placeholders shaped like a
    sintered NdFeB characteristic. Pass ``with_curves=False`` to get the
    linear-only records.

    """
    with importlib.resources.as_file(
        importlib.resources.files("pmarray.data") / "materials.json"
    ) as path:
        materials = load_materials(path)

    if not with_curves:
        return {
            mid: Material(
                id=m.id,
                J_r0=m.J_r0,
                H_c0=m.H_c0,
                T_ref=m.T_ref,
                K_J=m.K_J,
                K_H1=m.K_H1,
                K_H2=m.K_H2,
                mu_M=m.mu_M,
            )
            for mid, m in materials.items()
        }

    for m in materials.values():
        if m.placeholder:
            log.warning(f"material {m.id} uses a placeholder H-J curve")
    return materials


# Arrays


def _magnet_from_dict(data: Mapping[str, Any]) -> BarMagnet:
    return BarMagnet(
        index=int(data["index"]),
        center=tuple(float(v) for v in data["center"]),  # type: ignore[arg-type]
        quaternion=tuple(float(v) for v in data["quaternion"]),  # type: ignore[arg-type]
        half_dims=tuple(float(v) for v in data["half_dims"]),  # type: ignore[arg-type]
        material_id=str(data["material"]),
        ring=int(data.get("ring", 0)),
        layer=int(data.get("layer", 0)),
    )


def _magnet_to_dict(m: BarMagnet) -> dict[str, Any]:
    return {
        "index": m.index,
        "ring": m.ring,
        "layer": m.layer,
        "center": list(m.center),
        "quaternion": list(m.quaternion),
        "half_dims": list(m.half_dims),
        "material": m.material_id,
    }


def _header_from_dict(
    document: Mapping[str, Any],
    path: str | os.PathLike[str],
) -> tuple[dict[str, Material], float, dict[int, float]]:
    base = Path(path).parent
    materials = {}
    for i, record in enumerate(document.get("materials", [])):
        m = _material_from_dict(record, base=base, path=path, record=i)
        materials[m.id] = m

    try:
        temperature = float(document.get("temperature", 18.0))
        offsets = {int(k): float(v) for k, v in document.get("ring_z_offsets", {}).items()}
    except (AttributeError, TypeError, ValueError) as e:
        raise ParseError(f"invalid geometry header: {e!r}", path=path) from e
    return materials, temperature, offsets


def _header_to_dict(array: ArrayModel) -> dict[str, Any]:
    return {
        "temperature": array.temperature,
        "materials": [_material_to_dict(m) for m in array.materials.values()],
        "ring_z_offsets": {str(k): v for k, v in sorted(array.ring_z_offsets.items())},
    }


def load_array(
    path: str | os.PathLike[str],
    format: GeometryFormat | None = None,
    *,
    materials: Mapping[str, Material] | None = None,
) -> ArrayModel:
    """Loads a magnet array.

    :param path: The geometry file.
    :param format:
        Either ``"json"`` or ``"text"``. Inferred from the file suffix
        if not given.
    :param materials:
        Materials to add to those stored in the file. Inline materials
        take precedence.
    :raises ParseError: The file is malformed.
    :raises MaterialReferenceError: A magnet refers to an unknown material.
    :raises GeometryError: Two magnets overlap.

    """
    format = _infer_format(path, format)

    if format == "json":
        document = read_json_document(path, GEOMETRY_SCHEMA)
        inline, temperature, offsets = _header_from_dict(document, path)
        records = document.get("magnets")
        if not isinstance(records, list):
            raise ParseError("expected a list of magnets", path=path)

        magnets = []
        for i, record in enumerate(records):
            try:
                magnets.append(_magnet_from_dict(record))
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(f"invalid magnet record: {e!r}", path=path, record=i) from e
    else:
        table = read_table(path, numeric_columns=len(MAGNET_COLUMNS) - 1)
        document = table.metadata or {}
        if document and document.get("schema") != GEOMETRY_SCHEMA:
            raise ParseError(f"expected schema {GEOMETRY_SCHEMA!r}", path=path, line=1)
        inline, temperature, offsets = _header_from_dict(document, path)

        magnets = []
        for i, (row, label) in enumerate(zip(table.rows, table.labels)):
            if len(label) != 1:
                raise ParseError("expected a single material id", path=path, record=i)
            try:
                magnets.append(
                    BarMagnet(
                        index=int(row[0]),
                        ring=int(row[1]),
                        layer=int(row[2]),
                        center=(row[3], row[4], row[5]),
                        quaternion=(row[6], row[7], row[8], row[9]),
                        half_dims=(row[10], row[11], row[12]),
                        material_id=label[0],
                    )
                )
            except ValueError as e:
                raise ParseError(str(e), path=path, record=i) from e

    merged = dict(materials or {})
    merged.update(inline)
    array = ArrayModel(tuple(magnets), merged, temperature, offsets)
    log.info(f"loaded {len(array)} magnets from {path}")
    return array


def save_array(
    array: ArrayModel,
    path: str | os.PathLike[str],
    format: GeometryFormat | None = None,
) -> None:
    """Saves a magnet array so that :py:func:`load_array` returns an equal array."""
    format = _infer_format(path, format)
    header = _header_to_dict(array)

    if format == "json":
        body = {**header, "magnets": [_magnet_to_dict(m) for m in array.magnets]}
        write_json_document(path, GEOMETRY_SCHEMA, body)
        return

    metadata = {"schema": GEOMETRY_SCHEMA, "version": 1, **header}
    rows = (
        (m.index, m.ring, m.layer, *m.center, *m.quaternion, *m.half_dims, m.material_id)
        for m in array.magnets
    )
    write_table(path, MAGNET_COLUMNS, rows, metadata=metadata)


# Ring offsets


def load_ring_offsets(path: str | os.PathLike[str]) -> dict[int, float]:
    """Loads a ring z-offset override file mapping ring indices to metres."""
    document = read_json_document(path, RING_OFFSETS_SCHEMA)
    try:
        return {int(k): float(v) for k, v in document["offsets"].items()}
    except (AttributeError, KeyError, TypeError, ValueError) as e:
        raise ParseError(f"invalid ring offsets: {e!r}", path=path) from e


def save_ring_offsets(offsets: Mapping[int, float], path: str | os.PathLike[str]) -> None:
    body = {"offsets": {str(k): float(v) for k, v in sorted(offsets.items())}}
    write_json_document(path, RING_OFFSETS_SCHEMA, body)


def reference_ring_offsets() -> dict[int, float]:
    """Returns the shipped placeholder ring offsets."""
    with importlib.resources.as_file(
        importlib.resources.files("pmarray.data") / "ring_offsets.json"
    ) as path:
        offsets = load_ring_offsets(path)
    log.warning("using placeholder ring offsets")
    return offsets
