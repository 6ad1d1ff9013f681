import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterable, NamedTuple, Sequence, TypeVar

import numpy as np

from .errors import ConfigurationError, ParseError

T = TypeVar("T")
R = TypeVar("R")

MU0 = 4e-7 * math.pi
"""The magnetic permeability of vacuum in T·m/A."""


def format_float(value: float) -> str:
    """Formats a float with the shortest representation that round-trips."""
    return repr(float(value))


def format_row(values: Iterable[Any]) -> str:
    """Formats a row of a columnar text table."""
    return " ".join(
        format_float(v) if isinstance(v, (float, np.floating)) else str(v)
        for v in values
    )


def sha256_file(path: "str | os.PathLike[str]") -> str:
    """Returns the hex SHA-256 digest of a file's content."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def read_json_document(
    path: "str | os.PathLike[str]",
    schema: str,
    versions: Sequence[int] = (1,),
) -> dict:
    """Reads a JSON document and checks its ``schema`` and ``version`` keys.

    :raises ParseError: The file is not valid JSON or has the wrong schema.

    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"could not read file: {e.strerror}", path=path) from e

    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path=path, line=e.lineno) from e

    if not isinstance(document, dict):
        raise ParseError("expected a JSON object at the top level", path=path)
    if document.get("schema") != schema:
        raise ParseError(
            f"expected schema {schema!r}, found {document.get('schema')!r}",
            path=path,
        )
    if document.get("version") not in versions:
        raise ParseError(
            f"unsupported {schema} version {document.get('version')!r}",
            path=path,
        )
    return document


def write_json_document(
    path: "str | os.PathLike[str]",
    schema: str,
    body: dict,
    version: int = 1,
) -> None:
    """Writes a JSON document tagged with ``schema`` and ``version``."""
    document = {"schema": schema, "version": version, **body}
    Path(path).write_text(json.dumps(document, indent=1) + "\n", encoding="utf-8")


class Table(NamedTuple):
    """A parsed columnar text table."""

    metadata: dict | None
    """The JSON object on the first comment line, if any."""
    columns: list[str] | None
    """The column names from the last comment line before the data, if any."""
    rows: np.ndarray
    """The numeric data with one row per record."""
    labels: list[list[str]]
    """Any trailing non-numeric fields of each row."""


def read_table(
    path: "str | os.PathLike[str]",
    *,
    numeric_columns: int | None = None,
    min_columns: int = 1,
) -> Table:
    """Reads a whitespace-separated columnar text table.

    Lines starting with ``#`` are comments. A first comment line holding
    a JSON object is returned as metadata, and the last comment line is
    taken as the column header.

    :param numeric_columns:
        The number of leading numeric fields per row. Remaining fields
        are returned as labels. If ``None``, every field must be numeric
        and all rows must have the same width.
    :param min_columns: The minimum number of numeric fields per row.
    :raises ParseError:
        A row has the wrong width or a field is not a finite number.

    """
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ParseError(f"could not read file: {e.strerror}", path=path) from e

    metadata = None
    columns = None
    values: list[list[float]] = []
    labels: list[list[str]] = []
    width = numeric_columns

    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            comment = stripped[1:].strip()
            if lineno == 1 and comment.startswith("{"):
                try:
                    metadata = json.loads(comment)
                except json.JSONDecodeError as e:
                    raise ParseError(f"invalid metadata: {e.msg}", path=path, line=1) from e
            elif not values:
                columns = comment.split()
            continue

        fields = stripped.split()
        if width is None:
            width = len(fields)
        if len(fields) < width or (numeric_columns is None and len(fields) != width):
            raise ParseError(
                f"expected {width} fields, found {len(fields)}",
                path=path,
                line=lineno,
                record=len(values),
            )
        if width < min_columns:
            raise ParseError(
                f"expected at least {min_columns} numeric fields",
                path=path,
                line=lineno,
                record=len(values),
            )

        try:
            row = [float(v) for v in fields[:width]]
        except ValueError as e:
            raise ParseError(str(e), path=path, line=lineno, record=len(values)) from e
        if not all(math.isfinite(v) for v in row):
            raise ParseError("non-finite value", path=path, line=lineno, record=len(values))

        values.append(row)
        labels.append(fields[width:])

    rows = np.array(values, dtype=float).reshape(-1, width or min_columns)
    return Table(metadata, columns, rows, labels)


def write_table(
    path: "str | os.PathLike[str]",
    columns: Sequence[str],
    rows: Iterable[Iterable[Any]],
    *,
    metadata: dict | None = None,
) -> None:
    """Writes a columnar text table, the inverse of :py:func:`read_table`."""
    with open(path, "w", encoding="utf-8") as f:
        if metadata is not None:
            f.write("# " + json.dumps(metadata, separators=(",", ":")) + "\n")
        f.write("# " + " ".join(columns) + "\n")
        for row in rows:
            f.write(format_row(row) + "\n")


def parallel_map(
    func: Callable[[T], R],
    items: Sequence[T],
    *,
    workers: int | None = None,
) -> list[R]:
    """Maps a function over items, preserving order.

    Runs sequentially when ``workers`` is ``None`` or 1. Results are returned
    in input order regardless of completion order, so any reduction done by
    the caller over the returned list is independent of the worker count.

    :raises ConfigurationError: ``workers`` is less than 1.

    """
    if workers is not None and workers < 1:
        raise ConfigurationError(f"workers must be 1 or higher, not {workers!r}")
    if workers is None or workers == 1 or len(items) <= 1:
        return [func(item) for item in items]

    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))
