from os import PathLike
from typing import Sequence

__all__ = (
    "PmArrayError",
    "DomainError",
    "ParseError",
    "MaterialReferenceError",
    "GeometryError",
    "NumericalError",
    "ConvergenceError",
    "MonteCarloError",
    "InvalidStateError",
    "ConfigurationError",
)


class PmArrayError(Exception):
    """The base class for pmarray errors."""


class DomainError(PmArrayError, ValueError):
    """Raised when an input lies outside the domain an operation is defined on,
    e.g. a temperature outside the sanity bound or a point inside a magnet.
    """


class ParseError(PmArrayError, ValueError):
    """Raised when a file could not be parsed.

    :param message: A description of the problem.
    :param path: The file being read, if known.
    :param line: The 1-based line number the problem was found on, if known.
    :param record: The 0-based record (magnet, row, component) index, if known.

    """

    path: str | None
    """The file being read."""
    line: int | None
    """The 1-based line number where parsing failed."""
    record: int | None
    """The 0-based record index where parsing failed."""

    def __init__(
        self,
        message: str,
        *,
        path: "str | PathLike[str] | None" = None,
        line: int | None = None,
        record: int | None = None,
    ):
        self.path = None if path is None else str(path)
        self.line = line
        self.record = record

        context = []
        if self.path is not None:
            context.append(self.path)
        if line is not None:
            context.append(f"line {line}")
        if record is not None:
            context.append(f"record {record}")

        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)


class MaterialReferenceError(PmArrayError, LookupError):
    """Raised when a magnet refers to a material that does not exist."""

    material_id: str
    """The material identifier that could not be resolved."""

    def __init__(self, material_id: str, message: str | None = None):
        self.material_id = material_id
        super().__init__(message or f"unknown material {material_id!r}")

    def __str__(self) -> str:
        # LookupError would otherwise repr() the message like KeyError does
        return self.args[0]


class GeometryError(PmArrayError):
    """Raised when an array violates its geometric invariants."""

    pair: tuple[int, int] | None
    """The indices of the two magnets involved, if the error concerns a pair."""

    def __init__(self, message: str, *, pair: tuple[int, int] | None = None):
        self.pair = pair
        super().__init__(message)


class NumericalError(PmArrayError, ArithmeticError):
    """Raised when a numerical procedure cannot deliver the requested accuracy."""

    achieved: float | None
    """The tolerance or condition estimate that was actually achieved."""

    def __init__(self, message: str, *, achieved: float | None = None):
        self.achieved = achieved
        super().__init__(message)


class ConvergenceError(NumericalError):
    """Raised when the fixed-point iteration fails to converge."""

    history: tuple[float, ...]
    """The relative change of the solution after each iteration."""

    def __init__(self, message: str, *, history: Sequence[float]):
        self.history = tuple(history)
        super().__init__(message, achieved=self.history[-1] if self.history else None)


class MonteCarloError(NumericalError):
    """Raised when too many Monte Carlo draws fail."""

    failures: tuple[tuple[int, str], ...]
    """Pairs of (draw index, error message) for every failed draw."""

    def __init__(self, message: str, *, failures: Sequence[tuple[int, str]]):
        self.failures = tuple(failures)
        super().__init__(message)


class InvalidStateError(PmArrayError):
    """An operation was requested before the state it depends on exists."""

    missing: str
    """A short description of the missing state."""

    def __init__(self, missing: str):
        self.missing = missing
        super().__init__(f"operation requires {missing}")


class ConfigurationError(PmArrayError, ValueError):
    """Raised when a configuration file, flag or metadata entry is invalid
    or missing.
    """
