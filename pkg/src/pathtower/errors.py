"""Exception hierarchy shared by all modules."""
from __future__ import annotations


class PathTowerError(Exception):
    """Base class for every error raised by the package."""


class PreconditionError(PathTowerError, ValueError):
    """An operation was called on inputs that violate its hypotheses."""

    def __init__(self, message: str, clause: str | None = None) -> None:
        self.clause = clause
        if clause is not None:
            message = f"hypothesis ({clause}) violated: {message}"
        super().__init__(message)


class ShapeError(PathTowerError, ValueError):
    """Domains or codomains of the maps involved do not line up."""


class CompositionError(ShapeError):
    """compose() was given maps whose middle graphs differ."""


class AmalgamationError(PathTowerError):
    """No amalgam could be produced."""


class NoAmalgamationError(AmalgamationError):
    """The search space was exhausted and no witness exists."""


class BoundExceededError(AmalgamationError):
    """The search outgrew its size bound before finding a witness."""


class ConstructionInvariantError(PathTowerError, AssertionError):
    """An internal invariant of a construction failed. Always a bug."""


class ParseError(PathTowerError, ValueError):
    """Malformed text input."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None) -> None:
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
