"""Finite reflexive path graphs and their subintervals."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError, ShapeError

_GRAPH_RE = re.compile(r"graph size=(\d+)")
_INTERVAL_RE = re.compile(r"\[(\d+),(\d+)\]")


@dataclass(frozen=True)
class PathGraph:
    """The path on vertices 0..size-1 with a R b iff |a-b| <= 1."""

    size: int

    def __post_init__(self) -> None:
        if isinstance(self.size, bool) or not isinstance(self.size, int):
            raise TypeError("size must be an int")
        if self.size < 1:
            raise ShapeError(f"a path graph needs at least one vertex, got size={self.size}")

    @property
    def last(self) -> int:
        return self.size - 1

    def vertices(self) -> range:
        return range(self.size)

    def whole(self) -> Interval:
        return Interval(0, self.size - 1)

    def is_endpoint(self, v: int) -> bool:
        return v == 0 or v == self.size - 1

    def other_end(self, v: int) -> int:
        if v == 0:
            return self.size - 1
        if v == self.size - 1:
            return 0
        raise ShapeError(f"{v} is not an endpoint of a path of size {self.size}")

    def to_text(self) -> str:
        return f"graph size={self.size}"

    @classmethod
    def from_text(cls, text: str) -> PathGraph:
        m = _GRAPH_RE.fullmatch(text.strip())
        if m is None:
            raise ParseError(f"expected 'graph size=<n>', got {text.strip()!r}")
        return cls(int(m.group(1)))


@dataclass(frozen=True, order=True)
class Interval:
    """The connected vertex set {lo, ..., hi}."""

    lo: int
    hi: int

    def __post_init__(self) -> None:
        if not (0 <= self.lo <= self.hi):
            raise ShapeError(f"bad interval [{self.lo},{self.hi}]")

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, v: object) -> bool:
        return isinstance(v, int) and self.lo <= v <= self.hi

    def __iter__(self):
        return iter(range(self.lo, self.hi + 1))

    def __len__(self) -> int:
        return self.size

    def fits(self, g: PathGraph) -> bool:
        return self.hi < g.size

    def check_in(self, g: PathGraph) -> None:
        if not self.fits(g):
            raise ShapeError(f"interval {self.to_text()} does not fit in a path of size {g.size}")

    def is_endpoint(self, v: int) -> bool:
        return v == self.lo or v == self.hi

    def other_end(self, v: int) -> int:
        if v == self.lo:
            return self.hi
        if v == self.hi:
            return self.lo
        raise ShapeError(f"{v} is not an endpoint of {self.to_text()}")

    def issubset(self, other: Interval) -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def shift(self, d: int) -> Interval:
        return Interval(self.lo + d, self.hi + d)

    def to_text(self) -> str:
        return f"[{self.lo},{self.hi}]"

    @classmethod
    def from_text(cls, text: str) -> Interval:
        m = _INTERVAL_RE.fullmatch(text.strip())
        if m is None:
            raise ParseError(f"expected '[lo,hi]', got {text.strip()!r}")
        return cls(int(m.group(1)), int(m.group(2)))


def r_k(a: int, b: int, k: int) -> bool:
    """a R^k b on a path: the vertices are at distance at most k."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return abs(a - b) <= k


def interval_gap(a: Interval, b: Interval) -> int:
    """Smallest distance between a vertex of a and a vertex of b."""
    if a.hi < b.lo:
        return b.lo - a.hi
    if b.hi < a.lo:
        return a.lo - b.hi
    return 0
