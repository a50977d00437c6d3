"""Endpoint types: the chain of images of intervals growing from an endpoint."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ParseError, PreconditionError, ShapeError
from .graphs import Interval, PathGraph
from .maps import GraphMap

_TYPE_RE = re.compile(r"type cod=(\d+) chain=(.*)")


@dataclass(frozen=True)
class LType:
    """A strictly increasing chain of intervals of cod, from a point to all of cod."""

    cod: PathGraph
    chain: tuple[Interval, ...]

    def __post_init__(self) -> None:
        ch = tuple(self.chain)
        object.__setattr__(self, "chain", ch)
        if not ch:
            raise ShapeError("a type needs at least one interval")
        if ch[0].size != 1:
            raise ShapeError("the first interval of a type must be a single vertex")
        if ch[-1] != self.cod.whole():
            raise ShapeError("the last interval of a type must be the whole codomain")
        for a, b in zip(ch, ch[1:]):
            if not a.issubset(b) or a == b:
                raise ShapeError(f"chain not strictly increasing at {a.to_text()} -> {b.to_text()}")

    @property
    def start(self) -> int:
        return self.chain[0].lo

    def is_maximal(self) -> bool:
        return len(self.chain) == self.cod.size

    def order(self) -> list[int]:
        """Vertices of cod in the order the chain adds them (maximal chains only)."""
        if not self.is_maximal():
            raise ShapeError("order() needs a maximal chain")
        out = [self.chain[0].lo]
        for a, b in zip(self.chain, self.chain[1:]):
            out.append(b.lo if b.lo < a.lo else b.hi)
        return out

    @classmethod
    def from_order(cls, size: int, order: Sequence[int]) -> LType:
        lo = hi = int(order[0])
        chain = [Interval(lo, hi)]
        for v in order[1:]:
            v = int(v)
            if v == lo - 1:
                lo = v
            elif v == hi + 1:
                hi = v
            else:
                raise ShapeError(f"vertex {v} does not extend [{lo},{hi}] by one")
            chain.append(Interval(lo, hi))
        return cls(PathGraph(size), tuple(chain))

    @classmethod
    def endpoint(cls, size: int, end: int) -> LType:
        """The unique type starting at an endpoint of cod."""
        if end == 0:
            return cls.from_order(size, range(size))
        if end == size - 1:
            return cls.from_order(size, range(size - 1, -1, -1))
        raise ShapeError(f"{end} is not an endpoint")

    def to_text(self) -> str:
        return f"type cod={self.cod.size} chain=" + ";".join(iv.to_text() for iv in self.chain)

    @classmethod
    def from_text(cls, text: str) -> LType:
        m = _TYPE_RE.fullmatch(text.strip())
        if m is None:
            raise ParseError("expected 'type cod=<n> chain=[lo,hi];...'")
        try:
            chain = tuple(Interval.from_text(p) for p in m.group(2).split(";"))
            return cls(PathGraph(int(m.group(1))), chain)
        except ShapeError as exc:
            raise ParseError(str(exc)) from None


def _walk_from(vals: np.ndarray, a: int, M: Interval) -> np.ndarray:
    if not M.is_endpoint(a):
        raise PreconditionError(f"{a} is not an endpoint of {M.to_text()}")
    seg = vals[M.lo : M.hi + 1]
    if a == M.hi and M.size > 1:
        seg = seg[::-1]
    return seg


def type_signature(vals: np.ndarray, a: int, M: Interval) -> np.ndarray:
    """The chain of compute_type as a (k, 2) array of (lo, hi) rows."""
    seg = _walk_from(vals, a, M)
    lo = np.minimum.accumulate(seg)
    hi = np.maximum.accumulate(seg)
    keep = np.ones(seg.shape[0], dtype=bool)
    keep[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    return np.stack((lo[keep], hi[keep]), axis=1)


def compute_type(f: GraphMap, a: int, M: Interval | None = None) -> LType:
    """Chain of f-images of the subintervals of M that contain the endpoint a."""
    if M is None:
        M = f.dom.whole()
    M.check_in(f.dom)
    sig = type_signature(f.vals, a, M)
    if sig[-1, 0] != 0 or sig[-1, 1] != f.cod.size - 1:
        raise PreconditionError(f"f does not map {M.to_text()} onto its codomain")
    return LType(f.cod, tuple(Interval(int(lo), int(hi)) for lo, hi in sig))


def enumerate_types(n: int) -> Iterator[LType]:
    """Every maximal type on the n-vertex path (2**(n-1) of them)."""

    def rec(order: list[int], lo: int, hi: int) -> Iterator[list[int]]:
        if len(order) == n:
            yield order
            return
        if lo > 0:
            yield from rec(order + [lo - 1], lo - 1, hi)
        if hi < n - 1:
            yield from rec(order + [hi + 1], lo, hi + 1)

    for s in range(n):
        for order in rec([s], s, s):
            yield LType.from_order(n, order)
