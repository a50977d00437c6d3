"""Finite towers J_0 <- J_1 <- ... <- J_N of paths with bonding epimorphisms."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .amalgam import base_amalgamate
from .errors import ConstructionInvariantError, ParseError, PreconditionError, ShapeError
from .graphs import PathGraph
from .maps import GraphMap, compose, contracts_rk, is_epi, repetition, require_epi

_TOWER_RE = re.compile(r"tower levels=(\d+)")


@dataclass(frozen=True)
class AbsorbRecord:
    """Witness that f: A -> J_m factors the bonds: f∘g == pi(m, n)."""

    m: int
    n: int
    f: GraphMap
    g: GraphMap


@dataclass(frozen=True)
class Tower:
    levels: tuple[PathGraph, ...]
    bonds: tuple[GraphMap, ...]
    records: tuple[AbsorbRecord, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if not self.levels:
            raise ShapeError("a tower needs at least one level")
        if len(self.bonds) != len(self.levels) - 1:
            raise ShapeError("need exactly one bond between consecutive levels")
        for i, b in enumerate(self.bonds):
            if b.dom != self.levels[i + 1] or b.cod != self.levels[i]:
                raise ShapeError(f"bond {i} does not map level {i + 1} to level {i}")
            require_epi(b, f"bond {i}")

    @classmethod
    def single(cls, size: int) -> Tower:
        return cls((PathGraph(size),), ())

    @classmethod
    def from_bonds(cls, bonds: list[GraphMap]) -> Tower:
        if not bonds:
            raise ShapeError("from_bonds needs at least one bond")
        levels = [bonds[0].cod] + [b.dom for b in bonds]
        return cls(tuple(levels), tuple(bonds))

    @property
    def top(self) -> int:
        return len(self.levels) - 1

    def pi(self, i: int, j: int) -> GraphMap:
        """The composite bonds[i] ∘ ... ∘ bonds[j-1] from level j to level i."""
        if not (0 <= i <= j <= self.top):
            raise PreconditionError(f"need 0 <= i <= j <= {self.top}, got i={i}, j={j}")
        v = np.arange(self.levels[j].size, dtype=np.int64)
        for t in range(j - 1, i - 1, -1):
            v = self.bonds[t].vals[v]
        return GraphMap(self.levels[j], self.levels[i], v)

    def extend(self, bond: GraphMap, record: AbsorbRecord | None = None) -> Tower:
        recs = self.records + ((record,) if record is not None else ())
        return Tower(self.levels + (bond.dom,), self.bonds + (bond,), recs)

    def to_text(self) -> str:
        lines = [f"tower levels={len(self.levels)}", self.levels[0].to_text()]
        lines += [b.to_text() for b in self.bonds]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_lines(cls, lines: list[str], first_line: int = 1) -> Tower:
        if not lines:
            raise ParseError("empty tower block", first_line)
        m = _TOWER_RE.fullmatch(lines[0].strip())
        if m is None:
            raise ParseError("expected 'tower levels=<n>'", first_line, 1)
        n = int(m.group(1))
        if n < 1:
            raise ParseError("a tower needs at least one level", first_line, 14)
        if len(lines) != n + 1:
            raise ParseError(f"tower with {n} levels needs {n + 1} lines, got {len(lines)}", first_line)
        try:
            base = PathGraph.from_text(lines[1])
        except ParseError as exc:
            raise ParseError(str(exc), first_line + 1, 1) from None
        bonds = []
        for k, line in enumerate(lines[2:]):
            try:
                bonds.append(GraphMap.from_text(line))
            except ParseError as exc:
                raise ParseError(str(exc), first_line + 2 + k, 1) from None
        levels = [base] + [b.dom for b in bonds]
        try:
            return cls(tuple(levels), tuple(bonds))
        except (ShapeError, PreconditionError) as exc:
            raise ParseError(str(exc), first_line) from None

    @classmethod
    def from_text(cls, text: str) -> Tower:
        return cls.from_lines([ln for ln in text.splitlines() if ln.strip()])


def absorb(t: Tower, m: int, f: GraphMap) -> tuple[Tower, AbsorbRecord]:
    """Extend t so that f: A -> J_m factors some pi(m, n) as f∘g.

    The identity needs no new level. Onto the top level, A itself becomes
    the new level with bond f. Otherwise f is amalgamated against pi(m, N)
    and the amalgam becomes the new top level.
    """
    if not (0 <= m <= t.top):
        raise PreconditionError(f"level {m} is not in the tower")
    if f.cod != t.levels[m]:
        raise ShapeError("f must land in the chosen level")
    require_epi(f, "f")
    N = t.top
    if f == GraphMap.identity(f.dom.size):
        rec = AbsorbRecord(m, N, f, t.pi(m, N))
        return Tower(t.levels, t.bonds, t.records + (rec,)), rec
    if m == N:
        rec = AbsorbRecord(m, N + 1, f, GraphMap.identity(f.dom.size))
        return t.extend(f, rec), rec
    am = base_amalgamate(f, t.pi(m, N))
    rec = AbsorbRecord(m, N + 1, f, am.g)
    out = t.extend(am.gp, rec)
    if compose(f, am.g) != out.pi(m, N + 1):
        raise ConstructionInvariantError("absorb produced a non-commuting witness")
    return out, rec


def check_record(t: Tower, rec: AbsorbRecord) -> bool:
    if rec.n > t.top:
        return False
    return compose(rec.f, rec.g) == t.pi(rec.m, rec.n)


def hyple_search(t: Tower, base: int, k: int) -> tuple[int, GraphMap] | None:
    """Least level j >= base whose pi(base, j) sends R^k-close pairs to R-close pairs."""
    if k < 1:
        raise PreconditionError("k must be >= 1")
    if not (0 <= base <= t.top):
        raise PreconditionError(f"level {base} is not in the tower")
    v = np.arange(t.levels[base].size, dtype=np.int64)
    for j in range(base, t.top + 1):
        if j > base:
            v = v[t.bonds[j - 1].vals]
        cand = GraphMap(t.levels[j], t.levels[base], v)
        if contracts_rk(cand, k):
            return j, cand
    return None


def extend_for_contraction(t: Tower, base: int, k: int) -> tuple[Tower, int, GraphMap]:
    """hyple_search, appending one k-fold repetition bond when no level qualifies."""
    hit = hyple_search(t, base, k)
    if hit is not None:
        return t, hit[0], hit[1]
    out = t.extend(repetition(t.levels[-1].size, k))
    j = out.top
    m = out.pi(base, j)
    if not contracts_rk(m, k):
        raise ConstructionInvariantError("a k-fold repetition bond failed to contract R^k")
    return out, j, m


def random_epi(rng: np.random.Generator, n: int, m: int) -> GraphMap:
    """A random epimorphism from the n-vertex path onto the m-vertex path.

    Starts from the ramp 0..m-1 and inserts stalls and one-step excursions.
    """
    if n < m:
        raise PreconditionError("an epimorphism needs n >= m")
    vals = list(range(m))
    if rng.random() < 0.5:
        vals.reverse()
    while len(vals) < n:
        i = int(rng.integers(len(vals)))
        v = vals[i]
        room = n - len(vals)
        opts = [w for w in (v - 1, v + 1) if 0 <= w < m]
        if room >= 2 and opts and rng.random() < 0.5:
            w = opts[int(rng.integers(len(opts)))]
            vals[i + 1 : i + 1] = [w, v]
        else:
            vals.insert(i + 1, v)
    out = GraphMap(PathGraph(n), PathGraph(m), vals)
    if not is_epi(out):
        raise ConstructionInvariantError("random_epi produced a non-epimorphism")
    return out


def random_tower(rng: np.random.Generator, sizes: list[int]) -> Tower:
    """Tower with the given level sizes (nondecreasing) and random bonds."""
    if not sizes:
        raise PreconditionError("sizes must be nonempty")
    if len(sizes) == 1:
        return Tower.single(sizes[0])
    return Tower.from_bonds([random_epi(rng, sizes[i + 1], sizes[i]) for i in range(len(sizes) - 1)])
