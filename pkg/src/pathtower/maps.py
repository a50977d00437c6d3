"""Maps between path graphs.

Values are stored as read-only int64 numpy arrays because tower levels can
reach millions of vertices.
"""
from __future__ import annotations

import re
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CompositionError, ParseError, PreconditionError, ShapeError
from .graphs import Interval, PathGraph



def _as_vals(vals: Iterable[int] | np.ndarray) -> np.ndarray:
    arr = np.array(vals, dtype=np.int64, copy=True)
    if arr.ndim != 1:
        raise ShapeError("map values must be one-dimensional")
    arr.setflags(write=False)
    return arr


class GraphMap:
    """A function dom -> cod given by its value list."""

    __slots__ = ("dom", "cod", "vals", "_hash")

    def __init__(self, dom: PathGraph, cod: PathGraph, vals: Iterable[int] | np.ndarray) -> None:
        arr = vals if isinstance(vals, np.ndarray) and vals.dtype == np.int64 and not vals.flags.writeable else _as_vals(vals)
        if arr.shape[0] != dom.size:
            raise ShapeError(f"map has {arr.shape[0]} values but domain size {dom.size}")
        if arr.shape[0] and (int(arr.min()) < 0 or int(arr.max()) >= cod.size):
            raise ShapeError(f"map values fall outside codomain of size {cod.size}")
        self.dom = dom
        self.cod = cod
        self.vals = arr
        self._hash: int | None = None

    @classmethod
    def of(cls, vals: Sequence[int] | np.ndarray, cod: int | None = None) -> GraphMap:
        """Build from a value list; cod defaults to max(vals)+1."""
        arr = _as_vals(vals)
        c = int(arr.max()) + 1 if cod is None else cod
        return cls(PathGraph(int(arr.shape[0])), PathGraph(c), arr)

    @classmethod
    def identity(cls, n: int) -> GraphMap:
        return cls(PathGraph(n), PathGraph(n), np.arange(n, dtype=np.int64))

    @classmethod
    def constant(cls, n: int, value: int = 0, cod: int | None = None) -> GraphMap:
        c = value + 1 if cod is None else cod
        return cls(PathGraph(n), PathGraph(c), np.full(n, value, dtype=np.int64))

    def __len__(self) -> int:
        return self.dom.size

    def __getitem__(self, i: int) -> int:
        return int(self.vals[i])

    def __call__(self, i: int) -> int:
        return int(self.vals[i])

    def tolist(self) -> list[int]:
        return self.vals.tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphMap):
            return NotImplemented
        return self.dom == other.dom and self.cod == other.cod and np.array_equal(self.vals, other.vals)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.dom.size, self.cod.size, self.vals.tobytes()))
        return self._hash

    def __repr__(self) -> str:
        if self.dom.size <= 20:
            body = self.tolist()
        else:
            body = f"[{self.vals[0]}, ..., {self.vals[-1]}]"
        return f"GraphMap(dom={self.dom.size}, cod={self.cod.size}, vals={body})"

    def reversed_domain(self) -> GraphMap:
        """Same map read from the other end of the domain."""
        return GraphMap(self.dom, self.cod, self.vals[::-1].copy())

    def reflected_codomain(self) -> GraphMap:
        return GraphMap(self.dom, self.cod, (self.cod.size - 1 - self.vals))

    def restrict(self, M: Interval) -> GraphMap:
        """Restriction to M, re-indexed so M.lo becomes 0. Codomain kept."""
        M.check_in(self.dom)
        return GraphMap(PathGraph(M.size), self.cod, self.vals[M.lo : M.hi + 1].copy())

    def image(self, M: Interval | None = None) -> Interval:
        v = self.vals if M is None else self.vals[M.lo : M.hi + 1]
        return Interval(int(v.min()), int(v.max()))

    def with_codomain(self, cod: PathGraph) -> GraphMap:
        return GraphMap(self.dom, cod, self.vals)

    def to_text(self) -> str:
        return f"map dom={self.dom.size} cod={self.cod.size} vals=" + format_vals(self.vals)

    def text_chunks(self) -> Iterator[str]:
        """to_text() in pieces, for writing large maps without one huge string."""
        yield f"map dom={self.dom.size} cod={self.cod.size} vals="
        yield from _val_chunks(self.vals)

    @classmethod
    def from_text(cls, text: str) -> GraphMap:
        text = text.strip()
        head, sep, body = text.partition(" vals=")
        m = _HEAD_RE.fullmatch(head)
        if m is None or not sep:
            raise ParseError("expected 'map dom=<n> cod=<m> vals=<v0>,...'")
        n, c = int(m.group(1)), int(m.group(2))
        vals = parse_vals(body, n)
        try:
            return cls(PathGraph(n), PathGraph(c), vals)
        except ShapeError as exc:
            raise ParseError(str(exc)) from None


_HEAD_RE = re.compile(r"map dom=(\d+) cod=(\d+)")
_CHUNK = 1 << 20
_NOT_VALS = str.maketrans("", "", "0123456789,")


def _format_block(v: np.ndarray) -> str:
    """Decimal digits of nonnegative v joined by commas, built as one byte buffer."""
    if v.shape[0] == 0:
        return ""
    ndig = np.ones(v.shape[0], dtype=np.int64)
    p = 10
    top = int(v.max())
    while p <= top:
        ndig += v >= p
        p *= 10
    ends = np.cumsum(ndig + 1) - 2  # index of the last digit of each value
    buf = np.full(int(ends[-1]) + 1, ord(","), dtype=np.uint8)
    rest = v.copy()
    for j in range(int(ndig.max())):
        live = ndig > j
        buf[ends[live] - j] = (rest[live] % 10 + 48).astype(np.uint8)
        rest //= 10
    return buf.tobytes().decode("ascii")


def _val_chunks(vals: np.ndarray) -> Iterator[str]:
    for s in range(0, vals.shape[0], _CHUNK):
        piece = _format_block(vals[s : s + _CHUNK])
        yield piece if s == 0 else "," + piece


def format_vals(vals: np.ndarray) -> str:
    return "".join(_val_chunks(vals))


def parse_vals(body: str, n: int | None = None) -> np.ndarray:
    """Parse '<v0>,<v1>,...' of nonnegative integers."""
    if body == "":
        raise ParseError("empty value list")
    if body.translate(_NOT_VALS):
        raise ParseError("value list may only contain digits and commas")
    if body[0] == "," or body[-1] == "," or ",," in body:
        raise ParseError("bad value list: empty entry")
    count = body.count(",") + 1
    if n is not None and count != n:
        raise ParseError(f"map has {count} values but domain size {n}")
    vals = np.fromstring(body, dtype=np.int64, sep=",") if count > 64 else np.array(body.split(","), dtype=np.int64)
    if vals.shape[0] != count:
        raise ParseError("bad value list")
    return vals


def is_lipschitz(m: GraphMap) -> bool:
    if m.dom.size < 2:
        return True
    return int(np.abs(np.diff(m.vals)).max()) <= 1


def is_surjective(m: GraphMap) -> bool:
    if int(m.vals.min()) != 0 or int(m.vals.max()) != m.cod.size - 1:
        return False
    # a 1-Lipschitz map hitting both ends hits everything; otherwise count
    if is_lipschitz(m):
        return True
    return np.unique(m.vals).shape[0] == m.cod.size


def is_epi(m: GraphMap) -> bool:
    """Surjective and edge preserving."""
    return is_lipschitz(m) and is_surjective(m)


def require_epi(m: GraphMap, what: str = "map") -> None:
    if not is_epi(m):
        raise PreconditionError(f"{what} is not an epimorphism")


def compose(outer: GraphMap, inner: GraphMap) -> GraphMap:
    """outer after inner."""
    if inner.cod != outer.dom:
        raise CompositionError(
            f"cannot compose: inner codomain has size {inner.cod.size}, outer domain has size {outer.dom.size}"
        )
    return GraphMap(inner.dom, outer.cod, outer.vals[inner.vals])


def compose_all(*maps: GraphMap) -> GraphMap:
    """compose_all(a, b, c) == a∘b∘c."""
    if not maps:
        raise ValueError("need at least one map")
    out = maps[-1]
    for m in reversed(maps[:-1]):
        out = compose(m, out)
    return out


def _same_shape(f: GraphMap, g: GraphMap) -> None:
    if f.dom != g.dom or f.cod != g.cod:
        raise ShapeError("maps must share domain and codomain")


def max_distance(f: GraphMap, g: GraphMap) -> int:
    _same_shape(f, g)
    return int(np.abs(f.vals - g.vals).max())


def r_close(f: GraphMap, g: GraphMap, k: int) -> bool:
    """f R^k g pointwise."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return max_distance(f, g) <= k


def value_runs(vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start indices and lengths of maximal constant runs."""
    n = vals.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    breaks = np.flatnonzero(vals[1:] != vals[:-1]) + 1
    starts = np.concatenate(([0], breaks))
    ends = np.concatenate((breaks, [n]))
    return starts, ends - starts


def fiber_components(m: GraphMap, c: int) -> list[Interval]:
    """Maximal runs of domain vertices sent to c, left to right."""
    if not (0 <= c < m.cod.size):
        raise ShapeError(f"vertex {c} not in codomain")
    starts, lens = value_runs(m.vals)
    sel = m.vals[starts] == c
    return [Interval(int(s), int(s + l - 1)) for s, l in zip(starts[sel], lens[sel])]


def min_fiber_component(m: GraphMap) -> int:
    """Smallest fiber-component size over all attained values."""
    _, lens = value_runs(m.vals)
    return int(lens.min())


def repetition(n: int, s: int) -> GraphMap:
    """The s-fold repetition epimorphism from a path of n*s vertices onto n."""
    if s < 1:
        raise ValueError("repetition factor must be >= 1")
    return GraphMap(PathGraph(n * s), PathGraph(n), np.repeat(np.arange(n, dtype=np.int64), s))


def stretch(m: GraphMap, s: int) -> tuple[GraphMap, GraphMap]:
    """(m∘rep, rep) with rep the s-fold repetition onto m.dom."""
    if s < 1:
        raise ValueError("stretch factor must be >= 1")
    sub = repetition(m.dom.size, s)
    return compose(m, sub), sub


def contracts_rk(m: GraphMap, k: int) -> bool:
    """a R^k b implies m(a) R m(b), over all pairs a, b."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    v = m.vals
    n = v.shape[0]
    for d in range(1, min(k, n - 1) + 1):
        if int(np.abs(v[d:] - v[:-d]).max()) > 1:
            return False
    return True


def walk_map(points: Sequence[int] | np.ndarray, dom_cod: PathGraph) -> GraphMap:
    """A walk in dom_cod, read as a map from a path of len(points) vertices."""
    arr = _as_vals(points)
    return GraphMap(PathGraph(int(arr.shape[0])), dom_cod, arr)


def concat_walks(parts: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.asarray(p, dtype=np.int64) for p in parts])


@lru_cache(maxsize=None)
def _epi_tuples(n: int, m: int) -> tuple[tuple[int, ...], ...]:
    out: list[tuple[int, ...]] = []
    if n < 1 or m < 1:
        return ()

    def rec(prefix: list[int], lo: int, hi: int) -> None:
        if len(prefix) == n:
            if lo == 0 and hi == m - 1:
                out.append(tuple(prefix))
            return
        left = n - len(prefix)
        last = prefix[-1]
        for nxt in (last - 1, last, last + 1):
            if 0 <= nxt < m:
                nlo, nhi = min(lo, nxt), max(hi, nxt)
                # prune when the remaining steps cannot reach both ends
                need = 0
                if nlo > 0 and nhi < m - 1:
                    need = min(nxt - 0 + (m - 1), (m - 1 - nxt) + (m - 1))
                elif nlo > 0:
                    need = nxt
                elif nhi < m - 1:
                    need = m - 1 - nxt
                if need <= left - 1:
                    prefix.append(nxt)
                    rec(prefix, nlo, nhi)
                    prefix.pop()

    for start in range(m):
        rec([start], start, start)
    return tuple(out)


def enumerate_epis(n: int, m: int) -> Iterator[GraphMap]:
    """All epimorphisms from the n-vertex path onto the m-vertex path."""
    dom, cod = PathGraph(n), PathGraph(m)
    for t in _epi_tuples(n, m):
        yield GraphMap(dom, cod, t)


def epi_array(n: int, m: int) -> np.ndarray:
    """All epimorphisms n -> m as rows of an int64 array."""
    t = _epi_tuples(n, m)
    if not t:
        return np.zeros((0, n), dtype=np.int64)
    return np.array(t, dtype=np.int64)
