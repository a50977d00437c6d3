"""Type lifting and typed amalgamation.

lift_type builds h: L* -> L with prescribed endpoint types out of three
blocks P, S, Q; lift_through pulls an epimorphism with those endpoint types
back through h; amalgamate_typed combines the two with an end-to-end
anchored amalgam.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .amalgam import Amalgam, Anchors, amalgamate_anchored, amalgamate_search, _checked
from .errors import ConstructionInvariantError, PreconditionError, ShapeError
from .graphs import Interval, PathGraph
from .ltypes import LType, compute_type
from .maps import GraphMap, compose, is_epi


@dataclass(frozen=True)
class LiftLevel:
    """One application of the block construction over a base path L."""

    L: PathGraph
    t_minus: LType
    t_plus: LType
    h: GraphMap
    p: Interval
    s: Interval
    q: Interval
    # first-visit indices where t_minus jumps sides; ends of the P_j pieces
    marks: tuple[int, ...]
    p_ends: tuple[int, ...]
    # type of h at the copy of t_plus's start inside Q
    q_type: LType
    q_start: int


@dataclass(frozen=True)
class TypeLift:
    L: PathGraph
    t_minus: LType
    t_plus: LType
    Lstar: PathGraph
    h: GraphMap
    minus_end: int
    plus_end: int
    levels: tuple[LiftLevel, ...]


def _monotone(a: int, b: int) -> list[int]:
    step = 1 if b >= a else -1
    return list(range(a, b + step, step))


def _check_type(t: LType, L: PathGraph, name: str) -> None:
    if t.cod != L:
        raise ShapeError(f"{name} is a type over a path of size {t.cod.size}, expected {L.size}")
    if not t.is_maximal():
        raise ShapeError(f"{name} is not a maximal chain")


def _one_level(L: PathGraph, tm: LType, tp: LType) -> LiftLevel:
    n = L.size
    om, op = tm.order(), tp.order()
    pv = [om[0]]
    marks = [0]
    ends: list[int] = []
    for i in range(1, n):
        new = om[i]
        if abs(new - pv[-1]) <= 1:
            pv.append(new)
            continue
        # t_minus switches sides: sweep across what is covered so far
        marks.append(i)
        ends.append(len(pv) - 1)
        pv.extend(_monotone(pv[-1], new)[1:])
    marks.append(n)
    ends.append(len(pv) - 1)
    e1, e2 = pv[-1], op[-1]
    if e1 != e2:
        sv = _monotone(e1, e2)
    else:
        far = L.other_end(e1)
        sv = _monotone(e1, far) + _monotone(far, e1)[1:]
    qv = _monotone(e2, L.other_end(e2))
    np_, ns = len(pv), len(sv)
    Lstar = PathGraph(np_ + ns + n)
    h = GraphMap(Lstar, L, pv + sv + qv)
    q0 = np_ + ns
    order = [q0 + abs(v - e2) for v in op] + list(range(q0 - 1, -1, -1))
    q_type = LType.from_order(Lstar.size, order)
    lev = LiftLevel(
        L=L,
        t_minus=tm,
        t_plus=tp,
        h=h,
        p=Interval(0, np_ - 1),
        s=Interval(np_, np_ + ns - 1),
        q=Interval(q0, q0 + n - 1),
        marks=tuple(marks),
        p_ends=tuple(ends),
        q_type=q_type,
        q_start=q0 + abs(op[0] - e2),
    )
    if not is_epi(h) or compute_type(h, 0) != tm:
        raise ConstructionInvariantError("block construction broke the minus type")
    return lev


@lru_cache(maxsize=4096)
def _lift_cached(L: PathGraph, tm: LType, tp: LType) -> TypeLift:
    n = L.size
    if n == 1:
        one = PathGraph(1)
        return TypeLift(L, tm, tp, one, GraphMap.constant(1, 0, 1), 0, 0, ())
    lev1 = _one_level(L, tm, tp)
    if L.is_endpoint(tp.start):
        out = TypeLift(L, tm, tp, lev1.h.dom, lev1.h, 0, lev1.q_start, (lev1,))
    else:
        # the plus type sits inside Q; lift once more so it lands on an end
        L1 = lev1.h.dom
        lev2 = _one_level(L1, lev1.q_type, LType.endpoint(L1.size, 0))
        H = compose(lev1.h, lev2.h)
        out = TypeLift(L, tm, tp, H.dom, H, lev2.q_start, 0, (lev1, lev2))
    if compute_type(out.h, out.minus_end) != tm or compute_type(out.h, out.plus_end) != tp:
        raise ConstructionInvariantError("lifted map has the wrong endpoint types")
    if not out.Lstar.is_endpoint(out.minus_end) or not out.Lstar.is_endpoint(out.plus_end):
        raise ConstructionInvariantError("lifted types do not sit at endpoints")
    return out


def lift_type(L: PathGraph, t_minus: LType, t_plus: LType) -> TypeLift:
    """h: L* -> L with type t_minus at one end of L* and t_plus at the other."""
    _check_type(t_minus, L, "t_minus")
    _check_type(t_plus, L, "t_plus")
    return _lift_cached(L, t_minus, t_plus)


def _square(F: np.ndarray, H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """End-to-end anchored amalgam of two walks with the same end values."""
    lo = int(min(F.min(), H.min()))
    hi = int(max(F.max(), H.max()))
    cod = PathGraph(hi - lo + 1)
    fm = GraphMap(PathGraph(F.shape[0]), cod, F - lo)
    hm = GraphMap(PathGraph(H.shape[0]), cod, H - lo)
    am = amalgamate_anchored(fm, hm, Anchors(0, 0, F.shape[0] - 1, H.shape[0] - 1))
    return am.g.vals, am.gp.vals


def _segment(a: int, b: int) -> np.ndarray:
    """Enumeration positions from a to b inclusive, in either direction."""
    step = 1 if b >= a else -1
    return np.arange(a, b + step, step, dtype=np.int64)


def _through_level(lev: LiftLevel, f: GraphMap, a_minus: int, a_plus: int) -> tuple[np.ndarray, np.ndarray]:
    """Walk (M-vertex, L*-vertex) from (a_minus, 0) to (a_plus, q_start)."""
    M, L = f.dom, lev.L
    n = L.size
    idx = np.arange(M.size, dtype=np.int64)
    if a_minus != 0:
        idx = idx[::-1].copy()
    w = f.vals[idx]
    om = lev.t_minus.order()
    hv = lev.h.vals
    pieces: list[tuple[np.ndarray, np.ndarray]] = []

    def add(xs: np.ndarray, ys: np.ndarray) -> None:
        if pieces and pieces[-1][0][-1] == xs[0] and pieces[-1][1][-1] == ys[0]:
            xs, ys = xs[1:], ys[1:]
        if xs.shape[0]:
            pieces.append((xs, ys))

    # U: follow the P pieces, one end-anchored amalgam per piece
    j0 = len(lev.marks) - 1
    ks = [0]
    for j in range(1, j0 + 1):
        target = om[lev.marks[j] - 1]
        ks.append(int(np.flatnonzero(w == target)[0]))
    for j in range(j0):
        seg = _segment(ks[j], ks[j + 1])
        lo = 0 if j == 0 else lev.p_ends[j - 1]
        lseg = _segment(lo, lev.p_ends[j])
        gx, gy = _square(w[seg], hv[lseg])
        add(seg[gx], lseg[gy])
    # V: the last stretch from a_plus that first covers L, copied into Q
    e2 = lev.t_plus.order()[-1]
    rw = w[::-1]
    full = (np.minimum.accumulate(rw) == 0) & (np.maximum.accumulate(rw) == n - 1)
    jv = M.size - 1 - int(np.flatnonzero(full)[0])
    vpos = np.arange(jv, M.size, dtype=np.int64)
    q0 = lev.q.lo
    vstar = q0 + np.abs(w[vpos] - e2)
    # W: bridge from the end of U to the start of V across S
    kw = ks[j0]
    e1 = int(w[kw])
    if e1 != e2:
        seg = _segment(kw, jv)
        sseg = np.arange(lev.s.lo, lev.s.hi + 1, dtype=np.int64)
        gx, gy = _square(w[seg], hv[sseg])
        add(seg[gx], sseg[gy])
    else:
        far = L.other_end(e1)
        mid = int(np.flatnonzero(w == far)[0])
        for a, b, s_lo, s_hi in ((kw, mid, lev.s.lo, lev.s.lo + n - 1), (mid, jv, lev.s.lo + n - 1, lev.s.hi)):
            seg = _segment(a, b)
            sseg = np.arange(s_lo, s_hi + 1, dtype=np.int64)
            gx, gy = _square(w[seg], hv[sseg])
            add(seg[gx], sseg[gy])
    add(vpos, vstar)
    xs = np.concatenate([p[0] for p in pieces])
    ys = np.concatenate([p[1] for p in pieces])
    return idx[xs], ys


def lift_through(lift: TypeLift, f: GraphMap, a_minus: int, a_plus: int) -> tuple[PathGraph, GraphMap, GraphMap]:
    """(M*, g, f*) with f∘g == h∘f*.

    a_minus and a_plus are the endpoints of M carrying the types t_minus and
    t_plus. Index 0 of M* goes to (a_minus, minus_end), the last index to
    (a_plus, plus_end).
    """
    M = f.dom
    if f.cod != lift.L:
        raise PreconditionError("f must map onto the base path of the lift")
    if not is_epi(f):
        raise PreconditionError("f is not an epimorphism")
    if not M.is_endpoint(a_minus) or not M.is_endpoint(a_plus) or (M.size > 1 and a_minus == a_plus):
        raise PreconditionError("a_minus, a_plus must be the two endpoints of M")
    if compute_type(f, a_minus) != lift.t_minus or compute_type(f, a_plus) != lift.t_plus:
        raise PreconditionError("the endpoint types of f differ from the lifted types")
    if lift.L.size == 1:
        walk = np.arange(M.size, dtype=np.int64)
        if a_minus != 0:
            walk = walk[::-1].copy()
        Ms = PathGraph(M.size)
        return Ms, GraphMap(Ms, M, walk), GraphMap.constant(M.size, 0, 1)
    xs, ys = _through_level(lift.levels[0], f, a_minus, a_plus)
    if len(lift.levels) == 2:
        L1 = lift.levels[0].h.dom
        f1 = GraphMap(PathGraph(xs.shape[0]), L1, ys)
        xs2, ys2 = _through_level(lift.levels[1], f1, f1.dom.size - 1, 0)
        xs, ys = xs[xs2][::-1].copy(), ys2[::-1].copy()
    Ms = PathGraph(int(xs.shape[0]))
    g = GraphMap(Ms, M, xs)
    fs = GraphMap(Ms, lift.Lstar, ys)
    if not np.array_equal(f.vals[g.vals], lift.h.vals[fs.vals]) or not is_epi(g) or not is_epi(fs):
        raise ConstructionInvariantError("lift_through produced a non-commuting square")
    if g[0] != a_minus or g[Ms.size - 1] != a_plus or fs[0] != lift.minus_end or fs[Ms.size - 1] != lift.plus_end:
        raise ConstructionInvariantError("lift_through endpoints misplaced")
    return Ms, g, fs


def _loop_to_end(M: PathGraph, start: int, stop: int) -> np.ndarray:
    """Walk from start to the far end of M and back to stop."""
    far = M.other_end(start) if M.size > 1 else start
    out = _segment(start, far)
    if stop != far:
        out = np.concatenate((out, _segment(far, stop)[1:]))
    return out


def amalgamate_typed(
    f: GraphMap,
    fp: GraphMap,
    m_minus: int,
    mp_minus: int,
    mode: str = "two_endpoints",
    m_plus: int | None = None,
    mp_plus: int | None = None,
    method: str = "lift",
) -> Amalgam:
    """Amalgam of f and fp anchored at endpoints whose types agree.

    mode "two_endpoints" anchors both ends (default plus anchors: the other
    endpoints); "one_endpoint" anchors only the minus ends. method "lift"
    runs the type-lifting pipeline, "search" a direct fiber-product search.
    """
    if f.cod != fp.cod:
        raise PreconditionError("f and fp must share a codomain")
    if not is_epi(f) or not is_epi(fp):
        raise PreconditionError("f and fp must be epimorphisms")
    M, Mp, L = f.dom, fp.dom, f.cod
    for v, G in ((m_minus, M), (mp_minus, Mp)):
        if not G.is_endpoint(v):
            raise PreconditionError(f"{v} is not an endpoint")
    tm = compute_type(f, m_minus)
    if compute_type(fp, mp_minus) != tm:
        raise PreconditionError("the types at the minus endpoints differ")
    if mode == "two_endpoints":
        m_plus = (M.size - 1 - m_minus) if m_plus is None else m_plus
        mp_plus = (Mp.size - 1 - mp_minus) if mp_plus is None else mp_plus
        anchors = Anchors(m_minus, mp_minus, m_plus, mp_plus)
        if not M.is_endpoint(m_plus) or not Mp.is_endpoint(mp_plus):
            raise PreconditionError("plus anchors must be endpoints")
        if (M.size > 1 and m_plus == m_minus) or (Mp.size > 1 and mp_plus == mp_minus):
            raise PreconditionError("plus anchors must be the other endpoints")
        tp = compute_type(f, m_plus)
        if compute_type(fp, mp_plus) != tp:
            raise PreconditionError("the types at the plus endpoints differ")
        if method == "search" or L.size == 1:
            return amalgamate_search(f, fp, anchors)
        lift = lift_type(L, tm, tp)
        _, g1, f1 = lift_through(lift, f, m_minus, m_plus)
        _, g2, f2 = lift_through(lift, fp, mp_minus, mp_plus)
        am = amalgamate_anchored(f1, f2, Anchors(0, 0, f1.dom.size - 1, f2.dom.size - 1))
        out = Amalgam(am.O, compose(g1, am.g), compose(g2, am.gp))
        return _checked(f, fp, out, anchors, "amalgamate_typed")
    if mode == "one_endpoint":
        anchors = Anchors(m_minus, mp_minus)
        if method == "search" or L.size == 1:
            return amalgamate_search(f, fp, anchors)
        # route both maps through a common endpoint e of L
        e = tm.order()[-1]
        far = M.other_end(m_minus) if M.size > 1 else m_minus
        farp = Mp.other_end(mp_minus) if Mp.size > 1 else mp_minus
        pre = np.flatnonzero(f.vals == e)
        prep = np.flatnonzero(fp.vals == e)
        stop = int(pre[np.argmin(np.abs(pre - far))])
        stopp = int(prep[np.argmin(np.abs(prep - farp))])
        a = _loop_to_end(M, m_minus, stop)
        ap = _loop_to_end(Mp, mp_minus, stopp)
        alpha = GraphMap(PathGraph(a.shape[0]), M, a)
        alphap = GraphMap(PathGraph(ap.shape[0]), Mp, ap)
        inner = amalgamate_typed(compose(f, alpha), compose(fp, alphap), 0, 0, "two_endpoints")
        out = Amalgam(inner.O, compose(alpha, inner.g), compose(alphap, inner.gp))
        return _checked(f, fp, out, anchors, "amalgamate_typed")
    raise ValueError(f"unknown mode {mode!r}")
