"""The four-step recursion building a decorated tower.

Level J_i of the construction (i >= -1) is stored at tower position i+1.
Each round k runs step_4k, step_4k1, step_4k2 and step_4k3 and produces
J_{4k+1} .. J_{4k+4} together with the decoration maps

    h_k: J_{4k} -> J_{4k-1}        hbullet_k: J_{4k+1} -> J_{4k}
    g_k: J_{4k+2} -> J_{4k+1}      f_k, fprime_k: J_{4k+3} -> J_{4k+2}

The step functions are context free: they take the two top levels with
their marked intervals and the two maps between them.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from .amalgam import Amalgam, amalgamate_aligned, base_amalgamate
from .errors import ConstructionInvariantError, ParseError, PreconditionError, ShapeError
from .graphs import Interval, PathGraph
from .ltypes import type_signature
from .maps import GraphMap, compose, is_epi, min_fiber_component, repetition
from .tower import Tower, random_epi

# every preimage component of a new bond has at least this many vertices
THICK = 3

DECO_NAMES = ("h", "hbullet", "g", "f", "fprime")


def _ar(a: int, b: int) -> np.ndarray:
    """a, a±1, ..., b inclusive."""
    step = 1 if b >= a else -1
    return np.arange(a, b + step, step, dtype=np.int64)


def _map(vals: np.ndarray, cod: PathGraph) -> GraphMap:
    vals = np.ascontiguousarray(vals, dtype=np.int64)
    return GraphMap(PathGraph(int(vals.shape[0])), cod, vals)


def _thicken(walk: np.ndarray, blocks: Sequence[Interval]) -> tuple[np.ndarray, list[Interval]]:
    t = np.repeat(walk, THICK)
    return t, [Interval(THICK * b.lo, THICK * b.hi + THICK - 1) for b in blocks]


def _consecutive(lengths: Sequence[int]) -> list[Interval]:
    out, pos = [], 0
    for n in lengths:
        out.append(Interval(pos, pos + n - 1))
        pos += n
    return out


def gaps(n: int, holes: Sequence[Interval]) -> list[Interval]:
    """Maximal intervals of the n-vertex path that miss every hole."""
    out, pos = [], 0
    for h in sorted(holes):
        if h.lo > pos:
            out.append(Interval(pos, h.lo - 1))
        pos = max(pos, h.hi + 1)
    if pos < n:
        out.append(Interval(pos, n - 1))
    return out


def agree_on(a: GraphMap, b: GraphMap, I: Interval) -> bool:
    return bool(np.array_equal(a.vals[I.lo : I.hi + 1], b.vals[I.lo : I.hi + 1]))


def maps_onto(m: GraphMap, I: Interval, target: Interval) -> bool:
    seg = m.vals[I.lo : I.hi + 1]
    return int(seg.min()) == target.lo and int(seg.max()) == target.hi


def ends_to_ends(m: GraphMap, I: Interval, target: Interval) -> bool:
    return target.is_endpoint(m[I.lo]) and target.is_endpoint(m[I.hi])


def same_type(a: GraphMap, b: GraphMap, x: int, C: Interval) -> bool:
    return bool(np.array_equal(type_signature(a.vals, x, C), type_signature(b.vals, x, C)))


def touching_ends(C: Interval, holes: Sequence[Interval]) -> list[int]:
    """Endpoints of C related to a vertex of some hole."""
    out = []
    for x in sorted({C.lo, C.hi}):
        if any(h.lo - 1 <= x <= h.hi + 1 for h in holes):
            out.append(x)
    return out


def _check_shape(m: GraphMap, dom: PathGraph, cod: PathGraph, name: str) -> None:
    if m.dom != dom or m.cod != cod:
        raise ShapeError(f"{name} must map a path of size {dom.size} onto one of size {cod.size}")
    if not is_epi(m):
        raise PreconditionError(f"{name} is not an epimorphism")


def _block(
    f: GraphMap, fp: GraphMap, C: Interval, anchor: int, two_sided: bool, onto: Interval | None = None
) -> Amalgam:
    """Anchored amalgam of f|C and fp|C, seen as maps onto `onto` (default:
    the whole codomain); walk index 0 sits at the anchor."""
    a, b = f.restrict(C), fp.restrict(C)
    if onto is not None:
        T = PathGraph(onto.size)
        a = GraphMap(a.dom, T, a.vals - onto.lo)
        b = GraphMap(b.dom, T, b.vals - onto.lo)
    return amalgamate_aligned(a, b, anchor - C.lo, two_sided)


def _placed(am: Amalgam, C: Interval, reverse: bool) -> tuple[np.ndarray, np.ndarray]:
    u = am.g.vals + C.lo
    v = am.gp.vals + C.lo
    if reverse:
        u, v = u[::-1], v[::-1]
    return u, v


def _fail(problems: list[str]) -> None:
    if problems:
        raise ConstructionInvariantError("; ".join(problems))


# ----------------------------------------------------------------------------
# step 4k


@dataclass(frozen=True)
class Step4k:
    J: PathGraph
    K: Interval
    C1: Interval
    C2: Interval
    pi: GraphMap
    hbullet: GraphMap


def _three_block_hyp(J: PathGraph, K: Interval, Jp: PathGraph, Kp: Interval, pi: GraphMap, h: GraphMap, hname: str):
    _check_shape(pi, Jp, J, "pi")
    _check_shape(h, Jp, J, hname)
    K.check_in(J)
    Kp.check_in(Jp)
    if not agree_on(pi, h, Kp):
        raise PreconditionError(f"pi and {hname} differ on K'", "1")
    if not maps_onto(pi, Kp, K) or not ends_to_ends(pi, Kp, K):
        raise PreconditionError("pi must map K' onto K sending endpoints to endpoints", "2")
    if Kp.lo == 0 or Kp.hi == Jp.size - 1:
        raise PreconditionError("J' minus K' must have two nonempty components", "3")
    C1, C2 = Interval(0, Kp.lo - 1), Interval(Kp.hi + 1, Jp.size - 1)
    for C in (C1, C2):
        if not maps_onto(pi, C, J.whole()) or not maps_onto(h, C, J.whole()):
            raise PreconditionError(f"pi and {hname} must map {C.to_text()} onto J", "4")
    for C, x in ((C1, C1.hi), (C2, C2.lo)):
        if not same_type(pi, h, x, C):
            raise PreconditionError(f"types of pi and {hname} at {x} differ", "5")
    return C1, C2


def step_4k(
    J: PathGraph, K: Interval, Jp: PathGraph, Kp: Interval, pi: GraphMap, h: GraphMap, triple: bool = True
) -> Step4k:
    """New level J'' with maps pi', hbullet onto J' such that h∘hbullet == pi∘pi'."""
    C1, C2 = _three_block_hyp(J, K, Jp, Kp, pi, h, "h")
    u1, v1 = _placed(_block(pi, h, C1, C1.hi, False), C1, True)
    u2, v2 = _placed(_block(pi, h, C2, C2.lo, False), C2, False)
    kk = _ar(Kp.lo, Kp.hi)
    up = np.concatenate((u1, kk, u2))
    vp = np.concatenate((v1, kk, v2))
    n1, nk, N = u1.shape[0], Kp.size, up.shape[0]
    # from K'' outwards each side first sweeps its own block, then the rest
    left = np.concatenate((_ar(N - 1, 0), np.arange(1, n1, dtype=np.int64)))
    mid = _ar(n1, n1 + nk - 1)
    right = np.concatenate((np.arange(n1 + nk, N, dtype=np.int64), np.arange(N - 2, -1, -1, dtype=np.int64)))
    walk = np.concatenate((left, mid, right))
    blocks = _consecutive([left.shape[0], nk, right.shape[0]])
    if triple:
        walk, blocks = _thicken(walk, blocks)
    Jpp = PathGraph(int(walk.shape[0]))
    res = Step4k(Jpp, blocks[1], blocks[0], blocks[2], GraphMap(Jpp, Jp, up[walk]), GraphMap(Jpp, Jp, vp[walk]))
    _fail(check_step_4k(Jp, Kp, pi, h, res, thick=triple))
    return res


def check_step_4k(Jp: PathGraph, Kp: Interval, pi: GraphMap, h: GraphMap, r: Step4k, thick: bool = True) -> list[str]:
    out = []
    if not (is_epi(r.pi) and is_epi(r.hbullet)):
        out.append("outputs must be epimorphisms")
        return out
    if compose(h, r.hbullet) != compose(pi, r.pi):
        out.append("⊞1: h∘h• != π∘π'")
    if [r.C1, r.K, r.C2] != _consecutive([r.C1.size, r.K.size, r.C2.size]) or r.C2.hi != r.J.size - 1:
        out.append("⊞2: J'' is not C1'' K'' C2''")
    if not agree_on(r.pi, r.hbullet, r.K) or not maps_onto(r.pi, r.K, Kp) or not ends_to_ends(r.pi, r.K, Kp):
        out.append("⊞3: K'' condition")
    for C in (r.C1, r.C2):
        if not maps_onto(r.pi, C, Jp.whole()) or not maps_onto(r.hbullet, C, Jp.whole()):
            out.append(f"⊞4: {C.to_text()} not onto J'")
    if not same_type(r.hbullet, r.pi, r.C1.hi, r.C1) or not same_type(r.hbullet, r.pi, r.C2.lo, r.C2):
        out.append("⊞5: boundary types differ")
    if thick and min_fiber_component(r.pi) < THICK:
        out.append("⊞6: a preimage component of π' is too short")
    return out


# ----------------------------------------------------------------------------
# step 4k+1


@dataclass(frozen=True)
class Step4k1:
    J: PathGraph
    K: Interval
    L: Interval
    blocks: tuple[Interval, Interval, Interval]
    pi: GraphMap
    g: GraphMap


def step_4k1(J: PathGraph, K: Interval, Jp: PathGraph, Kp: Interval, pi: GraphMap, hbullet: GraphMap) -> Step4k1:
    """Like step_4k, with a second copy L'' of the marked interval."""
    core = step_4k(J, K, Jp, Kp, pi, hbullet, triple=False)
    N, Ks = core.J.size, core.K
    a = Ks.lo - 1
    c1 = _ar(0, a)
    lk = _ar(Ks.lo, Ks.hi)
    c2 = np.concatenate((np.arange(Ks.hi + 1, N, dtype=np.int64), np.arange(N - 2, Ks.hi, -1, dtype=np.int64)))
    kk = _ar(Ks.hi, Ks.lo)
    c3 = _ar(a, 0)
    walk = np.concatenate((c1, lk, c2, kk, c3))
    b = _consecutive([c1.shape[0], lk.shape[0], c2.shape[0], kk.shape[0], c3.shape[0]])
    walk, b = _thicken(walk, b)
    Jpp = PathGraph(int(walk.shape[0]))
    res = Step4k1(
        Jpp, b[3], b[1], (b[0], b[2], b[4]),
        GraphMap(Jpp, Jp, core.pi.vals[walk]), GraphMap(Jpp, Jp, core.hbullet.vals[walk]),
    )
    _fail(check_step_4k1(Jp, Kp, pi, hbullet, res))
    return res


def check_step_4k1(Jp: PathGraph, Kp: Interval, pi: GraphMap, hbullet: GraphMap, r: Step4k1) -> list[str]:
    out = []
    if not (is_epi(r.pi) and is_epi(r.g)):
        return ["outputs must be epimorphisms"]
    if compose(hbullet, r.g) != compose(pi, r.pi):
        out.append("⊞1: h•∘g != π∘π'")
    C1, C2, C3 = r.blocks
    if [C1, r.L, C2, r.K, C3] != _consecutive([C1.size, r.L.size, C2.size, r.K.size, C3.size]) or C3.hi != r.J.size - 1:
        out.append("⊞2: J'' is not C1'' L'' C2'' K'' C3''")
    for I, tag in ((r.K, "⊞3"), (r.L, "⊞4")):
        if not agree_on(r.pi, r.g, I) or not maps_onto(r.pi, I, Kp) or not ends_to_ends(r.pi, I, Kp):
            out.append(f"{tag}: {I.to_text()} condition")
    for C in r.blocks:
        if not maps_onto(r.pi, C, Jp.whole()) or not maps_onto(r.g, C, Jp.whole()):
            out.append(f"⊞5: {C.to_text()} not onto J'")
        for x in touching_ends(C, (r.K, r.L)):
            if not same_type(r.g, r.pi, x, C):
                out.append(f"⊞6: types differ at {x}")
    if min_fiber_component(r.pi) < THICK:
        out.append("⊞7: a preimage component of π' is too short")
    return out


# ----------------------------------------------------------------------------
# step 4k+2


@dataclass(frozen=True)
class Step4k2:
    J: PathGraph
    K: Interval
    L: Interval
    blocks: tuple[Interval, Interval, Interval]
    pi: GraphMap
    f: GraphMap
    fprime: GraphMap


def five_blocks(n: int, K: Interval, L: Interval, clause: str = "5") -> tuple[Interval, Interval, Interval]:
    """C1, C2, C3 of a path split as C1 L C2 K C3 (all five nonempty)."""
    if not (0 < L.lo and L.hi + 1 < K.lo and K.hi < n - 1):
        raise PreconditionError("need C1 L C2 K C3 with nonempty pieces in this order", clause)
    return Interval(0, L.lo - 1), Interval(L.hi + 1, K.lo - 1), Interval(K.hi + 1, n - 1)


def shifted_values(n: int) -> np.ndarray:
    """Values on a thickened copy of an n-vertex interval, pushed two steps
    ahead of the plain thickened values away from the left end."""
    top = n - 1
    r = np.arange(THICK * n, dtype=np.int64)
    out = np.minimum(r // THICK + 2, top)
    out[0] = 0
    if out.shape[0] > 1:
        out[1] = min(1, top)
    return out


def step_4k2(
    J: PathGraph, K: Interval, Jp: PathGraph, Kp: Interval, Lp: Interval, pi: GraphMap, g: GraphMap
) -> Step4k2:
    """New level with pi', f' satisfying g∘pi' == pi∘f', and f equal to f'
    except on L'' where it is shifted by two."""
    _check_shape(pi, Jp, J, "pi")
    _check_shape(g, Jp, J, "g")
    K.check_in(J)
    C1, C2, C3 = five_blocks(Jp.size, Kp, Lp)
    if not agree_on(pi, g, Kp):
        raise PreconditionError("pi and g differ on K'", "1")
    if not maps_onto(pi, Kp, K) or not ends_to_ends(pi, Kp, K):
        raise PreconditionError("pi must map K' onto K sending endpoints to endpoints", "2")
    if not agree_on(pi, g, Lp):
        raise PreconditionError("pi and g differ on L'", "3")
    if not maps_onto(pi, Lp, K) or not ends_to_ends(pi, Lp, K):
        raise PreconditionError("pi must map L' onto K sending endpoints to endpoints", "4")
    for C in (C1, C2, C3):
        if not maps_onto(pi, C, J.whole()) or not maps_onto(g, C, J.whole()):
            raise PreconditionError(f"pi and g must map {C.to_text()} onto J", "6")
        for x in touching_ends(C, (Kp, Lp)):
            if not same_type(g, pi, x, C):
                raise PreconditionError(f"types of g and pi at {x} differ", "7")
    u1, v1 = _placed(_block(g, pi, C1, C1.hi, False), C1, True)
    u2, v2 = _placed(_block(g, pi, C2, C2.lo, True), C2, False)
    u3, v3 = _placed(_block(g, pi, C3, C3.lo, False), C3, False)
    ll, kk = _ar(Lp.lo, Lp.hi), _ar(Kp.lo, Kp.hi)
    u = np.concatenate((u1, ll, u2, kk, u3))
    v = np.concatenate((v1, ll, v2, kk, v3))
    b = _consecutive([u1.shape[0], Lp.size, u2.shape[0], Kp.size, u3.shape[0]])
    _, b = _thicken(u, b)
    u, v = np.repeat(u, THICK), np.repeat(v, THICK)
    Jpp = PathGraph(int(u.shape[0]))
    Lpp = b[1]
    f = v.copy()
    f[Lpp.lo : Lpp.hi + 1] = Lp.lo + shifted_values(Lp.size)
    res = Step4k2(Jpp, b[3], Lpp, (b[0], b[2], b[4]), GraphMap(Jpp, Jp, u), GraphMap(Jpp, Jp, f), GraphMap(Jpp, Jp, v))
    _fail(check_step_4k2(J, Jp, Kp, Lp, pi, g, res))
    return res


def check_step_4k2(J: PathGraph, Jp: PathGraph, Kp: Interval, Lp: Interval, pi: GraphMap, g: GraphMap, r: Step4k2) -> list[str]:
    out = []
    if not (is_epi(r.pi) and is_epi(r.f) and is_epi(r.fprime)):
        return ["outputs must be epimorphisms"]
    if compose(g, r.pi) != compose(pi, r.fprime):
        out.append("⊞1: g∘π' != π∘f'")
    C1, C2, C3 = r.blocks
    if [C1, r.L, C2, r.K, C3] != _consecutive([C1.size, r.L.size, C2.size, r.K.size, C3.size]) or C3.hi != r.J.size - 1:
        out.append("⊞2: block structure")
    if not agree_on(r.pi, r.fprime, r.K) or not maps_onto(r.pi, r.K, Kp):
        out.append("⊞3: K'' condition")
    if not agree_on(r.pi, r.fprime, r.L) or not maps_onto(r.pi, r.L, Lp):
        out.append("⊞4: L'' condition")
    for C, Cp in zip(r.blocks, five_blocks(Jp.size, Kp, Lp)):
        if not maps_onto(r.pi, C, Cp) or not maps_onto(r.fprime, C, Cp):
            out.append(f"⊞5: {C.to_text()} not onto {Cp.to_text()}")
    if min_fiber_component(r.pi) < THICK:
        out.append("⊞6: a preimage component of π' is too short")
    off = np.ones(r.J.size, dtype=bool)
    off[r.L.lo : r.L.hi + 1] = False
    if not np.array_equal(r.f.vals[off], r.fprime.vals[off]):
        out.append("⊞7: f != f' off L''")
    d = np.abs(r.f.vals - r.fprime.vals)[r.L.lo : r.L.hi + 1]
    x = r.pi.vals[r.L.lo : r.L.hi + 1]
    inner = (x >= Lp.lo + 2) & (x <= Lp.hi - 2)
    if int(d.max()) > 2 or not bool(np.all(d[inner] == 2)):
        out.append("⊞8: shift law on L''")
    return out


# ----------------------------------------------------------------------------
# step 4k+3


@dataclass(frozen=True)
class Step4k3:
    J: PathGraph
    K: Interval
    C1: Interval
    C2: Interval
    pi: GraphMap
    h: GraphMap
    phistar: GraphMap | None
    Jstar: PathGraph
    Dblocks: tuple[Interval, ...]
    skeleton: GraphMap


def _core_interval(v: np.ndarray, lo: int, hi: int, last: int) -> Interval | None:
    """A maximal run of v inside [lo, hi] that hits both lo and hi, with an
    occurrence of 0 or last on either side of it."""
    inside = (v >= lo) & (v <= hi)
    ext = (v == 0) | (v == last)
    before = np.cumsum(ext)
    total = int(before[-1])
    idx = np.flatnonzero(np.diff(np.concatenate(([0], inside.astype(np.int8), [0]))))
    for a, b in zip(idx[::2], idx[1::2] - 1):
        seg = v[a : b + 1]
        if int(seg.min()) != lo or int(seg.max()) != hi:
            continue
        left = int(before[a - 1]) if a > 0 else 0
        right = total - int(before[b])
        if left > 0 and right > 0:
            return Interval(int(a), int(b))
    return None


def step_4k3(
    J: PathGraph,
    K: Interval,
    L: Interval,
    Jp: PathGraph,
    Kp: Interval,
    Lp: Interval,
    pi: GraphMap,
    f: GraphMap,
    phi: GraphMap | None = None,
) -> Step4k3:
    """New level J'' with pi', h such that f∘pi' == pi∘h, three blocks around
    K'', and (given a task phi: M -> J') a map phistar with phi∘phistar == pi'."""
    _check_shape(pi, Jp, J, "pi")
    _check_shape(f, Jp, J, "f")
    Cs = five_blocks(J.size, K, L)
    Cps = five_blocks(Jp.size, Kp, Lp)
    if not agree_on(pi, f, Kp):
        raise PreconditionError("pi and f differ on K'", "1")
    if not maps_onto(pi, Kp, K) or not ends_to_ends(pi, Kp, K):
        raise PreconditionError("pi must map K' onto K sending endpoints to endpoints", "2")
    if not maps_onto(pi, Lp, L) or not maps_onto(f, Lp, L) or pi[Lp.lo] != f[Lp.lo] or pi[Lp.hi] != f[Lp.hi]:
        raise PreconditionError("pi and f must map L' onto L with equal end values", "3")
    if not ends_to_ends(pi, Lp, L) or not same_type(pi, f, Lp.lo, Lp) or not same_type(pi, f, Lp.hi, Lp):
        raise PreconditionError("on L', pi must send ends to ends and share both end types with f", "4")
    for C, Cp in zip(Cs, Cps):
        if not maps_onto(pi, Cp, C) or not maps_onto(f, Cp, C):
            raise PreconditionError(f"pi and f must map {Cp.to_text()} onto {C.to_text()}", "6")
    if phi is not None:
        if phi.cod != Jp:
            raise ShapeError("the task map must land in J'")
        if not is_epi(phi):
            raise PreconditionError("the task map is not an epimorphism", "7")
    C1, C2, C3 = Cps
    u1, v1 = _placed(_block(f, pi, C1, C1.hi, False, Cs[0]), C1, True)
    uL, vL = _placed(_block(f, pi, Lp, Lp.lo, True, L), Lp, False)
    u2, v2 = _placed(_block(f, pi, C2, C2.lo, True, Cs[1]), C2, False)
    kk = _ar(Kp.lo, Kp.hi)
    u3, v3 = _placed(_block(f, pi, C3, C3.lo, False, Cs[2]), C3, False)
    u = np.concatenate((u1, uL, u2, kk, u3))
    v = np.concatenate((v1, vL, v2, kk, v3))
    sb = _consecutive([u1.shape[0], uL.shape[0], u2.shape[0], Kp.size, u3.shape[0]])
    Ns, Ks, C3s = u.shape[0], sb[3], sb[4]
    Jstar = PathGraph(int(Ns))
    # J** = D1 .. D8, each piece a bijection onto its image in J*
    D = [
        _ar(0, Ns - 1), _ar(Ns - 1, C3s.lo), _ar(Ks.hi, Ks.lo), _ar(Ks.lo, Ks.hi),
        _ar(Ks.hi, Ks.lo), _ar(Ks.lo, Ks.hi), _ar(C3s.lo, Ns - 1), _ar(Ns - 1, 0),
    ]
    dw = np.concatenate(D)
    Db = tuple(_consecutive([d.shape[0] for d in D]))
    Jss = PathGraph(int(dw.shape[0]))
    sigma = u[dw]
    hsig = v[dw]
    core_lo, core_hi = Db[3].lo, Db[4].hi
    if phi is None or phi == GraphMap.identity(Jp.size):
        p2 = np.arange(Jss.size, dtype=np.int64)
        star = None if phi is None else sigma.copy()
        Kc = Interval(core_lo, core_hi)
    else:
        am = base_amalgamate(phi, GraphMap(Jss, Jp, sigma))
        star, p2 = am.g.vals, am.gp.vals
        Kc = _core_interval(p2, core_lo, core_hi, Jss.size - 1)
        if Kc is None:
            # run the amalgam forwards, backwards and forwards again
            n = p2.shape[0]
            w = np.concatenate((np.arange(n), np.arange(n - 2, -1, -1), np.arange(1, n))).astype(np.int64)
            star, p2 = star[w], p2[w]
            Kc = _core_interval(p2, core_lo, core_hi, Jss.size - 1)
        if Kc is None:
            raise ConstructionInvariantError("no admissible K'' in the task amalgam")
    b = [Interval(0, Kc.lo - 1), Kc, Interval(Kc.hi + 1, p2.shape[0] - 1)]
    p2, b = _thicken(p2, b)
    if star is not None:
        star = np.repeat(star, THICK)
    Jpp = PathGraph(int(p2.shape[0]))
    res = Step4k3(
        Jpp, b[1], b[0], b[2],
        GraphMap(Jpp, Jp, sigma[p2]), GraphMap(Jpp, Jp, hsig[p2]),
        None if star is None else GraphMap(Jpp, phi.dom if phi is not None else Jp, star),
        Jstar, Db, GraphMap(Jss, Jstar, dw),
    )
    _fail(check_step_4k3(Jp, Kp, pi, f, phi, res))
    return res


def check_step_4k3(Jp: PathGraph, Kp: Interval, pi: GraphMap, f: GraphMap, phi: GraphMap | None, r: Step4k3) -> list[str]:
    out = []
    if not (is_epi(r.pi) and is_epi(r.h)):
        return ["outputs must be epimorphisms"]
    if compose(f, r.pi) != compose(pi, r.h):
        out.append("⊞1: f∘π' != π∘h")
    if phi is not None and (r.phistar is None or not is_epi(r.phistar) or compose(phi, r.phistar) != r.pi):
        out.append("⊞2: φ∘φ* != π'")
    if r.C1.lo != 0 or r.C1.hi + 1 != r.K.lo or r.K.hi + 1 != r.C2.lo or r.C2.hi != r.J.size - 1 or r.C1.size == 0:
        out.append("⊞3: block structure")
    if not agree_on(r.pi, r.h, r.K):
        out.append("⊞4: π' != h on K''")
    if not maps_onto(r.pi, r.K, Kp):
        out.append("⊞5: π'[K''] != K'")
    for C in (r.C1, r.C2):
        if not maps_onto(r.pi, C, Jp.whole()) or not maps_onto(r.h, C, Jp.whole()):
            out.append(f"⊞6: {C.to_text()} not onto J'")
    if not same_type(r.h, r.pi, r.C1.hi, r.C1) or not same_type(r.h, r.pi, r.C2.lo, r.C2):
        out.append("⊞6: boundary types differ")
    if min_fiber_component(r.pi) < THICK:
        out.append("⊞7: a preimage component of π' is too short")
    sk = r.skeleton.vals
    Ns = r.Jstar.size
    for i in (0, 7):
        seg = sk[r.Dblocks[i].lo : r.Dblocks[i].hi + 1]
        if seg.shape[0] != Ns or len(set(seg.tolist())) != Ns:
            out.append(f"D{i + 1} is not a copy of J*")
    return out


# ----------------------------------------------------------------------------
# decorated towers


@dataclass(frozen=True)
class TaskSpec:
    """A genericity task: a map phi onto J_stage, described by kind."""

    stage: int
    kind: str
    factor: int = 2
    size: int = 0
    seed: int = 0
    explicit: GraphMap | None = None

    def resolve(self, target: PathGraph) -> GraphMap:
        n = target.size
        if self.kind == "identity":
            return GraphMap.identity(n)
        if self.kind == "repetition":
            return repetition(n, self.factor)
        if self.kind == "reflect":
            return GraphMap(target, target, np.arange(n - 1, -1, -1, dtype=np.int64))
        if self.kind == "random":
            size = max(self.size, n)
            return random_epi(np.random.default_rng(self.seed), size, n)
        if self.kind == "map":
            if self.explicit is None or self.explicit.cod != target:
                raise PreconditionError(f"explicit task map must land in a path of size {n}")
            return self.explicit
        raise PreconditionError(f"unknown task kind {self.kind!r}")

    def to_lines(self) -> list[str]:
        head = f"task stage={self.stage} kind={self.kind}"
        if self.kind == "repetition":
            head += f" factor={self.factor}"
        elif self.kind == "random":
            head += f" size={self.size} seed={self.seed}"
        lines = [head]
        if self.kind == "map" and self.explicit is not None:
            lines.append(self.explicit.to_text())
        return lines


_TASK_RE = re.compile(r"task stage=(-?\d+) kind=(\w+)((?: \w+=-?\d+)*)")


def parse_tasks(text: str) -> list[TaskSpec]:
    """Task file: one 'task stage=<i> kind=<k> [key=value ...]' line per
    task; kind=map is followed by a map line."""
    lines = text.splitlines()
    out: list[TaskSpec] = []
    i = 0
    while i < len(lines):
        ln = lines[i].strip()
        i += 1
        if not ln or ln.startswith("#"):
            continue
        m = _TASK_RE.fullmatch(ln)
        if m is None:
            raise ParseError("expected 'task stage=<i> kind=<name> ...'", i, 1)
        opts = dict(kv.split("=") for kv in m.group(3).split())
        unknown = set(opts) - {"factor", "size", "seed"}
        if unknown:
            raise ParseError(f"unknown task option {sorted(unknown)[0]!r}", i, ln.find(sorted(unknown)[0]) + 1)
        kind = m.group(2)
        if kind not in ("identity", "repetition", "reflect", "random", "map"):
            raise ParseError(f"unknown task kind {kind!r}", i, ln.find("kind=") + 6)
        explicit = None
        if kind == "map":
            if i >= len(lines):
                raise ParseError("kind=map needs a map line", i + 1, 1)
            try:
                explicit = GraphMap.from_text(lines[i])
            except ParseError as exc:
                raise ParseError(str(exc), i + 1, 1) from None
            i += 1
        factor = int(opts.get("factor", 2))
        if factor < 1:
            raise ParseError("factor must be >= 1", i, ln.find("factor=") + 1)
        out.append(TaskSpec(int(m.group(1)), kind, factor, int(opts.get("size", 0)), int(opts.get("seed", 0)), explicit))
    return out


@dataclass(frozen=True)
class TaskRecord:
    stage: int
    top: int
    phi: GraphMap
    phiplus: GraphMap


@dataclass(frozen=True)
class DecoratedTower:
    """Levels J_{-1}, J_0, ..., their marked intervals and decorations.

    bonds[t] maps levels[t+1] onto levels[t], i.e. bonds[i+1] is the bond
    from J_{i+1} to J_i. Nothing is validated here: the certificate does that.
    """

    levels: tuple[PathGraph, ...]
    bonds: tuple[GraphMap, ...]
    K: tuple[Interval, ...]
    L: dict = field(default_factory=dict)
    decos: dict = field(default_factory=dict)
    tasks: tuple[TaskRecord, ...] = ()

    @property
    def top(self) -> int:
        """Index i of the last level J_i."""
        return len(self.levels) - 2

    def J(self, i: int) -> PathGraph:
        return self.levels[i + 1]

    def bond(self, i: int) -> GraphMap:
        """The bond from J_{i+1} to J_i."""
        return self.bonds[i + 1]

    def pi_vals(self, i: int, j: int) -> np.ndarray:
        v = np.arange(self.J(j).size, dtype=np.int64)
        for t in range(j - 1, i - 1, -1):
            v = self.bond(t).vals[v]
        return v

    def pi(self, i: int, j: int) -> GraphMap:
        if not (-1 <= i <= j <= self.top):
            raise PreconditionError(f"need -1 <= i <= j <= {self.top}")
        return GraphMap(self.J(j), self.J(i), self.pi_vals(i, j))

    def Kat(self, i: int) -> Interval:
        return self.K[i + 1]

    def deco(self, name: str, k: int) -> GraphMap | None:
        return self.decos.get((name, k))

    def tower(self) -> Tower:
        return Tower(self.levels, self.bonds)

    def replace_map(self, key: tuple, new: GraphMap) -> DecoratedTower:
        """Copy with one bond, decoration or task witness replaced.

        key is ("bond", i), (name, k) for a decoration, or ("task", n)."""
        if key[0] == "bond":
            bonds = list(self.bonds)
            bonds[key[1] + 1] = new
            return DecoratedTower(self.levels, tuple(bonds), self.K, dict(self.L), dict(self.decos), self.tasks)
        if key[0] == "task":
            tasks = list(self.tasks)
            r = tasks[key[1]]
            tasks[key[1]] = TaskRecord(r.stage, r.top, r.phi, new)
            return DecoratedTower(self.levels, self.bonds, self.K, dict(self.L), dict(self.decos), tuple(tasks))
        decos = dict(self.decos)
        decos[key] = new
        return DecoratedTower(self.levels, self.bonds, self.K, dict(self.L), decos, self.tasks)

    def map_keys(self) -> list[tuple]:
        keys: list[tuple] = [("bond", i) for i in range(-1, self.top)]
        keys += sorted(self.decos, key=lambda t: (t[1], DECO_NAMES.index(t[0])))
        keys += [("task", n) for n in range(len(self.tasks))]
        return keys

    def get_map(self, key: tuple) -> GraphMap:
        if key[0] == "bond":
            return self.bond(key[1])
        if key[0] == "task":
            return self.tasks[key[1]].phiplus
        return self.decos[key]

    # text form ---------------------------------------------------------

    def iter_lines(self) -> Iterator[list[str]]:
        """Lines of the text form, each given as a list of string pieces."""
        yield [f"dtower levels={len(self.levels)}"]
        yield [self.levels[0].to_text()]
        for b in self.bonds:
            yield list(b.text_chunks())
        for t, I in enumerate(self.K):
            yield [f"K level={t - 1} {I.to_text()}"]
        for i in sorted(self.L):
            yield [f"L level={i} {self.L[i].to_text()}"]
        for name, k in sorted(self.decos, key=lambda t: (t[1], DECO_NAMES.index(t[0]))):
            yield [f"deco name={name} index={k}"]
            yield list(self.decos[(name, k)].text_chunks())
        for r in self.tasks:
            yield [f"task stage={r.stage} top={r.top}"]
            yield list(r.phi.text_chunks())
            yield list(r.phiplus.text_chunks())
        yield ["end dtower"]

    def to_lines(self) -> list[str]:
        return ["".join(parts) for parts in self.iter_lines()]

    def to_text(self) -> str:
        return "\n".join(self.to_lines()) + "\n"

    def write(self, fh: TextIO) -> None:
        for parts in self.iter_lines():
            fh.writelines(parts)
            fh.write("\n")

    def digest(self) -> str:
        """sha256 of to_text(), computed without building the whole text."""
        h = hashlib.sha256()
        for parts in self.iter_lines():
            for p in parts:
                h.update(p.encode("ascii"))
            h.update(b"\n")
        return h.hexdigest()

    @classmethod
    def from_lines(cls, lines: Iterable[str], first_line: int = 1) -> DecoratedTower:
        return _parse_dtower(lines, first_line)

    @classmethod
    def from_text(cls, text: str) -> DecoratedTower:
        return cls.from_lines(ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#"))

    @classmethod
    def read(cls, fh: TextIO) -> DecoratedTower:
        return cls.from_lines(ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#"))

    def same_as(self, other: DecoratedTower) -> bool:
        return self.digest() == other.digest()


_DT_RE = re.compile(r"dtower levels=(\d+)")
_K_RE = re.compile(r"K level=(-?\d+) (\[\d+,\d+\])")
_L_RE = re.compile(r"L level=(-?\d+) (\[\d+,\d+\])")
_DECO_RE = re.compile(r"deco name=(\w+) index=(\d+)")
_TREC_RE = re.compile(r"task stage=(-?\d+) top=(-?\d+)")


def _parse_dtower(lines: Iterable[str], first: int) -> DecoratedTower:
    it = iter(lines)
    pos = 0

    def take() -> tuple[str, int]:
        nonlocal pos
        try:
            s = next(it).strip()
        except StopIteration:
            raise ParseError("unexpected end of dtower block", first + pos) from None
        pos += 1
        return s, first + pos - 1

    def parse(fn, s: str, ln: int):
        try:
            return fn(s)
        except (ParseError, ShapeError) as exc:
            raise ParseError(str(exc).split(": ", 1)[-1] if isinstance(exc, ParseError) and exc.line else str(exc), ln, 1) from None

    s, ln = take()
    m = _DT_RE.fullmatch(s)
    if m is None:
        raise ParseError("expected 'dtower levels=<n>'", ln, 1)
    n = int(m.group(1))
    if n < 1:
        raise ParseError("a decorated tower needs at least one level", ln, 15)
    s, ln = take()
    base = parse(PathGraph.from_text, s, ln)
    bonds = []
    for _ in range(n - 1):
        s, ln = take()
        bonds.append(parse(GraphMap.from_text, s, ln))
    levels = [base] + [b.dom for b in bonds]
    for t, b in enumerate(bonds):
        if b.cod != levels[t]:
            raise ParseError(f"bond {t} does not land in the level below it", first + 2 + t, 1)
    Ks: list[Interval] = []
    for t in range(n):
        s, ln = take()
        mk = _K_RE.fullmatch(s)
        if mk is None or int(mk.group(1)) != t - 1:
            raise ParseError(f"expected 'K level={t - 1} [lo,hi]'", ln, 1)
        I = parse(Interval.from_text, mk.group(2), ln)
        if not I.fits(levels[t]):
            raise ParseError("K does not fit in its level", ln, s.find("[") + 1)
        Ks.append(I)
    L: dict[int, Interval] = {}
    decos: dict[tuple, GraphMap] = {}
    tasks: list[TaskRecord] = []
    while True:
        s, ln = take()
        if s == "end dtower":
            break
        if s.startswith("L "):
            ml = _L_RE.fullmatch(s)
            if ml is None:
                raise ParseError("expected 'L level=<i> [lo,hi]'", ln, 1)
            i = int(ml.group(1))
            if not (-1 <= i < n - 1):
                raise ParseError("L level out of range", ln, 9)
            I = parse(Interval.from_text, ml.group(2), ln)
            if not I.fits(levels[i + 1]):
                raise ParseError("L does not fit in its level", ln, s.find("[") + 1)
            L[i] = I
        elif s.startswith("deco "):
            md = _DECO_RE.fullmatch(s)
            if md is None or md.group(1) not in DECO_NAMES:
                raise ParseError("expected 'deco name=<h|hbullet|g|f|fprime> index=<k>'", ln, 1)
            s2, ln2 = take()
            decos[(md.group(1), int(md.group(2)))] = parse(GraphMap.from_text, s2, ln2)
        elif s.startswith("task "):
            mt = _TREC_RE.fullmatch(s)
            if mt is None:
                raise ParseError("expected 'task stage=<i> top=<j>'", ln, 1)
            s2, ln2 = take()
            phi = parse(GraphMap.from_text, s2, ln2)
            s3, ln3 = take()
            tasks.append(TaskRecord(int(mt.group(1)), int(mt.group(2)), phi, parse(GraphMap.from_text, s3, ln3)))
        else:
            raise ParseError(f"unknown line in dtower block: {s.split(' ')[0]!r}", ln, 1)
    if next(it, None) is not None:
        raise ParseError("trailing lines after 'end dtower'", first + pos)
    return DecoratedTower(tuple(levels), tuple(bonds), tuple(Ks), L, decos, tuple(tasks))


# ----------------------------------------------------------------------------
# driver


def seed() -> DecoratedTower:
    """J_{-1} = one vertex, J_0 = three vertices with K_0 the middle one."""
    J0 = PathGraph(3)
    b = GraphMap.constant(3, 0, 1)
    return DecoratedTower(
        (PathGraph(1), J0), (b,), (Interval(0, 0), Interval(1, 1)),
        {}, {("h", 0): GraphMap.constant(3, 0, 1)}, (),
    )


def build(rounds: int, tasks: Sequence[TaskSpec] = ()) -> DecoratedTower:
    """Run `rounds` rounds of the recursion from the seed.

    Each task (phi onto J_stage) is absorbed by the first step_4k3 whose
    input level J_{4k+3} is at or above its stage, one task per round in
    stage order."""
    if rounds < 0:
        raise PreconditionError("rounds must be >= 0")
    for t in tasks:
        if t.stage < -1 or t.stage > 4 * rounds - 1:
            raise PreconditionError(f"task at stage {t.stage} cannot be absorbed in {rounds} rounds")
    pending = sorted(tasks, key=lambda t: t.stage)
    dt = seed()
    levels = list(dt.levels)
    bonds = list(dt.bonds)
    K = list(dt.K)
    L: dict[int, Interval] = {}
    decos = dict(dt.decos)
    records: list[TaskRecord] = []

    def lev(i: int) -> PathGraph:
        return levels[i + 1]

    def bnd(i: int) -> GraphMap:
        return bonds[i + 1]

    def push(J: PathGraph, bond: GraphMap, Kn: Interval) -> None:
        levels.append(J)
        bonds.append(bond)
        K.append(Kn)

    for k in range(rounds):
        b = 4 * k
        r1 = step_4k(lev(b - 1), K[b], lev(b), K[b + 1], bnd(b - 1), decos[("h", k)])
        push(r1.J, r1.pi, r1.K)
        decos[("hbullet", k)] = r1.hbullet
        r2 = step_4k1(lev(b), K[b + 1], lev(b + 1), K[b + 2], bnd(b), r1.hbullet)
        push(r2.J, r2.pi, r2.K)
        L[b + 2] = r2.L
        decos[("g", k)] = r2.g
        r3 = step_4k2(lev(b + 1), K[b + 2], lev(b + 2), K[b + 3], L[b + 2], bnd(b + 1), r2.g)
        push(r3.J, r3.pi, r3.K)
        L[b + 3] = r3.L
        decos[("f", k)] = r3.f
        decos[("fprime", k)] = r3.fprime
        task = None
        if pending and pending[0].stage <= b + 3:
            task = pending.pop(0)
        phi_in, pre = None, None
        phi = None
        if task is not None:
            phi = task.resolve(lev(task.stage))
            if task.stage == b + 3:
                phi_in = phi
            else:
                dtmp = DecoratedTower(tuple(levels), tuple(bonds), tuple(K))
                pre = base_amalgamate(phi, dtmp.pi(task.stage, b + 3))
                phi_in = pre.gp
        r4 = step_4k3(lev(b + 2), K[b + 3], L[b + 2], lev(b + 3), K[b + 4], L[b + 3], bnd(b + 2), r3.f, phi_in)
        push(r4.J, r4.pi, r4.K)
        decos[("h", k + 1)] = r4.h
        if task is not None:
            assert r4.phistar is not None and phi is not None
            plus = r4.phistar if pre is None else compose(pre.g, r4.phistar)
            records.append(TaskRecord(task.stage, b + 4, phi, plus))
    if pending:
        raise ConstructionInvariantError("tasks left over after the last round")
    return DecoratedTower(tuple(levels), tuple(bonds), tuple(K), L, decos, tuple(records))
