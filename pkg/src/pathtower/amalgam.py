"""Amalgamation of path epimorphisms over a common codomain.

Every routine returns an Amalgam (O, g, gp) with f∘g == fp∘gp, and every
result is checked before it is returned.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import (
    BoundExceededError,
    ConstructionInvariantError,
    NoAmalgamationError,
    PreconditionError,
)
from .graphs import PathGraph
from .maps import GraphMap, is_epi


class Amalgam(NamedTuple):
    O: PathGraph
    g: GraphMap
    gp: GraphMap


@dataclass(frozen=True)
class Anchors:
    """Designated vertices: the walk starts at (m_minus, mp_minus) and,
    when the plus pair is given, ends at (m_plus, mp_plus)."""

    m_minus: int
    mp_minus: int
    m_plus: int | None = None
    mp_plus: int | None = None

    @property
    def two_sided(self) -> bool:
        return self.m_plus is not None


def search_bound(n: int, m: int) -> int:
    """Largest walk the searches may return; FF_MAX_SEARCH overrides."""
    env = os.environ.get("FF_MAX_SEARCH")
    if env:
        return int(env)
    return 4 * n * m


def _from_walk(xs: np.ndarray, ys: np.ndarray, M: PathGraph, Mp: PathGraph) -> Amalgam:
    O = PathGraph(int(xs.shape[0]))
    return Amalgam(O, GraphMap(O, M, xs), GraphMap(O, Mp, ys))


def amalgam_problems(f: GraphMap, fp: GraphMap, am: Amalgam, anchors: Anchors | None = None) -> list[str]:
    """Every violated postcondition of an amalgam, as text."""
    out: list[str] = []
    O, g, gp = am
    if g.dom != O or gp.dom != O:
        out.append("g, gp must be defined on O")
        return out
    if g.cod != f.dom or gp.cod != fp.dom:
        out.append("g, gp must land in the domains of f, fp")
        return out
    if not np.array_equal(f.vals[g.vals], fp.vals[gp.vals]):
        out.append("f∘g != fp∘gp")
    if not is_epi(g):
        out.append("g is not an epimorphism")
    if not is_epi(gp):
        out.append("gp is not an epimorphism")
    if anchors is not None:
        if g[0] != anchors.m_minus or gp[0] != anchors.mp_minus:
            out.append("start of O is not sent to the minus anchors")
        if anchors.two_sided and (g[O.size - 1] != anchors.m_plus or gp[O.size - 1] != anchors.mp_plus):
            out.append("end of O is not sent to the plus anchors")
    return out


def _checked(f: GraphMap, fp: GraphMap, am: Amalgam, anchors: Anchors | None, who: str) -> Amalgam:
    bad = amalgam_problems(f, fp, am, anchors)
    if bad:
        raise ConstructionInvariantError(f"{who}: " + "; ".join(bad))
    return am


def _common_codomain(f: GraphMap, fp: GraphMap) -> None:
    if f.cod != fp.cod:
        raise PreconditionError("f and fp must share a codomain")
    if not is_epi(f) or not is_epi(fp):
        raise PreconditionError("f and fp must be epimorphisms")


def _check_endpoints(anchors: Anchors, M: PathGraph, Mp: PathGraph) -> None:
    pairs = [(anchors.m_minus, M, "m_minus"), (anchors.mp_minus, Mp, "mp_minus")]
    if anchors.two_sided:
        pairs += [(anchors.m_plus, M, "m_plus"), (anchors.mp_plus, Mp, "mp_plus")]
    for v, G, name in pairs:
        if v is None or not (0 <= v < G.size) or not G.is_endpoint(v):
            raise PreconditionError(f"{name}={v} is not an endpoint")
    if anchors.two_sided:
        if M.size > 1 and anchors.m_plus == anchors.m_minus:
            raise PreconditionError("m_minus and m_plus must be the two endpoints")
        if Mp.size > 1 and anchors.mp_plus == anchors.mp_minus:
            raise PreconditionError("mp_minus and mp_plus must be the two endpoints")


def _identity_walk(M: PathGraph, start: int) -> np.ndarray:
    v = np.arange(M.size, dtype=np.int64)
    return v[::-1].copy() if start != 0 else v


def _run(status, xs, ys, what: str, bound: int):
    if status == kernels.BOUND:
        raise BoundExceededError(f"{what}: no witness within {bound} vertices (set FF_MAX_SEARCH to raise the bound)")
    if status == kernels.NONE:
        raise NoAmalgamationError(f"{what}: the fiber product has no suitable walk")
    return xs, ys


def base_amalgamate(f: GraphMap, fp: GraphMap, bound: int | None = None) -> Amalgam:
    """Unanchored amalgam: a shortest fiber-product walk covering both domains."""
    _common_codomain(f, fp)
    M, Mp = f.dom, fp.dom
    if f == fp:
        idv = np.arange(M.size, dtype=np.int64)
        return _checked(f, fp, _from_walk(idv, idv, M, Mp), None, "base_amalgamate")
    b = search_bound(M.size, Mp.size) if bound is None else bound
    xs, ys = _run(*kernels.fp_walk(f.vals, fp.vals, -1, -1, -1, -1, 15, b), "base_amalgamate", b)
    return _checked(f, fp, _from_walk(xs, ys, M, Mp), None, "base_amalgamate")


def amalgamate_search(f: GraphMap, fp: GraphMap, anchors: Anchors, bound: int | None = None) -> Amalgam:
    """Anchored amalgam by direct search in the fiber product.

    With both anchor pairs the walk runs corner to corner, which covers
    both domains automatically. With only the minus pair the walk is
    additionally required to reach the far end of each domain.
    """
    _common_codomain(f, fp)
    M, Mp = f.dom, fp.dom
    _check_endpoints(anchors, M, Mp)
    if f[anchors.m_minus] != fp[anchors.mp_minus]:
        raise PreconditionError("f(m_minus) != fp(mp_minus)")
    if anchors.two_sided and f[anchors.m_plus] != fp[anchors.mp_plus]:
        raise PreconditionError("f(m_plus) != fp(mp_plus)")
    b = search_bound(M.size, Mp.size) if bound is None else bound
    if f == fp and anchors.m_minus == anchors.mp_minus and (not anchors.two_sided or anchors.m_plus == anchors.mp_plus):
        w = _identity_walk(M, anchors.m_minus)
        return _checked(f, fp, _from_walk(w, w, M, Mp), anchors, "amalgamate_search")
    if anchors.two_sided:
        st = kernels.fp_walk(f.vals, fp.vals, anchors.m_minus, anchors.mp_minus, anchors.m_plus, anchors.mp_plus, 0, b)
    else:
        far = (2 if anchors.m_minus == 0 else 1) | (8 if anchors.mp_minus == 0 else 4)
        st = kernels.fp_walk(f.vals, fp.vals, anchors.m_minus, anchors.mp_minus, -1, -1, far, b)
    xs, ys = _run(*st, "amalgamate_search", b)
    return _checked(f, fp, _from_walk(xs, ys, M, Mp), anchors, "amalgamate_search")


def _sentinel_route(f: GraphMap, fp: GraphMap, anchors: Anchors) -> Amalgam:
    """Add a fresh vertex beyond each end of M, M', L, amalgamate without
    anchors, then cut out the piece between the two new end vertices."""
    M, Mp, L = f.dom, fp.dom, f.cod
    fv = f.vals if anchors.m_minus == 0 else f.vals[::-1]
    fpv = fp.vals if anchors.mp_minus == 0 else fp.vals[::-1]
    flip = int(fv[0]) != 0
    if flip:
        fv = L.size - 1 - fv
        fpv = L.size - 1 - fpv
    top = L.size + 1
    fe = np.concatenate(([0], fv + 1, [top]))
    fpe = np.concatenate(([0], fpv + 1, [top]))
    Le = PathGraph(L.size + 2)
    base = base_amalgamate(
        GraphMap(PathGraph(M.size + 2), Le, fe), GraphMap(PathGraph(Mp.size + 2), Le, fpe)
    )
    c = fe[base.g.vals]
    ext = np.flatnonzero((c == 0) | (c == top))
    # adjacent extreme occurrences with different values bound a minimal piece
    pick = None
    for a, b in zip(ext, ext[1:]):
        if c[a] != c[b]:
            pick = (int(a), int(b))
            break
    if pick is None:
        raise ConstructionInvariantError("sentinel amalgam misses an extreme")
    a, b = pick
    xs = base.g.vals[a + 1 : b] - 1
    ys = base.gp.vals[a + 1 : b] - 1
    if c[a] == top:
        xs, ys = xs[::-1], ys[::-1]
    if anchors.m_minus != 0:
        xs = M.size - 1 - xs
    if anchors.mp_minus != 0:
        ys = Mp.size - 1 - ys
    return _from_walk(np.ascontiguousarray(xs), np.ascontiguousarray(ys), M, Mp)


def amalgamate_anchored(f: GraphMap, fp: GraphMap, anchors: Anchors, method: str = "auto") -> Amalgam:
    """Amalgam whose ends are sent to the two designated endpoint pairs.

    method "sentinel" uses the end-extension reduction and needs the anchor
    values to be the two ends of L; "direct" searches corner to corner;
    "auto" picks the sentinel route whenever it applies.
    """
    _common_codomain(f, fp)
    M, Mp, L = f.dom, fp.dom, f.cod
    if not anchors.two_sided:
        raise PreconditionError("amalgamate_anchored needs both anchor pairs")
    _check_endpoints(anchors, M, Mp)
    lm, lp = f[anchors.m_minus], f[anchors.m_plus]
    if lm != fp[anchors.mp_minus]:
        raise PreconditionError("f(m_minus) != fp(mp_minus)")
    if lp != fp[anchors.mp_plus]:
        raise PreconditionError("f(m_plus) != fp(mp_plus)")
    ends_ok = L.size > 1 and {lm, lp} == {0, L.size - 1}
    if method == "auto":
        method = "sentinel" if ends_ok else "direct"
    if method == "sentinel":
        if not ends_ok:
            raise PreconditionError("sentinel route needs f(m_minus), f(m_plus) to be the two ends of L")
        if f == fp and anchors.m_minus == anchors.mp_minus:
            w = _identity_walk(M, anchors.m_minus)
            am = _from_walk(w, w, M, Mp)
        else:
            am = _sentinel_route(f, fp, anchors)
        return _checked(f, fp, am, anchors, "amalgamate_anchored")
    if method == "direct":
        return amalgamate_search(f, fp, anchors)
    raise ValueError(f"unknown method {method!r}")


def amalgamate_aligned(f: GraphMap, fp: GraphMap, start: int, two_sided: bool, margin: int = 4) -> Amalgam:
    """Anchored amalgam for two maps on the same domain.

    Walks the diagonal x == y wherever f and fp agree and solves small
    windowed searches around the places where they differ, widening a
    window whenever its search fails. start is the anchored endpoint; with
    two_sided the walk also ends at the other end on both coordinates.
    """
    _common_codomain(f, fp)
    M = f.dom
    if fp.dom != M:
        raise PreconditionError("amalgamate_aligned needs a shared domain")
    end = M.size - 1 - start if M.size > 1 else start
    anchors = Anchors(start, start, end, end) if two_sided else Anchors(start, start)
    _check_endpoints(anchors, M, M)
    fv = f.vals if start == 0 else f.vals[::-1]
    fpv = fp.vals if start == 0 else fp.vals[::-1]
    n = M.size
    if fv[0] != fpv[0] or (two_sided and fv[-1] != fpv[-1]):
        raise PreconditionError("f and fp disagree at an anchor")
    diff = np.flatnonzero(fv != fpv)
    if diff.shape[0] == 0:
        w = _identity_walk(M, start)
        return _checked(f, fp, _from_walk(w, w, M, M), anchors, "amalgamate_aligned")
    # clusters of disagreement, split where the gap is large
    gaps = np.flatnonzero(np.diff(diff) > 1)
    c_lo = np.concatenate(([diff[0]], diff[gaps + 1]))
    c_hi = np.concatenate((diff[gaps], [diff[-1]]))
    wid = np.full(c_lo.shape[0], margin, dtype=np.int64)
    for _ in range(64):
        lo = np.maximum(c_lo - wid, 0)
        hi = np.minimum(c_hi + wid, n - 1)
        # merge overlapping or touching windows
        groups: list[list[int]] = []
        reach = -2
        for i in np.argsort(lo, kind="stable").tolist():
            if groups and lo[i] <= reach + 1:
                groups[-1].append(i)
                reach = max(reach, int(hi[i]))
            else:
                groups.append([i])
                reach = int(hi[i])
        pieces: list[tuple[np.ndarray, np.ndarray]] = []
        failed: list[list[int]] = []
        pos = 0
        for grp in groups:
            s = int(min(lo[i] for i in grp))
            e = int(max(hi[i] for i in grp))
            if s > pos:
                d = np.arange(pos, s, dtype=np.int64)
                pieces.append((d, d))
            seg_f = fv[s : e + 1]
            seg_fp = fpv[s : e + 1]
            k = e - s + 1
            b = search_bound(k, k)
            if e == n - 1 and not two_sided:
                res = kernels.fp_walk(seg_f, seg_fp, 0, 0, -1, -1, 2 | 8, b)
            else:
                res = kernels.fp_walk(seg_f, seg_fp, 0, 0, k - 1, k - 1, 0, b)
            if res[0] != kernels.FOUND:
                if s == 0 and e == n - 1:
                    _run(*res, "amalgamate_aligned", b)
                failed.append(grp)
            else:
                pieces.append((res[1] + s, res[2] + s))
            pos = e + 1
        if not failed:
            if pos < n:
                d = np.arange(pos, n, dtype=np.int64)
                pieces.append((d, d))
            xs = np.concatenate([p[0] for p in pieces])
            ys = np.concatenate([p[1] for p in pieces])
            if start != 0:
                xs = n - 1 - xs
                ys = n - 1 - ys
            return _checked(f, fp, _from_walk(xs, ys, M, M), anchors, "amalgamate_aligned")
        for grp in failed:
            wid[grp] *= 2
    raise ConstructionInvariantError("amalgamate_aligned did not converge")


def oracle_amalgamate(
    f: GraphMap, fp: GraphMap, anchors: Anchors | None = None, size_bound: int | None = None
) -> Amalgam | None:
    """Exhaustive search over walks of increasing length, tracking which
    vertices of M and M' have been visited. Independent of every other
    routine here; returns None when no walk within size_bound exists."""
    if f.cod != fp.cod:
        return None
    M, Mp = f.dom, fp.dom
    b = search_bound(M.size, Mp.size) if size_bound is None else size_bound
    sx = sy = tx = ty = -1
    if anchors is not None:
        sx, sy = anchors.m_minus, anchors.mp_minus
        if anchors.two_sided:
            tx, ty = anchors.m_plus, anchors.mp_plus
    status, xs, ys = kernels.oracle_walk(f.vals, fp.vals, sx, sy, tx, ty, b)
    if status != kernels.FOUND:
        return None
    return _from_walk(xs, ys, M, Mp)
