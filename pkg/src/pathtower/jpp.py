"""Pairs of parallel epimorphisms, their morphisms, and the joint projection
construction for such pairs."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .errors import ConstructionInvariantError, ParseError, PreconditionError, ShapeError
from .graphs import PathGraph
from .maps import GraphMap, compose, epi_array, is_epi, min_fiber_component, r_close

_KP_RE = re.compile(r"kp arity=(\d+)")


@dataclass(frozen=True)
class KpObject:
    """(A, B, fs, gs): n pairs of epimorphisms A -> B."""

    A: PathGraph
    B: PathGraph
    fs: tuple[GraphMap, ...]
    gs: tuple[GraphMap, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "fs", tuple(self.fs))
        object.__setattr__(self, "gs", tuple(self.gs))
        if len(self.fs) < 1 or len(self.fs) != len(self.gs):
            raise ShapeError("need matching nonempty lists of f and g maps")
        for m in self.fs + self.gs:
            if m.dom != self.A or m.cod != self.B:
                raise ShapeError("every map must go from A to B")
            if not is_epi(m):
                raise PreconditionError("every map of a pair object must be an epimorphism")

    @property
    def arity(self) -> int:
        return len(self.fs)

    @classmethod
    def single(cls, f: GraphMap, g: GraphMap) -> KpObject:
        return cls(f.dom, f.cod, (f,), (g,))

    def to_lines(self) -> list[str]:
        out = [f"kp arity={self.arity}", self.A.to_text(), self.B.to_text()]
        out += [m.to_text() for m in self.fs]
        out += [m.to_text() for m in self.gs]
        return out

    @classmethod
    def from_lines(cls, lines: Sequence[str]) -> KpObject:
        m = _KP_RE.fullmatch(lines[0].strip())
        if m is None:
            raise ParseError("expected 'kp arity=<n>'")
        n = int(m.group(1))
        if len(lines) != 3 + 2 * n:
            raise ParseError(f"a kp block of arity {n} has {3 + 2 * n} lines")
        A = PathGraph.from_text(lines[1])
        B = PathGraph.from_text(lines[2])
        maps = [GraphMap.from_text(s) for s in lines[3:]]
        try:
            return cls(A, B, tuple(maps[:n]), tuple(maps[n:]))
        except (ShapeError, PreconditionError) as exc:
            raise ParseError(str(exc)) from None


def _pair_setup(alpha: GraphMap, src: KpObject, dst: KpObject, index: int):
    if alpha.dom != src.A or alpha.cod != dst.A:
        raise ShapeError("alpha must go from src.A to dst.A")
    if not (0 <= index < src.arity) or index >= dst.arity:
        raise ShapeError("index out of range")
    F = dst.fs[index].vals[alpha.vals]
    G = dst.gs[index].vals[alpha.vals]
    return src.fs[index].vals, src.gs[index].vals, F, G


def kp_distance(alpha: GraphMap, src: KpObject, dst: KpObject, index: int = 0) -> int:
    """max |f'(alpha a0) - g'(alpha a1)| over pairs with f(a0) = g(a1)."""
    return kernels.kp_maxdist(*_pair_setup(alpha, src, dst, index))


def is_kp_epi(alpha: GraphMap, src: KpObject, dst: KpObject, index: int = 0) -> bool:
    """f(a0) = g(a1) implies f'(alpha a0) = g'(alpha a1), for all a0, a1."""
    return kp_distance(alpha, src, dst, index) <= 0


def is_approx_kp_epi(alpha: GraphMap, src: KpObject, dst: KpObject, index: int = 0) -> bool:
    """f(a0) = g(a1) implies f'(alpha a0) R g'(alpha a1), for all a0, a1."""
    return kp_distance(alpha, src, dst, index) <= 1


def nbhd_member(f: GraphMap, g: GraphMap, phi: GraphMap, psi: GraphMap, k: int) -> bool:
    """(f∘phi) R^k (g∘psi)."""
    return r_close(compose(f, phi), compose(g, psi), k)


def check_conju_transport(
    alpha: GraphMap, src: KpObject, dst: KpObject, phi: GraphMap, psi: GraphMap, mode: str = "exact"
) -> bool:
    """Does closeness of (f∘phi, g∘psi) carry over to (f'∘alpha∘phi, g'∘alpha∘psi)?

    exact: R implies R, and equality implies equality. approx: equality
    implies R. Checked at every index.
    """
    if phi.cod != src.A or psi.cod != src.A or phi.dom != psi.dom:
        raise ShapeError("phi, psi must be maps J -> src.A from a common J")
    if alpha.dom != src.A or alpha.cod != dst.A:
        raise ShapeError("alpha must go from src.A to dst.A")
    ap, aps = compose(alpha, phi), compose(alpha, psi)
    for i in range(src.arity):
        f, g, fd, gd = src.fs[i], src.gs[i], dst.fs[i], dst.gs[i]
        if mode == "exact":
            if nbhd_member(f, g, phi, psi, 1) and not nbhd_member(fd, gd, ap, aps, 1):
                return False
            if nbhd_member(f, g, phi, psi, 0) and not nbhd_member(fd, gd, ap, aps, 0):
                return False
        elif mode == "approx":
            if nbhd_member(f, g, phi, psi, 0) and not nbhd_member(fd, gd, ap, aps, 1):
                return False
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return True


@dataclass(frozen=True)
class ConjuCounts:
    premises: int
    failures: int
    witness: tuple[int, int] | None


def conju_transport_all(alpha: GraphMap, src: KpObject, dst: KpObject, J: int, mode: str = "exact") -> ConjuCounts:
    """check_conju_transport over every pair (phi, psi) of epimorphisms J -> src.A.

    witness holds row indices into epi_array(J, |src.A|) of the first failure.
    """
    phis = epi_array(J, src.A.size)
    md = {"exact": 0, "approx": 1}[mode]
    if phis.shape[0] == 0:
        return ConjuCounts(0, 0, None)
    prem = fails = 0
    wit = None
    for i in range(src.arity):
        f, g = src.fs[i].vals, src.gs[i].vals
        fd = dst.fs[i].vals[alpha.vals]
        gd = dst.gs[i].vals[alpha.vals]
        p, fl, a, b = kernels.conju_counts(f[phis], g[phis], fd[phis], gd[phis], md)
        prem += p
        fails += fl
        if fl and wit is None:
            wit = (a, b)
    return ConjuCounts(prem, fails, wit)


@dataclass(frozen=True)
class JppFrame:
    A: PathGraph
    B: PathGraph
    Ap: PathGraph
    Bp: PathGraph
    Aplus: PathGraph
    Bplus: PathGraph
    alpha: GraphMap
    alphap: GraphMap
    beta: GraphMap
    betap: GraphMap


def zigzag(count: int, width: int) -> np.ndarray:
    """j -> j mod width on even blocks, width-1-(j mod width) on odd blocks."""
    j = np.arange(count * width, dtype=np.int64)
    r = j % width
    odd = (j // width) % 2 == 1
    return np.where(odd, width - 1 - r, r)


def build_frame(A: PathGraph, B: PathGraph, Ap: PathGraph, Bp: PathGraph) -> JppFrame:
    n, m, n2, m2 = A.size, B.size, Ap.size, Bp.size
    Aplus, Bplus = PathGraph(n * n2), PathGraph(m * m2)
    beta = GraphMap(Bplus, B, zigzag(m2, m))
    betap = GraphMap(Bplus, Bp, np.arange(m * m2, dtype=np.int64) // m)
    alpha = GraphMap(Aplus, A, zigzag(n2, n))
    alphap = GraphMap(Aplus, Ap, np.arange(n * n2, dtype=np.int64) // n)
    for mm in (alpha, alphap, beta, betap):
        if not is_epi(mm):
            raise ConstructionInvariantError("frame map is not an epimorphism")
    return JppFrame(A, B, Ap, Bp, Aplus, Bplus, alpha, alphap, beta, betap)


def encode(cp: np.ndarray, b: np.ndarray, m: int) -> np.ndarray:
    """Vertex of B+ with beta-value b in the block cp."""
    return cp * m + np.where(cp % 2 == 0, b, m - 1 - b)


@dataclass
class LiftReport:
    """Chosen transition indices, one per block (None without a transition)."""

    s: list[int | None] = field(default_factory=list)
    literal: list[int | None] = field(default_factory=list)


def lift_fplus(frame: JppFrame, f: GraphMap, fp: GraphMap, report: LiftReport | None = None) -> GraphMap:
    """f+: A+ -> B+ with f∘alpha == beta∘f+ and (fp∘alpha') R (beta'∘f+).

    Within block j of A+ the B'-coordinate is fp(j) up to a transition
    index s_j and fp(j+1) after it. s_j is the least index where f∘alpha
    takes the value at which the zigzag blocks of B+ meet twice in a row
    and the block head up to s_j already covers B; this keeps f+ onto.
    """
    A, B = frame.A, frame.B
    if f.dom != A or f.cod != B or fp.dom != frame.Ap or fp.cod != frame.Bp:
        raise ShapeError("f, fp must match the frame")
    if not is_epi(f) or not is_epi(fp):
        raise PreconditionError("f and fp must be epimorphisms")
    n, m, n2 = A.size, B.size, frame.Ap.size
    if m > 1 and min_fiber_component(f) < 2:
        raise PreconditionError("f has a fiber component with fewer than 2 vertices", clause="*1")
    w = f.vals[frame.alpha.vals]
    cp = np.empty(n * n2, dtype=np.int64)
    fpv = fp.vals
    for j in range(n2):
        lo, hi = j * n, (j + 1) * n
        c = int(fpv[j])
        cp[lo:hi] = c
        if report is not None:
            report.s.append(None)
            report.literal.append(None)
        if j == n2 - 1 or int(fpv[j + 1]) == c:
            continue
        nxt = int(fpv[j + 1])
        up = nxt > c
        e = m - 1 if ((c % 2 == 0) == up) else 0
        blk = w[lo:hi]
        hits = np.flatnonzero(blk == e)
        if hits.shape[0] == 0:
            raise ConstructionInvariantError("block misses a value of B")
        lit = int(hits[0])
        if lit + 1 >= n or blk[lit + 1] != e:
            raise ConstructionInvariantError("first meeting value is not doubled")
        pairs = np.flatnonzero((blk[:-1] == e) & (blk[1:] == e))
        seen_lo = np.minimum.accumulate(blk)
        seen_hi = np.maximum.accumulate(blk)
        covered = (seen_lo == 0) & (seen_hi == m - 1)
        ok = pairs[covered[pairs]]
        if ok.shape[0] == 0:
            raise PreconditionError(
                f"block {j}: no doubled meeting value after the block head covers B; "
                "stretch f with fold_stretch first",
                clause="*1",
            )
        s = int(ok[0])
        if report is not None:
            report.s[-1] = lo + s
            report.literal[-1] = lo + lit
        cp[lo + s + 1 : hi] = nxt
    fplus = GraphMap(frame.Aplus, frame.Bplus, encode(cp, w, m))
    if not is_epi(fplus):
        raise ConstructionInvariantError("f+ is not an epimorphism")
    if not np.array_equal(frame.beta.vals[fplus.vals], w):
        raise ConstructionInvariantError("f∘alpha != beta∘f+")
    if int(np.abs(frame.betap.vals[fplus.vals] - fpv[frame.alphap.vals]).max()) > 1:
        raise ConstructionInvariantError("fp∘alpha' is not R-close to beta'∘f+")
    return fplus


def fold_stretch(n: int, s: int = 2) -> GraphMap:
    """Walk 0..n-1..0..n-1 on A, each vertex repeated s times.

    Every pullback of an epimorphism along it has doubled fibers and
    passes through A three times, so each block of the joint projection
    frame sees all of B before it needs to change blocks.
    """
    if n == 1:
        walk = np.zeros(1, dtype=np.int64)
    else:
        up = np.arange(n, dtype=np.int64)
        walk = np.concatenate((up, up[::-1][1:], up[1:]))
    vals = np.repeat(walk, s)
    return GraphMap(PathGraph(int(vals.shape[0])), PathGraph(n), vals)


@dataclass(frozen=True)
class WitnessReport:
    exact: tuple[bool, ...]
    approx: tuple[bool, ...]
    maxdist: tuple[int, ...]


def jpp_witness(src: KpObject, dst: KpObject) -> tuple[KpObject, GraphMap, GraphMap, WitnessReport]:
    """A common pair object projecting exactly to src and approximately to dst."""
    if src.arity != dst.arity:
        raise ShapeError("src and dst must have the same arity")
    sigma = fold_stretch(src.A.size)
    frame = build_frame(sigma.dom, src.B, dst.A, dst.B)
    fplus = tuple(lift_fplus(frame, compose(f, sigma), fd) for f, fd in zip(src.fs, dst.fs))
    gplus = tuple(lift_fplus(frame, compose(g, sigma), gd) for g, gd in zip(src.gs, dst.gs))
    plus = KpObject(frame.Aplus, frame.Bplus, fplus, gplus)
    alpha = compose(sigma, frame.alpha)
    alphap = frame.alphap
    n = src.arity
    dist = tuple(kp_distance(alphap, plus, dst, i) for i in range(n))
    rep = WitnessReport(
        exact=tuple(is_kp_epi(alpha, plus, src, i) for i in range(n)),
        approx=tuple(d <= 1 for d in dist),
        maxdist=dist,
    )
    return plus, alpha, alphap, rep


def pair_objects(a: int, b: int) -> Iterator[tuple[GraphMap, GraphMap]]:
    """All (f, g) pairs of epimorphisms a -> b."""
    rows = epi_array(a, b)
    A, B = PathGraph(a), PathGraph(b)
    for i in range(rows.shape[0]):
        f = GraphMap(A, B, rows[i])
        for k in range(rows.shape[0]):
            yield f, GraphMap(A, B, rows[k])


@dataclass(frozen=True)
class SweepLine:
    instance: str
    exact: bool
    approx: bool
    maxdist: int

    def to_text(self) -> str:
        return f"{self.instance} exact={str(self.exact).lower()} approx={str(self.approx).lower()} maxdist={self.maxdist}"


def _size_quads(max_a: int, max_b: int) -> Iterator[tuple[int, int, int, int]]:
    for a in range(1, max_a + 1):
        for b in range(1, min(a, max_b) + 1):
            for a2 in range(1, max_a + 1):
                for b2 in range(1, min(a2, max_b) + 1):
                    yield a, b, a2, b2


def jpp_sweep(max_a: int, max_b: int, arity: int = 1, samples: int = 2000, seed: int = 0) -> Iterator[SweepLine]:
    """Joint-projection witnesses over small pair objects.

    Arity 1 is exhaustive: every (f, g) on A -> B against every (f', g') on
    A' -> B'. The witness treats each index separately over one shared
    frame, so larger arities are sampled (seeded) instead.
    """
    if max_a < 1 or max_b < 1 or arity < 1:
        raise PreconditionError("sizes and arity must be >= 1")
    if arity == 1:
        yield from _sweep_exhaustive(max_a, max_b)
        return
    rng = np.random.default_rng(seed)
    quads = list(_size_quads(max_a, max_b))
    epis = {}
    for t in range(samples):
        a, b, a2, b2 = quads[int(rng.integers(len(quads)))]
        for key in ((a, b), (a2, b2)):
            if key not in epis:
                epis[key] = epi_array(*key)
        E, E2 = epis[(a, b)], epis[(a2, b2)]

        def pick(rows: np.ndarray, n: int, m: int) -> GraphMap:
            return GraphMap(PathGraph(n), PathGraph(m), rows[int(rng.integers(rows.shape[0]))])

        src = KpObject(PathGraph(a), PathGraph(b), [pick(E, a, b) for _ in range(arity)], [pick(E, a, b) for _ in range(arity)])
        dst = KpObject(PathGraph(a2), PathGraph(b2), [pick(E2, a2, b2) for _ in range(arity)], [pick(E2, a2, b2) for _ in range(arity)])
        _, _, _, rep = jpp_witness(src, dst)
        yield SweepLine(f"s{t}-a{a}b{b}-a{a2}b{b2}", all(rep.exact), all(rep.approx), max(rep.maxdist))


def _sweep_exhaustive(max_a: int, max_b: int) -> Iterator[SweepLine]:
    for a, b, a2, b2 in _size_quads(max_a, max_b):
        E = [GraphMap(PathGraph(a), PathGraph(b), r) for r in epi_array(a, b)]
        E2 = [GraphMap(PathGraph(a2), PathGraph(b2), r) for r in epi_array(a2, b2)]
        sigma = fold_stretch(a)
        frame = build_frame(sigma.dom, PathGraph(b), PathGraph(a2), PathGraph(b2))
        alpha = compose(sigma, frame.alpha)
        lifts = {(i, j): lift_fplus(frame, compose(f, sigma), fd) for i, f in enumerate(E) for j, fd in enumerate(E2)}
        n = 0
        for i, f in enumerate(E):
            for k, g in enumerate(E):
                src = KpObject.single(f, g)
                for j, fd in enumerate(E2):
                    for l, gd in enumerate(E2):
                        plus = KpObject.single(lifts[(i, j)], lifts[(k, l)])
                        dst = KpObject.single(fd, gd)
                        d = kp_distance(frame.alphap, plus, dst)
                        yield SweepLine(f"a{a}b{b}-a{a2}b{b2}-{n}", is_kp_epi(alpha, plus, src), d <= 1, d)
                        n += 1
