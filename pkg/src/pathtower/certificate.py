"""Re-checking a decorated tower clause by clause.

Every check declares which maps it reads, so a single changed map can be
re-verified without running the whole certificate.
"""
from __future__ import annotations

import re
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .graphs import Interval, interval_gap
from .maps import GraphMap, is_epi
from .s4 import DECO_NAMES, DecoratedTower, gaps, touching_ends
from .ltypes import type_signature

NOTES = (
    "genericity: scheduled tasks only",
    "■7(b) is checked as f_(k-1)∘π(4k-1,4k) = π(4k-2,4k-1)∘h_k, the square that type-checks",
    "■8(b) compares the types of h•_k and π(4k,4k+1)",
    "■5 endpoints-to-endpoints: each end of K_(i+1) lands on an end of K_i",
    "contract-chain: pointwise over top-level vertices z and all y R h_(k+1)(π(4k+4,N)(z))",
    "limit statements about the inverse limit are not certified",
)

_LINE_RE = re.compile(r"stage=(-?\d+) clause=(\S+) status=(pass|fail) detail=(.*)")


@dataclass(frozen=True)
class Line:
    stage: int
    clause: str
    ok: bool
    detail: str

    def to_text(self) -> str:
        return f"stage={self.stage} clause={self.clause} status={'pass' if self.ok else 'fail'} detail={self.detail}"


@dataclass
class CertificateReport:
    lines: list[Line]
    notes: tuple[str, ...] = NOTES

    @property
    def ok(self) -> bool:
        return all(ln.ok for ln in self.lines)

    def failures(self) -> list[Line]:
        return [ln for ln in self.lines if not ln.ok]

    def to_text(self) -> str:
        out = [f"# note: {n}" for n in self.notes]
        out += [ln.to_text() for ln in self.lines]
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> CertificateReport:
        from .errors import ParseError

        lines, notes = [], []
        for no, raw in enumerate(text.splitlines(), 1):
            s = raw.strip()
            if not s:
                continue
            if s.startswith("# note: "):
                notes.append(s[len("# note: ") :])
                continue
            if s.startswith("#"):
                continue
            m = _LINE_RE.fullmatch(s)
            if m is None:
                raise ParseError("expected 'stage=<i> clause=<id> status=pass|fail detail=<text>'", no, 1)
            lines.append(Line(int(m.group(1)), m.group(2), m.group(3) == "pass", m.group(4)))
        return cls(lines, tuple(notes))


class Ctx:
    """Read access to a decorated tower with a small cache of composites."""

    def __init__(self, dt: DecoratedTower, cache_size: int = 6) -> None:
        self.dt = dt
        self._cache: OrderedDict = OrderedDict()
        self._size = cache_size

    def bond(self, i: int) -> np.ndarray:
        return self.dt.bond(i).vals

    def deco(self, name: str, k: int) -> np.ndarray:
        return self.dt.decos[(name, k)].vals

    def pi(self, i: int, j: int) -> np.ndarray:
        """Values of the composite bond J_j -> J_i."""
        if i == j:
            return np.arange(self.dt.J(i).size, dtype=np.int64)
        if j == i + 1:
            return self.bond(i)
        key = (i, j)
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        v = self.bond(i)[self.pi(i + 1, j)]
        self._cache[key] = v
        if len(self._cache) > self._size:
            self._cache.popitem(last=False)
        return v


Result = tuple[bool, str]


@dataclass(frozen=True)
class Check:
    stage: int
    clause: str
    deps: frozenset
    fn: Callable[[Ctx], Result] = field(compare=False)


def _B(i: int) -> tuple:
    return ("bond", i)


def _same_arr(a: np.ndarray, b: np.ndarray, what: str) -> Result:
    if a.shape != b.shape:
        return False, f"{what}: shapes differ"
    bad = np.flatnonzero(a != b)
    if bad.shape[0]:
        return False, f"{what}: first difference at vertex {int(bad[0])}"
    return True, what


def _onto(v: np.ndarray, I: Interval, lo: int, hi: int) -> bool:
    seg = v[I.lo : I.hi + 1]
    return int(seg.min()) == lo and int(seg.max()) == hi


def _ends(v: np.ndarray, I: Interval, T: Interval) -> bool:
    return T.is_endpoint(int(v[I.lo])) and T.is_endpoint(int(v[I.hi]))


def _contracts3(v: np.ndarray) -> int:
    """Largest |v(a)-v(b)| over |a-b| <= 3."""
    worst = 0
    for d in range(1, min(3, v.shape[0] - 1) + 1):
        worst = max(worst, int(np.abs(v[d:] - v[:-d]).max()))
    return worst


def _components_check(a: np.ndarray, b: np.ndarray, n: int, holes: list[Interval], top: int, names: str) -> Result:
    for C in gaps(n, holes):
        if not _onto(a, C, 0, top) or not _onto(b, C, 0, top):
            return False, f"{C.to_text()} is not mapped onto the level below by {names}"
        for x in touching_ends(C, holes):
            if not np.array_equal(type_signature(a, x, C), type_signature(b, x, C)):
                return False, f"types of {names} differ at {x} in {C.to_text()}"
    return True, f"{len(gaps(n, holes))} components onto, boundary types agree"


def plan(dt: DecoratedTower) -> list[Check]:
    """Every check that applies to the structure of dt, in report order."""
    checks: list[Check] = []
    N = dt.top
    decos = dt.decos

    def add(stage: int, clause: str, deps: Iterable[tuple], fn: Callable[[Ctx], Result]) -> None:
        checks.append(Check(stage, clause, frozenset(deps), fn))

    def has(name: str, k: int) -> bool:
        return (name, k) in decos

    add(-1, "■3", (), lambda c: (c.dt.J(-1).size == 1 and c.dt.Kat(-1) == Interval(0, 0), "one-vertex base level"))
    for i in range(-1, N + 1):
        add(i, "■1", (), lambda c, i=i: (c.dt.J(i).size >= 1, f"|J_{i}|={c.dt.J(i).size}"))
        add(i, "■2", (), lambda c, i=i: (c.dt.Kat(i).fits(c.dt.J(i)), f"K_{i}={c.dt.Kat(i).to_text()}"))

    owner = {0: "h", 1: "hbullet", 2: "g", 3: "f"}
    for i in range(-1, N):
        def epi_fn(c: Ctx, i=i) -> Result:
            b = c.dt.bond(i)
            return is_epi(b), f"|J_{i + 1}|={b.dom.size} -> |J_{i}|={b.cod.size}"

        add(i, "■4(π)", [_B(i)], epi_fn)
        j = i + 1
        name, k = owner[j % 4], j // 4
        deps = [_B(i)] + ([(name, k)] if has(name, k) else [])

        def k_fn(c: Ctx, i=i, name=name, k=k) -> Result:
            v = c.bond(i)
            Kh, Kl = c.dt.Kat(i + 1), c.dt.Kat(i)
            if not _onto(v, Kh, Kl.lo, Kl.hi):
                return False, f"π[K_{i + 1}] != K_{i}"
            if not _ends(v, Kh, Kl):
                return False, f"an end of K_{i + 1} misses the ends of K_{i}"
            if (name, k) in c.dt.decos:
                d = c.deco(name, k)
                if not np.array_equal(v[Kh.lo : Kh.hi + 1], d[Kh.lo : Kh.hi + 1]):
                    return False, f"π and {name}_{k} differ on K_{i + 1}"
                return True, f"π[K_{i + 1}]=K_{i}, agrees with {name}_{k}"
            return True, f"π[K_{i + 1}]=K_{i}"

        add(i, "■5", deps, k_fn)

        def c3(c: Ctx, i=i) -> Result:
            w = _contracts3(c.bond(i))
            return w <= 1, f"max displacement over R^3 pairs = {w}"

        add(i, "■6", [_B(i)], c3)
        add(i, "growth", (), lambda c, i=i: (c.dt.J(i).size <= c.dt.J(i + 1).size, f"{c.dt.J(i).size} <= {c.dt.J(i + 1).size}"))

    cod_stage = {"h": -1, "hbullet": 0, "g": 1, "f": 2, "fprime": 2}
    for (name, k) in sorted(decos, key=lambda t: (t[1], DECO_NAMES.index(t[0]))):
        st = 4 * k + cod_stage[name]

        def depi(c: Ctx, name=name, k=k, st=st) -> Result:
            m = c.dt.decos[(name, k)]
            ok = m.dom == c.dt.J(st + 1) and m.cod == c.dt.J(st) and is_epi(m)
            return ok, f"{name}_{k}: J_{st + 1} -> J_{st}"

        add(st, f"■4({name})", [(name, k)], depi)
    for k in range(0, N // 4 + 1):
        b = 4 * k
        if not has("h", k) or b > N:
            continue

        def s7a(c: Ctx, k=k, b=b) -> Result:
            return _components_check(c.bond(b - 1), c.deco("h", k), c.dt.J(b).size, [c.dt.Kat(b)], c.dt.J(b - 1).size - 1, f"π and h_{k}")

        add(b - 1, "■7(a)", [_B(b - 1), ("h", k)], s7a)
        if k >= 1 and has("f", k - 1):
            def s7b(c: Ctx, k=k, b=b) -> Result:
                lhs = c.deco("f", k - 1)[c.bond(b - 1)]
                rhs = c.bond(b - 2)[c.deco("h", k)]
                return _same_arr(lhs, rhs, f"f_{k - 1}∘π = π∘h_{k}")

            add(b - 1, "■7(b)", [("f", k - 1), _B(b - 1), _B(b - 2), ("h", k)], s7b)
        if has("hbullet", k) and b + 1 <= N:
            def s8a(c: Ctx, k=k, b=b) -> Result:
                lhs = c.deco("h", k)[c.deco("hbullet", k)]
                return _same_arr(lhs, c.pi(b - 1, b + 1), f"h_{k}∘h•_{k} = π∘π")

            add(b, "■8(a)", [("h", k), ("hbullet", k), _B(b - 1), _B(b)], s8a)

            def s8b(c: Ctx, k=k, b=b) -> Result:
                return _components_check(c.bond(b), c.deco("hbullet", k), c.dt.J(b + 1).size, [c.dt.Kat(b + 1)], c.dt.J(b).size - 1, f"π and h•_{k}")

            add(b, "■8(b)", [_B(b), ("hbullet", k)], s8b)

            def s8c(c: Ctx, k=k) -> Result:
                w = _contracts3(c.deco("hbullet", k))
                return w <= 1, f"max displacement of h•_{k} over R^3 pairs = {w}"

            add(b, "■8(c)", [("hbullet", k)], s8c)
        if has("g", k) and (b + 2) in dt.L and b + 2 <= N:
            _plan_9(add, k, b)
        if has("f", k) and has("fprime", k) and (b + 3) in dt.L and b + 3 <= N:
            _plan_10(add, k, b)
        if has("h", k + 1) and b + 4 <= N and has("hbullet", k) and has("g", k) and has("f", k):
            def contract(c: Ctx, k=k, b=b, N=N) -> Result:
                top = c.dt.J(N).size
                w = c.deco("h", k + 1)[c.pi(b + 4, N)]
                target = c.deco("h", k)[c.pi(b, N)]
                down = c.pi(b - 1, b + 3)
                n3 = c.dt.J(b + 3).size
                worst = 0
                for d in (-1, 0, 1):
                    y = w + d
                    ok = (y >= 0) & (y < n3)
                    if ok.any():
                        worst = max(worst, int(np.abs(down[y[ok]] - target[ok]).max()))
                return worst <= 1, f"max distance {worst} over {top} top vertices"

            deps = [("h", k + 1), ("h", k)] + [_B(t) for t in range(b - 1, N)]
            add(b - 1, "contract-chain", deps, contract)
    if dt.tasks:
        for n, r in enumerate(dt.tasks):
            def s11(c: Ctx, n=n) -> Result:
                r = c.dt.tasks[n]
                if not (0 <= r.top <= c.dt.top) or r.stage > r.top or r.phi.cod != c.dt.J(r.stage) or r.phiplus.dom != c.dt.J(r.top) or r.phiplus.cod != r.phi.dom:
                    return False, "genericity: scheduled tasks only; task maps have the wrong shape"
                if not is_epi(r.phi) or not is_epi(r.phiplus):
                    return False, "genericity: scheduled tasks only; task maps must be epimorphisms"
                ok, d = _same_arr(r.phi.vals[r.phiplus.vals], c.pi(r.stage, r.top), f"φ∘φ+ = π({r.stage},{r.top})")
                return ok, f"genericity: scheduled tasks only; {d}"

            st = r.stage
            add(st, "■11", [("task", n)] + [_B(t) for t in range(st, r.top)], s11)
    else:
        add(-1, "■11", (), lambda c: (True, "genericity: scheduled tasks only; no tasks scheduled"))
    checks.sort(key=lambda ch: ch.stage)
    return checks


def _plan_9(add, k: int, b: int) -> None:
    i = b + 1
    deps_pg = [_B(i), ("g", k)]

    def s9a(c: Ctx) -> Result:
        v, L, Kl = c.bond(i), c.dt.L[i + 1], c.dt.Kat(i)
        return _onto(v, L, Kl.lo, Kl.hi) and _ends(v, L, Kl), f"π[L_{i + 1}] = K_{i}, ends to ends"

    def s9b(c: Ctx) -> Result:
        L = c.dt.L[i + 1]
        return _same_arr(c.bond(i)[L.lo : L.hi + 1], c.deco("g", k)[L.lo : L.hi + 1], f"π = g_{k} on L_{i + 1}")

    def s9c(c: Ctx) -> Result:
        gap = interval_gap(c.dt.L[i + 1], c.dt.Kat(i + 1))
        return gap >= 2, f"distance between L_{i + 1} and K_{i + 1} is {gap}"

    def s9d(c: Ctx) -> Result:
        holes = [c.dt.Kat(i + 1), c.dt.L[i + 1]]
        n = c.dt.J(i + 1).size
        if len(gaps(n, holes)) != 3:
            return False, "J minus K and L does not have 3 components"
        return _components_check(c.bond(i), c.deco("g", k), n, holes, c.dt.J(i).size - 1, f"π and g_{k}")

    def s9e(c: Ctx) -> Result:
        lhs = c.deco("hbullet", k)[c.deco("g", k)]
        return _same_arr(lhs, c.pi(b, b + 2), f"h•_{k}∘g_{k} = π∘π")

    add(i, "■9(a)", [_B(i)], s9a)
    add(i, "■9(b)", deps_pg, s9b)
    add(i, "■9(c)", (), s9c)
    add(i, "■9(d)", deps_pg, s9d)
    add(i, "■9(e)", [("hbullet", k), ("g", k), _B(b), _B(b + 1)], s9e)


def _plan_10(add, k: int, b: int) -> None:
    i = b + 2

    def s10a(c: Ctx) -> Result:
        v, L3, L2 = c.bond(i), c.dt.L[i + 1], c.dt.L[i]
        return _onto(v, L3, L2.lo, L2.hi) and _ends(v, L3, L2), f"π[L_{i + 1}] = L_{i}, ends to ends"

    def s10b(c: Ctx) -> Result:
        L = c.dt.L[i + 1]
        return _same_arr(c.bond(i)[L.lo : L.hi + 1], c.deco("fprime", k)[L.lo : L.hi + 1], f"π = f'_{k} on L_{i + 1}")

    def s10c(c: Ctx) -> Result:
        v, fp = c.bond(i), c.deco("fprime", k)
        for C in gaps(c.dt.J(i).size, [c.dt.Kat(i), c.dt.L[i]]):
            inside = (v >= C.lo) & (v <= C.hi)
            idx = np.flatnonzero(inside)
            if idx.shape[0] == 0 or idx[-1] - idx[0] + 1 != idx.shape[0]:
                return False, f"π-preimage of {C.to_text()} is not an interval"
            if not np.array_equal(inside, (fp >= C.lo) & (fp <= C.hi)):
                return False, f"π- and f'-preimages of {C.to_text()} differ"
        return True, "preimages of the 3 components are equal intervals"

    def s10d(c: Ctx) -> Result:
        lhs = c.bond(i - 1)[c.deco("fprime", k)]
        rhs = c.deco("g", k)[c.bond(i)]
        return _same_arr(lhs, rhs, f"π∘f'_{k} = g_{k}∘π")

    def s10e(c: Ctx) -> Result:
        L = c.dt.L[i + 1]
        f, fp = c.deco("f", k), c.deco("fprime", k)
        off = np.ones(f.shape[0], dtype=bool)
        off[L.lo : L.hi + 1] = False
        return _same_arr(f[off], fp[off], f"f_{k} = f'_{k} off L_{i + 1}")

    def s10f(c: Ctx) -> Result:
        L3, L2 = c.dt.L[i + 1], c.dt.L[i]
        d = np.abs(c.deco("f", k) - c.deco("fprime", k))[L3.lo : L3.hi + 1]
        x = c.bond(i)[L3.lo : L3.hi + 1]
        dp = np.abs(c.deco("f", k)[L3.lo : L3.hi + 1] - x)
        inner = (x >= L2.lo + 2) & (x <= L2.hi - 2)
        if int(d.max()) > 2:
            return False, f"|f-f'| reaches {int(d.max())} on L_{i + 1}"
        if not bool(np.all(d[inner] == 2)) or not bool(np.all(dp[inner] == 2)):
            return False, "shift is not exactly 2 on the interior of L"
        note = "" if L2.size >= 5 else " (interior empty: |L| < 5, strict clause vacuous)"
        return True, f"|f-f'| <= 2, exactly 2 on {int(inner.sum())} interior vertices{note}"

    def comm(c: Ctx) -> Result:
        lhs = c.bond(i - 1)[c.deco("f", k)]
        rhs = c.deco("g", k)[c.bond(i)]
        w = int(np.abs(lhs - rhs).max())
        return w <= 1, f"(π∘f_{k}) R (g_{k}∘π): max distance {w}"

    add(i, "■10(a)", [_B(i)], s10a)
    add(i, "■10(b)", [_B(i), ("fprime", k)], s10b)
    add(i, "■10(c)", [_B(i), ("fprime", k)], s10c)
    add(i, "■10(d)", [_B(i - 1), _B(i), ("fprime", k), ("g", k)], s10d)
    add(i, "■10(e)", [("f", k), ("fprime", k)], s10e)
    add(i, "■10(f)", [_B(i), ("f", k), ("fprime", k)], s10f)
    add(i, "slide-comm", [_B(i - 1), _B(i), ("f", k), ("g", k)], comm)


def run_checks(dt: DecoratedTower, checks: list[Check], stop_at_first_fail: bool = False) -> list[Line]:
    ctx = Ctx(dt)
    out: list[Line] = []
    for ch in checks:
        try:
            ok, detail = ch.fn(ctx)
        except (IndexError, ValueError, KeyError) as exc:
            ok, detail = False, f"check could not be evaluated: {exc}"
        out.append(Line(ch.stage, ch.clause, bool(ok), detail))
        if stop_at_first_fail and not ok:
            break
    return out


def verify_blacksquare(dt: DecoratedTower) -> CertificateReport:
    return CertificateReport(run_checks(dt, plan(dt)))


# ----------------------------------------------------------------------------
# mutation scan


@dataclass
class MutationResult:
    tried: int = 0
    caught: int = 0
    missed: list[tuple[tuple, int, int]] = field(default_factory=list)
    by_clause: dict = field(default_factory=dict)
    n_missed_extra: int = 0

    @property
    def all_caught(self) -> bool:
        return self.tried > 0 and self.caught == self.tried


def mutation_scan(
    dt: DecoratedTower,
    keys: list[tuple] | None = None,
    positions_per_map: int | None = None,
    seed: int = 0,
    keep_missed: int = 50,
) -> MutationResult:
    """Change one value of one map at a time (to each neighbouring value,
    v-1 and v+1 where they exist) and re-run the checks reading that map.

    positions_per_map=None tries every position; otherwise a seeded sample.
    """
    rng = np.random.default_rng(seed)
    checks = plan(dt)
    res = MutationResult()
    for key in keys if keys is not None else dt.map_keys():
        base = dt.get_map(key)
        mine = [ch for ch in checks if key in ch.deps]
        n = base.dom.size
        if positions_per_map is None or positions_per_map >= n:
            pos = np.arange(n)
        else:
            pos = np.sort(rng.choice(n, size=positions_per_map, replace=False))
        arr = base.vals.copy()
        for x in pos.tolist():
            old = int(arr[x])
            for new in (old - 1, old + 1):
                if not (0 <= new < base.cod.size):
                    continue
                arr.flags.writeable = True
                arr[x] = new
                arr.flags.writeable = False
                mutant = dt.replace_map(key, GraphMap(base.dom, base.cod, arr))
                lines = run_checks(mutant, mine, stop_at_first_fail=True)
                res.tried += 1
                bad = [ln for ln in lines if not ln.ok]
                if bad:
                    res.caught += 1
                    res.by_clause[bad[0].clause] = res.by_clause.get(bad[0].clause, 0) + 1
                elif len(res.missed) < keep_missed:
                    res.missed.append((key, x, new))
                else:
                    res.n_missed_extra += 1
                arr.flags.writeable = True
                arr[x] = old
                arr.flags.writeable = False
    return res
