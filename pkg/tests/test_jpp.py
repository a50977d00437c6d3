from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathtower.errors import ParseError, PreconditionError, ShapeError
from pathtower.graphs import PathGraph
from pathtower.jpp import (
    KpObject,
    LiftReport,
    build_frame,
    check_conju_transport,
    conju_transport_all,
    fold_stretch,
    is_approx_kp_epi,
    is_kp_epi,
    jpp_sweep,
    jpp_witness,
    kp_distance,
    lift_fplus,
)
from pathtower.maps import GraphMap, compose, enumerate_epis, epi_array, is_epi
from pathtower.tower import random_epi


def brute_kp_distance(alpha: GraphMap, src: KpObject, dst: KpObject, i: int = 0) -> int:
    n = src.A.size
    f, g, fd, gd = src.fs[i], src.gs[i], dst.fs[i], dst.gs[i]
    ds = [abs(fd[alpha[a]] - gd[alpha[b]]) for a in range(n) for b in range(n) if f[a] == g[b]]
    return max(ds, default=-1)


def test_frame_spot_check() -> None:
    fr = build_frame(PathGraph(2), PathGraph(3), PathGraph(2), PathGraph(2))
    assert fr.beta.tolist() == [0, 1, 2, 2, 1, 0]
    assert fr.betap.tolist() == [0, 0, 0, 1, 1, 1]


def test_frame_beta_pair_is_injective() -> None:
    fr = build_frame(PathGraph(3), PathGraph(3), PathGraph(4), PathGraph(3))
    pairs = set(zip(fr.beta.tolist(), fr.betap.tolist()))
    assert len(pairs) == fr.Bplus.size


def test_kp_text_round_trip() -> None:
    f = GraphMap.of([0, 1, 1, 0], cod=2)
    g = GraphMap.of([0, 0, 1, 1], cod=2)
    obj = KpObject.single(f, g)
    assert KpObject.from_lines(obj.to_lines()) == obj
    with pytest.raises(ParseError):
        KpObject.from_lines(["kp arity=2"] + obj.to_lines()[1:])


def test_kp_object_rejects_non_epi() -> None:
    with pytest.raises(PreconditionError):
        KpObject.single(GraphMap.of([0, 0], cod=2), GraphMap.of([0, 1], cod=2))


@given(st.integers(1, 4), st.integers(1, 3), st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**31))
@settings(max_examples=150, deadline=None)
def test_lift_fplus_postconditions(a: int, b: int, a2: int, b2: int, seed: int) -> None:
    if b > a or b2 > a2:
        return
    rng = np.random.default_rng(seed)
    f, fp = random_epi(rng, a, b), random_epi(rng, a2, b2)
    sigma = fold_stretch(a)
    fr = build_frame(sigma.dom, PathGraph(b), PathGraph(a2), PathGraph(b2))
    rep = LiftReport()
    fh = compose(f, sigma)
    fplus = lift_fplus(fr, fh, fp, rep)
    assert is_epi(fplus)
    assert compose(fh, fr.alpha) == compose(fr.beta, fplus)
    d = np.abs(compose(fp, fr.alphap).vals - compose(fr.betap, fplus).vals)
    assert int(d.max()) <= 1
    assert len(rep.s) == a2


def test_lift_fplus_needs_doubled_fibers() -> None:
    f = GraphMap.of([0, 1, 2], cod=3)
    fr = build_frame(PathGraph(3), PathGraph(3), PathGraph(2), PathGraph(2))
    with pytest.raises(PreconditionError):
        lift_fplus(fr, f, GraphMap.identity(2))


@given(st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_kp_distance_oracle(seed: int) -> None:
    rng = np.random.default_rng(seed)
    a, b = int(rng.integers(1, 5)), int(rng.integers(1, 4))
    a2, b2 = int(rng.integers(1, 5)), int(rng.integers(1, 4))
    b, b2 = min(a, b), min(a2, b2)
    src = KpObject.single(random_epi(rng, a, b), random_epi(rng, a, b))
    dst = KpObject.single(random_epi(rng, a2, b2), random_epi(rng, a2, b2))
    plus, alpha, alphap, rep = jpp_witness(src, dst)
    assert kp_distance(alpha, plus, src) == brute_kp_distance(alpha, plus, src)
    assert kp_distance(alphap, plus, dst) == brute_kp_distance(alphap, plus, dst)
    assert rep.exact == (True,)
    assert is_kp_epi(alpha, plus, src)
    assert is_approx_kp_epi(alphap, plus, dst) == rep.approx[0]


def test_witness_arity_mismatch() -> None:
    f = GraphMap.of([0, 1], cod=2)
    src = KpObject.single(f, f)
    dst = KpObject(f.dom, f.cod, (f, f), (f, f))
    with pytest.raises(ShapeError):
        jpp_witness(src, dst)


def test_arity_two_decomposes_per_index() -> None:
    rng = np.random.default_rng(5)
    for _ in range(40):
        a, b, a2, b2 = 4, 2, 3, 2
        fs = [random_epi(rng, a, b) for _ in range(4)]
        ds = [random_epi(rng, a2, b2) for _ in range(4)]
        src = KpObject(PathGraph(a), PathGraph(b), fs[:2], fs[2:])
        dst = KpObject(PathGraph(a2), PathGraph(b2), ds[:2], ds[2:])
        _, _, _, rep = jpp_witness(src, dst)
        for i in range(2):
            _, _, _, r1 = jpp_witness(KpObject.single(fs[i], fs[2 + i]), KpObject.single(ds[i], ds[2 + i]))
            assert (rep.exact[i], rep.approx[i], rep.maxdist[i]) == (r1.exact[0], r1.approx[0], r1.maxdist[0])


def test_conju_exact_mode_small() -> None:
    alpha = GraphMap.of([0, 1, 2, 2, 1], cod=3)
    fails = 0
    for f in enumerate_epis(5, 2):
        for fd in enumerate_epis(3, 2):
            src, dst = KpObject.single(f, f), KpObject.single(fd, fd)
            if not is_kp_epi(alpha, src, dst):
                continue
            c = conju_transport_all(alpha, src, dst, 5, "exact")
            fails += c.failures
    assert fails == 0


def test_check_conju_transport_matches_batch() -> None:
    alpha = GraphMap.of([0, 0, 1, 2, 1], cod=3)
    f = GraphMap.of([0, 0, 1, 1, 0], cod=2)
    g = GraphMap.of([0, 1, 1, 0, 0], cod=2)
    fd = GraphMap.of([0, 1, 1], cod=2)
    src, dst = KpObject.single(f, g), KpObject.single(fd, fd)
    phis = epi_array(4, 5)
    J = PathGraph(4)
    for mode in ("exact", "approx"):
        single = 0
        for i in range(phis.shape[0]):
            for k in range(phis.shape[0]):
                ok = check_conju_transport(alpha, src, dst, GraphMap(J, f.dom, phis[i]), GraphMap(J, f.dom, phis[k]), mode)
                single += not ok
        assert single == conju_transport_all(alpha, src, dst, 4, mode).failures


def test_sweep_line_format_and_counts() -> None:
    lines = list(jpp_sweep(2, 2))
    assert lines[0].to_text() == "a1b1-a1b1-0 exact=true approx=true maxdist=0"
    assert all(ln.exact for ln in lines)
    a = list(jpp_sweep(3, 2, arity=2, samples=20, seed=4))
    b = list(jpp_sweep(3, 2, arity=2, samples=20, seed=4))
    assert a == b and len(a) == 20
