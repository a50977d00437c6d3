from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathtower.errors import ParseError, PreconditionError
from pathtower.graphs import Interval, PathGraph
from pathtower.maps import GraphMap, compose, is_epi
from pathtower.pseudoarc_s4 import (
    CertificateReport,
    DecoratedTower,
    TaskSpec,
    build,
    mutation_scan,
    parse_tasks,
    plan,
    seed,
    step_4k,
    verify_blacksquare,
)
from pathtower.s4 import check_step_4k, check_step_4k1, check_step_4k2, check_step_4k3, step_4k1, step_4k2, step_4k3

ROUND1_SIZES = [1, 3, 21, 363, 1089, 8460]


@pytest.fixture(scope="module")
def dt1() -> DecoratedTower:
    return build(1)


def test_seed_is_the_base_state() -> None:
    s = seed()
    assert [g.size for g in s.levels] == [1, 3]
    assert s.Kat(-1) == Interval(0, 0) and s.Kat(0) == Interval(1, 1)
    assert build(0).same_as(s)
    assert verify_blacksquare(s).ok


def test_build_rejects_bad_input() -> None:
    with pytest.raises(PreconditionError):
        build(-1)
    with pytest.raises(PreconditionError):
        build(1, [TaskSpec(4, "identity")])


def test_round_one_sizes(dt1: DecoratedTower) -> None:
    assert [g.size for g in dt1.levels] == ROUND1_SIZES
    assert sorted(dt1.L) == [2, 3]
    assert set(dt1.decos) == {("h", 0), ("hbullet", 0), ("g", 0), ("f", 0), ("fprime", 0), ("h", 1)}


def test_round_one_certificate_passes(dt1: DecoratedTower) -> None:
    rep = verify_blacksquare(dt1)
    assert rep.ok, rep.failures()
    clauses = {ln.clause for ln in rep.lines}
    expected = {"■1", "■2", "■3", "■4(π)", "■5", "■6", "■7(a)", "■8(a)", "■8(b)", "■8(c)", "■9(a)", "■9(b)",
                "■9(c)", "■9(d)", "■9(e)", "■10(a)", "■10(b)", "■10(c)", "■10(d)", "■10(e)", "■10(f)",
                "slide-comm", "contract-chain", "■11", "growth"}
    assert expected <= clauses
    assert any(ln.clause == "■11" and "genericity: scheduled tasks only" in ln.detail for ln in rep.lines)


def test_l_not_related_to_k(dt1: DecoratedTower) -> None:
    line = next(ln for ln in verify_blacksquare(dt1).lines if ln.clause == "■9(c)")
    assert line.ok and line.detail.endswith("is 172")
    K2, L2 = dt1.Kat(2), dt1.L[2]
    assert max(L2.lo - K2.hi, K2.lo - L2.hi) == 172


def test_shift_two_on_interior(dt1: DecoratedTower) -> None:
    L3, L2 = dt1.L[3], dt1.L[2]
    f, fp = dt1.deco("f", 0).vals, dt1.deco("fprime", 0).vals
    x = dt1.bond(2).vals[L3.lo : L3.hi + 1]
    inner = (x >= L2.lo + 2) & (x <= L2.hi - 2)
    assert inner.sum() > 0
    assert np.all(np.abs(f - fp)[L3.lo : L3.hi + 1][inner] == 2)


def test_steps_reproduce_round_one(dt1: DecoratedTower) -> None:
    s = seed()
    r1 = step_4k(s.J(-1), s.Kat(-1), s.J(0), s.Kat(0), s.bond(-1), s.deco("h", 0))
    assert check_step_4k(s.J(0), s.Kat(0), s.bond(-1), s.deco("h", 0), r1) == []
    r2 = step_4k1(s.J(0), s.Kat(0), r1.J, r1.K, r1.pi, r1.hbullet)
    assert check_step_4k1(r1.J, r1.K, r1.pi, r1.hbullet, r2) == []
    r3 = step_4k2(r1.J, r1.K, r2.J, r2.K, r2.L, r2.pi, r2.g)
    assert check_step_4k2(r1.J, r2.J, r2.K, r2.L, r2.pi, r2.g, r3) == []
    r4 = step_4k3(r2.J, r2.K, r2.L, r3.J, r3.K, r3.L, r3.pi, r3.f, None)
    assert check_step_4k3(r3.J, r3.K, r3.pi, r3.f, None, r4) == []
    assert r4.J.size == dt1.J(4).size and r4.pi == dt1.bond(3)


def test_step_4k_rejects_bad_hypotheses() -> None:
    s = seed()
    with pytest.raises(PreconditionError):
        step_4k(s.J(-1), s.Kat(-1), PathGraph(3), Interval(0, 0), s.bond(-1), s.deco("h", 0))


def test_report_text_round_trip(dt1: DecoratedTower) -> None:
    rep = verify_blacksquare(dt1)
    back = CertificateReport.from_text(rep.to_text())
    assert back.lines == rep.lines and back.notes == rep.notes
    with pytest.raises(ParseError):
        CertificateReport.from_text("stage=0 clause=x status=maybe detail=y\n")


def test_dtower_text_round_trip(dt1: DecoratedTower) -> None:
    txt = dt1.to_text()
    back = DecoratedTower.from_text(txt)
    assert back.to_text() == txt
    buf = io.StringIO()
    dt1.write(buf)
    assert buf.getvalue() == txt
    assert back.digest() == dt1.digest()


def test_dtower_parse_errors() -> None:
    txt = seed().to_text().splitlines()
    with pytest.raises(ParseError):
        DecoratedTower.from_text("\n".join(txt[:-1]))
    bad = list(txt)
    bad[3] = "K level=-1 [0,5]"
    with pytest.raises(ParseError) as e:
        DecoratedTower.from_text("\n".join(bad))
    assert e.value.line == 4
    with pytest.raises(ParseError):
        DecoratedTower.from_text("\n".join(txt[:-1] + ["mystery line", "end dtower"]))


def test_tampered_interval_fails_a_clause(dt1: DecoratedTower) -> None:
    K = list(dt1.K)
    K[3] = Interval(K[3].lo, K[3].hi + 1)
    bad = DecoratedTower(dt1.levels, dt1.bonds, tuple(K), dict(dt1.L), dict(dt1.decos), dt1.tasks)
    assert not verify_blacksquare(bad).ok


def test_plan_dependencies_name_real_maps(dt1: DecoratedTower) -> None:
    keys = set(dt1.map_keys())
    for ch in plan(dt1):
        assert ch.deps <= keys


def test_lower_maps_fully_mutation_sensitive(dt1: DecoratedTower) -> None:
    """Every +-1 flip in any map below the top level is caught."""
    top_keys = {("bond", dt1.top - 1), ("h", 1)}
    keys = [k for k in dt1.map_keys() if k not in top_keys]
    res = mutation_scan(dt1, keys=keys)
    assert res.tried > 5000
    assert res.all_caught, res.missed[:5]


def test_top_maps_mutation_frozen(dt1: DecoratedTower) -> None:
    # measured by an exhaustive scan; the top decoration is not pinned down by the clauses
    res = mutation_scan(dt1, keys=[("bond", dt1.top - 1)])
    assert (res.tried, res.tried - res.caught) == (16902, 22)


@pytest.mark.parametrize("kind", ["identity", "repetition", "reflect", "random"])
@pytest.mark.parametrize("stage", [-1, 0, 1, 2, 3])
def test_tasks_are_absorbed(kind: str, stage: int) -> None:
    dt = build(1, [TaskSpec(stage, kind, size=12, seed=stage + 5)])
    assert len(dt.tasks) == 1
    r = dt.tasks[0]
    assert compose(r.phi, r.phiplus) == dt.pi(stage, r.top)
    assert verify_blacksquare(dt).ok


def test_explicit_task_map() -> None:
    phi = GraphMap.of([0, 1, 2, 2, 1, 0], cod=3)
    dt = build(1, [TaskSpec(0, "map", explicit=phi)])
    assert dt.tasks[0].phi == phi and verify_blacksquare(dt).ok


@given(st.integers(-1, 3), st.sampled_from(["repetition", "random", "reflect"]), st.integers(1, 40), st.integers(0, 999))
@settings(max_examples=12, deadline=None)
def test_random_tasks_keep_certificate(stage: int, kind: str, size: int, sd: int) -> None:
    dt = build(1, [TaskSpec(stage, kind, factor=2, size=size, seed=sd)])
    assert verify_blacksquare(dt).ok


def test_wrong_task_witness_fails_clause_11() -> None:
    dt = build(1, [TaskSpec(1, "repetition")])
    r = dt.tasks[0]
    v = r.phiplus.vals.copy()
    v[0] = 1 - v[0] if v[0] <= 1 else v[0] - 1
    flipped = GraphMap(r.phiplus.dom, r.phiplus.cod, v)
    bad = dt.replace_map(("task", 0), flipped)
    rep = verify_blacksquare(bad)
    assert [ln.clause for ln in rep.failures()] == ["■11"]


def test_parse_tasks_round_trip_and_errors() -> None:
    specs = [TaskSpec(1, "repetition", factor=3), TaskSpec(2, "random", size=9, seed=4), TaskSpec(0, "reflect"),
             TaskSpec(-1, "map", explicit=GraphMap.of([0], cod=1))]
    text = "\n".join(ln for s in specs for ln in s.to_lines()) + "\n"
    assert parse_tasks(text) == specs
    for bad in ("task stage=1 kind=weird", "task stage=1 kind=repetition colour=2", "task stage=x kind=identity",
                "task stage=1 kind=map"):
        with pytest.raises(ParseError):
            parse_tasks(bad)
