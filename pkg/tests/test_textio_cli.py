from __future__ import annotations

import io
from pathlib import Path

import numpy as np
import pytest

from pathtower.cli import run
from pathtower.errors import ParseError
from pathtower.graphs import Interval, PathGraph
from pathtower.jpp import KpObject
from pathtower.ltypes import LType
from pathtower.maps import GraphMap, compose
from pathtower.s4 import DecoratedTower, build
from pathtower.textio import Document
from pathtower.tower import Tower, random_tower


def cli(*argv: str) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    rc = run(list(argv), out, err)
    return rc, out.getvalue(), err.getvalue()


def write(tmp_path: Path, name: str, *blocks) -> str:
    p = tmp_path / name
    Document(list(blocks)).save(p)
    return str(p)


def test_document_round_trip_all_kinds(tmp_path: Path) -> None:
    f = GraphMap.of([0, 1, 1, 0], cod=2)
    blocks = [
        PathGraph(4),
        Interval(1, 3),
        f,
        LType.from_order(3, [1, 0, 2]),
        random_tower(np.random.default_rng(3), [2, 3, 5]),
        KpObject.single(f, GraphMap.of([0, 0, 1, 1], cod=2)),
        build(0),
    ]
    doc = Document(blocks)
    back = Document.from_text(doc.to_text())
    assert back.to_text() == doc.to_text()
    assert [type(b) for b in back] == [type(b) for b in blocks]
    p = tmp_path / "all.txt"
    doc.save(p)
    assert Document.load(p).to_text() == doc.to_text()


def test_document_skips_comments_and_blanks() -> None:
    doc = Document.from_text("# hello\n\ngraph size=3\n  \n# bye\n")
    assert list(doc) == [PathGraph(3)]


def test_unknown_tag_reports_position() -> None:
    with pytest.raises(ParseError) as e:
        Document.from_text("graph size=2\n\nwidget x=1\n")
    assert (e.value.line, e.value.column) == (3, 1)
    assert "unknown block tag 'widget'" in str(e.value)


def test_truncated_tower_is_an_error() -> None:
    with pytest.raises(ParseError):
        Document.from_text("tower levels=3\ngraph size=2\nmap dom=2 cod=2 vals=0,1\n")


def test_check_epi_inline_and_file(tmp_path: Path) -> None:
    assert cli("check-epi", "--map", "dom=4 cod=2 vals=0,1,1,0")[:2] == (0, "epi=true\n")
    assert cli("check-epi", "--map", "dom=3 cod=3 vals=0,1,1")[:2] == (1, "epi=false\n")
    p = write(tmp_path, "m.txt", GraphMap.of([0, 1, 2], cod=3), GraphMap.of([0, 0], cod=2))
    rc, out, _ = cli("check-epi", p)
    assert (rc, out) == (1, "epi=true\nepi=false\n")


def test_bad_input_exit_code(tmp_path: Path) -> None:
    rc, _, err = cli("check-epi", str(tmp_path / "missing.txt"))
    assert rc == 2 and "no such file" in err
    bad = tmp_path / "bad.txt"
    bad.write_text("graph size=2\nbogus\n")
    rc, _, err = cli("check-epi", str(bad))
    assert rc == 2 and "line 2" in err
    assert cli("check-epi", "--map", "dom=2 cod=2 vals=0,5")[0] == 2
    assert cli("no-such-command")[0] == 2
    assert cli("check-epi")[0] == 2


def test_type_command(tmp_path: Path) -> None:
    p = write(tmp_path, "m.txt", GraphMap.of([1, 0, 2, 1], cod=3))
    rc, out, _ = cli("type", p, "--end", "lo")
    assert rc == 0 and out == "type cod=3 chain=[1,1];[0,1];[0,2]\n"
    rc, out, _ = cli("type", p, "--interval", "[1,2]")
    assert rc == 0 and len(out.splitlines()) == 2
    assert cli("type", p, "--interval", "[0,9]")[0] == 2


def test_amalgamate_command(tmp_path: Path) -> None:
    f, fp = GraphMap.of([0, 1, 2, 1, 0], cod=3), GraphMap.of([0, 1, 2, 2, 1, 0], cod=3)
    p = write(tmp_path, "pair.txt", f, fp)
    modes = ([], ["--anchors", "0,0"], ["--anchors", "0,0,4,5"], ["--anchors", "0,0", "--typed", "one"],
             ["--anchors", "0,0,4,5", "--typed", "two"])
    for extra in modes:
        o = tmp_path / "am.txt"
        assert cli("amalgamate", p, *extra, "--out", str(o))[0] == 0
        O, g, gp = list(Document.load(o))
        assert compose(f, g) == compose(fp, gp) and g.dom == O
    assert cli("amalgamate", p, "--typed", "one")[0] == 2
    assert cli("amalgamate", p, "--anchors", "0")[0] == 2
    # mp_plus is not an endpoint of the second domain
    assert cli("amalgamate", p, "--anchors", "0,0,4,3")[0] == 2


def test_jpp_command(tmp_path: Path) -> None:
    src = write(tmp_path, "src.txt", KpObject.single(GraphMap.of([0, 1, 1, 0], cod=2), GraphMap.of([0, 0, 1, 1], cod=2)))
    dst = write(tmp_path, "dst.txt", KpObject.single(GraphMap.of([0, 1, 0], cod=2), GraphMap.of([1, 0, 1], cod=2)))
    rc, out, _ = cli("jpp", "--src", src, "--dst", dst)
    assert rc == 0
    assert out.splitlines()[-1].startswith("index=0 exact=true")


def test_jpp_sweep_report(tmp_path: Path) -> None:
    rep = tmp_path / "sweep.txt"
    rc, out, _ = cli("jpp", "sweep", "--max-a", "2", "--max-b", "2", "--report", str(rep))
    assert rc == 0
    lines = rep.read_text().splitlines()
    assert lines[0] == "a1b1-a1b1-0 exact=true approx=true maxdist=0"
    n_approx = sum("approx=true" in s for s in lines)
    worst = max(int(s.rsplit("=", 1)[1]) for s in lines)
    assert out == f"# instances={len(lines)} exact={len(lines)} approx={n_approx} maxdist={worst}\n"


def test_jpp_sweep_seeded_is_deterministic() -> None:
    a = cli("jpp-sweep", "--max-a", "3", "--max-b", "2", "--arity", "2", "--samples", "15", "--seed", "9")
    b = cli("jpp-sweep", "--max-a", "3", "--max-b", "2", "--arity", "2", "--samples", "15", "--seed", "9")
    assert a == b and a[0] == 0


def test_tower_commands(tmp_path: Path) -> None:
    tp = tmp_path / "t.txt"
    assert cli("tower", "random", "--sizes", "2,3,5", "--seed", "4", "--out", str(tp))[0] == 0
    (t,) = list(Document.load(tp))
    assert isinstance(t, Tower) and [g.size for g in t.levels] == [2, 3, 5]
    mp = write(tmp_path, "f.txt", GraphMap.of([0, 1, 2, 1, 0, 1], cod=3))
    out = tmp_path / "t2.txt"
    rc, text, _ = cli("tower", "absorb", "--tower", str(tp), "--level", "1", "--map", mp, "--out", str(out))
    assert rc == 0 and "absorbed at level 1" in text
    t2, g = list(Document.load(out))
    n = int(text.split("factors through level ")[1].split()[0])
    assert t2.levels[n] == g.dom
    assert compose(GraphMap.of([0, 1, 2, 1, 0, 1], cod=3), g) == t2.pi(1, n)
    rc, text, _ = cli("tower", "hyple", "--tower", str(tp), "--base", "0", "--k", "1")
    assert rc in (0, 1) and text.startswith("level=")
    assert cli("tower", "random", "--sizes", "3,x")[0] == 2


def test_s4_build_and_verify(tmp_path: Path) -> None:
    tw, cert = tmp_path / "dt.txt", tmp_path / "cert.txt"
    tasks = tmp_path / "tasks.txt"
    tasks.write_text("task stage=1 kind=repetition factor=2\n")
    rc, out, _ = cli("s4", "build", "--rounds", "1", "--tasks", str(tasks), "--out", str(tw), "--cert", str(cert))
    assert rc == 0 and "failed=0" in out
    rc, out, _ = cli("verify", "--tower", str(tw), "--cert", str(cert))
    assert rc == 0 and out.endswith("# verify: pass (59 clauses)\n")
    # a certificate that claims something different
    text = cert.read_text(encoding="utf-8")
    cert.write_text(text.replace("status=pass", "status=fail", 1), encoding="utf-8")
    rc, out, _ = cli("verify", "--tower", str(tw), "--cert", str(cert))
    assert rc == 1 and "certificate disagrees at clause line 1" in out
    cert.write_text(text, encoding="utf-8")
    # a tower with one value moved
    (dt,) = list(Document.load(tw))
    m = dt.get_map(("bond", 1))
    v = m.vals.copy()
    v[5] += 1 if v[5] + 1 < m.cod.size else -1
    Document([dt.replace_map(("bond", 1), GraphMap(m.dom, m.cod, v))]).save(tw)
    rc, out, _ = cli("verify", "--tower", str(tw), "--cert", str(cert))
    assert rc == 1 and "status=fail" in out


def test_s4_build_bad_tasks(tmp_path: Path) -> None:
    t = tmp_path / "tasks.txt"
    t.write_text("task stage=1 kind=sideways\n")
    rc, _, err = cli("s4", "build", "--rounds", "1", "--tasks", str(t), "--out", str(tmp_path / "a"), "--cert", str(tmp_path / "b"))
    assert rc == 2 and "line 1" in err


def test_decorated_tower_document_matches_direct_text() -> None:
    dt = build(1)
    assert Document([dt]).to_text() == dt.to_text()
    (back,) = list(Document.from_text(dt.to_text()))
    assert isinstance(back, DecoratedTower) and back.digest() == dt.digest()
