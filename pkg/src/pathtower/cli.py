"""Command line front end.

Exit codes: 0 success, 1 a verification failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from .amalgam import Anchors, amalgamate_anchored, amalgamate_search, base_amalgamate
from .certificate import CertificateReport, verify_blacksquare
from .errors import AmalgamationError, ParseError, PathTowerError
from .graphs import Interval
from .jpp import KpObject, jpp_sweep, jpp_witness
from .lifting import amalgamate_typed
from .ltypes import compute_type
from .maps import GraphMap, is_epi
from .s4 import DecoratedTower, build, parse_tasks
from .textio import Document
from .tower import Tower, absorb, hyple_search, random_tower

OK, FAILED, BAD_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _load(path: str) -> Document:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{path}: no such file")
    try:
        return Document.load(p)
    except ParseError as exc:
        raise InputError(f"{path}: {exc}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path}: not an ASCII text file") from None


def _need(doc: Document, kind: type, count: int | None, path: str) -> list:
    got = doc.of_type(kind)
    if count is not None and len(got) != count:
        raise InputError(f"{path}: expected {count} {kind.__name__} block(s), found {len(got)}")
    if not got:
        raise InputError(f"{path}: no {kind.__name__} block")
    return got


def _emit(doc: Document, out: str | None, stdout: TextIO) -> None:
    if out is None:
        doc.write(stdout)
    else:
        doc.save(out)


def _map_arg(spec: str) -> GraphMap:
    s = spec.strip()
    if not s.startswith("map "):
        s = "map " + s
    try:
        return GraphMap.from_text(s)
    except ParseError as exc:
        raise InputError(f"--map: {exc}") from None


# subcommands ----------------------------------------------------------------


def cmd_check_epi(a: argparse.Namespace, out: TextIO) -> int:
    if (a.file is None) == (a.map is None):
        raise InputError("give exactly one of FILE or --map")
    maps = [_map_arg(a.map)] if a.map is not None else _need(_load(a.file), GraphMap, None, a.file)
    flags = [is_epi(m) for m in maps]
    for f in flags:
        out.write(f"epi={str(f).lower()}\n")
    return OK if all(flags) else FAILED


def cmd_type(a: argparse.Namespace, out: TextIO) -> int:
    maps = _need(_load(a.file), GraphMap, None, a.file)
    blocks = []
    for m in maps:
        M = Interval.from_text(a.interval) if a.interval else m.dom.whole()
        if not M.fits(m.dom):
            raise InputError(f"interval {M.to_text()} does not fit a domain of size {m.dom.size}")
        ends = {"lo": [M.lo], "hi": [M.hi], "both": sorted({M.lo, M.hi})}[a.end]
        blocks += [compute_type(m, x, M) for x in ends]
    _emit(Document(blocks), a.out, out)
    return OK


def cmd_amalgamate(a: argparse.Namespace, out: TextIO) -> int:
    f, fp = _need(_load(a.file), GraphMap, 2, a.file)
    anchors = None
    if a.anchors:
        try:
            nums = [int(x) for x in a.anchors.split(",")]
        except ValueError:
            raise InputError("--anchors takes 2 or 4 comma separated integers") from None
        if len(nums) not in (2, 4):
            raise InputError("--anchors takes 2 or 4 comma separated integers")
        anchors = Anchors(*nums)
    if a.typed:
        if anchors is None:
            raise InputError("--typed needs --anchors")
        mode = "one_endpoint" if a.typed == "one" else "two_endpoints"
        am = amalgamate_typed(f, fp, anchors.m_minus, anchors.mp_minus, mode, anchors.m_plus, anchors.mp_plus)
    elif anchors is None:
        am = base_amalgamate(f, fp)
    elif anchors.two_sided:
        am = amalgamate_anchored(f, fp, anchors)
    else:
        am = amalgamate_search(f, fp, anchors)
    _emit(Document([am.O, am.g, am.gp]), a.out, out)
    return OK


def cmd_jpp(a: argparse.Namespace, out: TextIO) -> int:
    src = _need(_load(a.src), KpObject, 1, a.src)[0]
    dst = _need(_load(a.dst), KpObject, 1, a.dst)[0]
    plus, alpha, alphap, rep = jpp_witness(src, dst)
    _emit(Document([plus, alpha, alphap]), a.out, out)
    for i in range(src.arity):
        out.write(f"index={i} exact={str(rep.exact[i]).lower()} approx={str(rep.approx[i]).lower()} maxdist={rep.maxdist[i]}\n")
    return OK if all(rep.exact) else FAILED


def cmd_jpp_sweep(a: argparse.Namespace, out: TextIO) -> int:
    n = ex = ap = 0
    worst = 0
    sink = open(a.report, "w", encoding="ascii") if a.report else out
    try:
        for ln in jpp_sweep(a.max_a, a.max_b, a.arity, a.samples, a.seed):
            sink.write(ln.to_text() + "\n")
            n += 1
            ex += ln.exact
            ap += ln.approx
            worst = max(worst, ln.maxdist)
    finally:
        if a.report:
            sink.close()
    out.write(f"# instances={n} exact={ex} approx={ap} maxdist={worst}\n")
    return OK if ex == n else FAILED


def cmd_tower_absorb(a: argparse.Namespace, out: TextIO) -> int:
    t = _need(_load(a.tower), Tower, 1, a.tower)[0]
    f = _need(_load(a.map), GraphMap, 1, a.map)[0]
    t2, rec = absorb(t, a.level, f)
    _emit(Document([t2, rec.g]), a.out, out)
    out.write(f"# absorbed at level {rec.m}, factors through level {rec.n}\n")
    return OK


def cmd_tower_hyple(a: argparse.Namespace, out: TextIO) -> int:
    t = _need(_load(a.tower), Tower, 1, a.tower)[0]
    hit = hyple_search(t, a.base, a.k)
    if hit is None:
        out.write("level=none\n")
        return FAILED
    out.write(f"level={hit[0]}\n")
    if a.out:
        Document([hit[1]]).save(a.out)
    return OK


def cmd_tower_random(a: argparse.Namespace, out: TextIO) -> int:
    try:
        sizes = [int(x) for x in a.sizes.split(",")]
    except ValueError:
        raise InputError("--sizes takes comma separated integers") from None
    t = random_tower(np.random.default_rng(a.seed), sizes)
    _emit(Document([t]), a.out, out)
    return OK


def cmd_s4_build(a: argparse.Namespace, out: TextIO) -> int:
    tasks = []
    if a.tasks:
        p = Path(a.tasks)
        if not p.is_file():
            raise InputError(f"{a.tasks}: no such file")
        try:
            tasks = parse_tasks(p.read_text(encoding="ascii"))
        except ParseError as exc:
            raise InputError(f"{a.tasks}: {exc}") from None
    dt = build(a.rounds, tasks)
    Document([dt]).save(a.out)
    rep = verify_blacksquare(dt)
    Path(a.cert).write_text(rep.to_text(), encoding="utf-8")
    sizes = ",".join(str(g.size) for g in dt.levels)
    out.write(f"# levels={len(dt.levels)} sizes={sizes} tasks={len(dt.tasks)}\n")
    out.write(f"# clauses={len(rep.lines)} failed={len(rep.failures())}\n")
    return OK if rep.ok else FAILED


def cmd_verify(a: argparse.Namespace, out: TextIO) -> int:
    dt = _need(_load(a.tower), DecoratedTower, 1, a.tower)[0]
    p = Path(a.cert)
    if not p.is_file():
        raise InputError(f"{a.cert}: no such file")
    try:
        claimed = CertificateReport.from_text(p.read_text(encoding="utf-8"))
    except ParseError as exc:
        raise InputError(f"{a.cert}: {exc}") from None
    rep = verify_blacksquare(dt)
    code = OK
    for ln in rep.failures():
        out.write(ln.to_text() + "\n")
        code = FAILED
    if claimed.lines != rep.lines:
        for n, (x, y) in enumerate(zip(claimed.lines, rep.lines), 1):
            if x != y:
                out.write(f"# certificate disagrees at clause line {n}: claimed '{x.to_text()}', recomputed '{y.to_text()}'\n")
                break
        else:
            out.write(f"# certificate has {len(claimed.lines)} clause lines, recomputed {len(rep.lines)}\n")
        code = FAILED
    out.write(f"# verify: {'pass' if code == OK else 'fail'} ({len(rep.lines)} clauses)\n")
    return code


# parser ---------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized sampling")
    p = argparse.ArgumentParser(prog="pathtower", parents=[common], description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("check-epi", parents=[common], help="is each map an epimorphism")
    s.add_argument("file", nargs="?")
    s.add_argument("--map", help="inline map, e.g. 'dom=4 cod=2 vals=0,1,1,0'")
    s.set_defaults(fn=cmd_check_epi)

    s = sub.add_parser("type", parents=[common], help="endpoint types of each map")
    s.add_argument("file")
    s.add_argument("--interval", help="restrict to [lo,hi] of the domain")
    s.add_argument("--end", choices=("lo", "hi", "both"), default="both")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_type)

    s = sub.add_parser("amalgamate", parents=[common], help="amalgam of the two maps in FILE")
    s.add_argument("file")
    s.add_argument("--anchors", help="m_minus,mp_minus[,m_plus,mp_plus]")
    s.add_argument("--typed", choices=("one", "two"))
    s.add_argument("--out")
    s.set_defaults(fn=cmd_amalgamate)

    s = sub.add_parser("jpp", parents=[common], help="joint projection witness")
    s.add_argument("--src", required=True)
    s.add_argument("--dst", required=True)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_jpp)

    s = sub.add_parser("jpp-sweep", parents=[common], help="same as 'jpp sweep'")
    s.add_argument("--max-a", type=int, default=4)
    s.add_argument("--max-b", type=int, default=3)
    s.add_argument("--arity", type=int, default=1)
    s.add_argument("--samples", type=int, default=2000, help="sample count for arity > 1")
    s.add_argument("--report")
    s.set_defaults(fn=cmd_jpp_sweep)

    s = sub.add_parser("tower", parents=[common], help="tower operations")
    tsub = s.add_subparsers(dest="tcmd", required=True)
    t = tsub.add_parser("absorb", parents=[common])
    t.add_argument("--tower", required=True)
    t.add_argument("--level", type=int, required=True)
    t.add_argument("--map", required=True)
    t.add_argument("--out")
    t.set_defaults(fn=cmd_tower_absorb)
    t = tsub.add_parser("hyple", parents=[common])
    t.add_argument("--tower", required=True)
    t.add_argument("--base", type=int, required=True)
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--out")
    t.set_defaults(fn=cmd_tower_hyple)
    t = tsub.add_parser("random", parents=[common])
    t.add_argument("--sizes", required=True)
    t.add_argument("--out")
    t.set_defaults(fn=cmd_tower_random)

    s = sub.add_parser("s4", parents=[common], help="decorated tower construction")
    ssub = s.add_subparsers(dest="scmd", required=True)
    t = ssub.add_parser("build", parents=[common])
    t.add_argument("--rounds", type=int, required=True)
    t.add_argument("--tasks")
    t.add_argument("--out", required=True)
    t.add_argument("--cert", required=True)
    t.set_defaults(fn=cmd_s4_build)

    s = sub.add_parser("verify", parents=[common], help="re-check a decorated tower against its certificate")
    s.add_argument("--tower", required=True)
    s.add_argument("--cert", required=True)
    s.set_defaults(fn=cmd_verify)
    return p


def run(argv: Sequence[str], stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    out = sys.stdout if stdout is None else stdout
    err = sys.stderr if stderr is None else stderr
    args = list(argv)
    if len(args) >= 2 and args[0] == "jpp" and args[1] == "sweep":
        args = ["jpp-sweep"] + args[2:]
    try:
        ns = _parser().parse_args(args)
    except SystemExit as exc:
        return OK if exc.code in (0, None) else BAD_INPUT
    try:
        return ns.fn(ns, out)
    except InputError as exc:
        err.write(f"error: {exc}\n")
        return BAD_INPUT
    except (PathTowerError, OSError) as exc:
        if isinstance(exc, AmalgamationError):
            err.write(f"amalgamation failed: {exc}\n")
            return FAILED
        err.write(f"error: {exc}\n")
        return BAD_INPUT


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
