"""Documents: tagged sequences of the line formats used across the package.

Blocks are recognised by their first word:

    graph size=<n>
    [<lo>,<hi>]
    map dom=<n> cod=<m> vals=...
    type cod=<n> chain=...
    tower levels=<n>      followed by a graph line and n-1 map lines
    kp arity=<n>          followed by 2 graph lines and 2n map lines
    dtower levels=<n>     ... up to 'end dtower'

Blank lines and lines starting with '#' are ignored. Anything else is an
error carrying its line and column.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, TextIO, Union

from .errors import ParseError, PreconditionError, ShapeError
from .graphs import Interval, PathGraph
from .jpp import KpObject
from .ltypes import LType
from .maps import GraphMap
from .s4 import DecoratedTower
from .tower import Tower

Block = Union[PathGraph, Interval, GraphMap, LType, Tower, KpObject, DecoratedTower]

_COUNT_RE = re.compile(r"(?:tower levels|kp arity)=(\d+)")


def _tag(line: str) -> str:
    if line.startswith("["):
        return "interval"
    return line.split(" ", 1)[0]


def _block_lines(b: Block) -> Iterator[list[str]]:
    if isinstance(b, DecoratedTower):
        yield from b.iter_lines()
    elif isinstance(b, Tower):
        yield [f"tower levels={len(b.levels)}"]
        yield [b.levels[0].to_text()]
        for m in b.bonds:
            yield list(m.text_chunks())
    elif isinstance(b, GraphMap):
        yield list(b.text_chunks())
    elif isinstance(b, KpObject):
        for s in b.to_lines():
            yield [s]
    elif isinstance(b, (PathGraph, Interval, LType)):
        yield [b.to_text()]
    else:
        raise TypeError(f"cannot write a {type(b).__name__} block")


class _Lines:
    """Numbered, comment-free lines with one line of lookahead."""

    def __init__(self, lines: Iterable[str], first: int = 1) -> None:
        self._it = iter(lines)
        self.no = first - 1

    def __iter__(self) -> _Lines:
        return self

    def __next__(self) -> tuple[int, str]:
        while True:
            raw = next(self._it)
            self.no += 1
            s = raw.strip()
            if s and not s.startswith("#"):
                return self.no, s

    def take(self, what: str) -> tuple[int, str]:
        try:
            return next(self)
        except StopIteration:
            raise ParseError(f"unexpected end of input inside {what} block", self.no + 1) from None


def _one(fn, s: str, no: int):
    try:
        return fn(s)
    except ParseError as exc:
        if exc.line is not None:
            raise
        raise ParseError(str(exc), no, 1) from None
    except (ShapeError, PreconditionError) as exc:
        raise ParseError(str(exc), no, 1) from None


def _counted(src: _Lines, no: int, s: str, extra, fn, what: str):
    m = _COUNT_RE.fullmatch(s)
    if m is None:
        raise ParseError(f"malformed {what} header", no, 1)
    n = int(m.group(1))
    lines = [s] + [src.take(what)[1] for _ in range(extra(n))]
    return _one(fn, lines, no)


@dataclass
class Document:
    blocks: list = field(default_factory=list)

    def __iter__(self) -> Iterator[Block]:
        return iter(self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def of_type(self, kind: type) -> list:
        return [b for b in self.blocks if isinstance(b, kind)]

    def write(self, fh: TextIO) -> None:
        for b in self.blocks:
            for parts in _block_lines(b):
                fh.writelines(parts)
                fh.write("\n")

    def to_text(self) -> str:
        out = []
        for b in self.blocks:
            for parts in _block_lines(b):
                out.append("".join(parts))
        return "\n".join(out) + ("\n" if out else "")

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            self.write(fh)

    @classmethod
    def parse_lines(cls, lines: Iterable[str], first: int = 1) -> Document:
        src = _Lines(lines, first)
        blocks: list = []
        for no, s in src:
            tag = _tag(s)
            if tag == "graph":
                blocks.append(_one(PathGraph.from_text, s, no))
            elif tag == "interval":
                blocks.append(_one(Interval.from_text, s, no))
            elif tag == "map":
                blocks.append(_one(GraphMap.from_text, s, no))
            elif tag == "type":
                blocks.append(_one(LType.from_text, s, no))
            elif tag == "tower":
                blocks.append(_counted(src, no, s, lambda n: n, lambda ls: Tower.from_lines(ls, no), "tower"))
            elif tag == "kp":
                blocks.append(_counted(src, no, s, lambda n: 2 + 2 * n, KpObject.from_lines, "kp"))
            elif tag == "dtower":
                blocks.append(DecoratedTower.from_lines(_dtower_lines(src, s, no), no))
            else:
                raise ParseError(f"unknown block tag {tag!r}", no, 1)
        return cls(blocks)

    @classmethod
    def from_text(cls, text: str) -> Document:
        return cls.parse_lines(text.splitlines())

    @classmethod
    def load(cls, path: str | Path) -> Document:
        with open(path, encoding="ascii") as fh:
            return cls.parse_lines(fh)


def _dtower_lines(src: _Lines, first: str, no: int) -> Iterator[str]:
    # comments inside the block are dropped, so line numbers in errors are
    # counted over the block's own lines
    yield first
    while True:
        _, s = src.take("dtower")
        yield s
        if s == "end dtower":
            return
