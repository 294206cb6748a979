"""The ``.plmap`` text format and the built-in corpus of example maps.

Grammar (one statement per line, ``#`` starts a comment)::

    map <ident>
    domain <q> <q>
    selfmap
    meta <key> <text...>
    node <q> <q>

where ``<q>`` is ``<int>`` or ``<int>/<posint>``.  Nodes must be listed in
strictly increasing x order; the first and last node must sit on the domain
endpoints.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from .errors import ParseError, UnknownBuiltin, ValidationError
from .exact import Interval, PLMap, show_q

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.:\-]*\Z")
_RATIONAL = re.compile(r"([+-]?\d+)(?:/(\d+))?\Z")
_KEY = re.compile(r"[A-Za-z_][A-Za-z0-9_\-]*\Z")

BUILTIN_NAMES = ("tent", "remark1", "remark2:<n>", "remark4", "example7")


@dataclass(frozen=True)
class MapSource:
    name: str
    domain: tuple[Fraction, Fraction]
    nodes: tuple[tuple[Fraction, Fraction], ...]
    selfmap: bool = False
    metadata: tuple[tuple[str, str], ...] = field(default=())

    def to_map(self) -> PLMap:
        lo, hi = self.domain
        bound = Interval(lo, hi) if self.selfmap else None
        return PLMap.from_nodes(self.nodes, bound, self.name)

    def meta(self, key: str, default: str | None = None) -> str | None:
        for k, v in self.metadata:
            if k == key:
                return v
        return default


def _tokens(line: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


def _rational(tok: str, lineno: int, col: int) -> Fraction:
    m = _RATIONAL.match(tok)
    if not m:
        raise ParseError(f"malformed rational literal {tok!r}", lineno, col)
    num = int(m.group(1))
    if m.group(2) is None:
        return Fraction(num)
    den = int(m.group(2))
    if den == 0:
        raise ParseError(f"zero denominator in {tok!r}", lineno, col)
    return Fraction(num, den)


def parse_map(text: str) -> MapSource:
    """Parse ``.plmap`` text; raises ParseError or ValidationError."""
    name = None
    domain = None
    selfmap = False
    nodes: list[tuple[Fraction, Fraction]] = []
    node_lines: list[int] = []
    metadata: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line)
        if not toks:
            continue
        head, col = toks[0]
        args = toks[1:]
        if head == "map":
            if len(args) != 1:
                raise ParseError("expected `map <ident>`", lineno, col)
            if name is not None:
                raise ParseError("duplicate `map` statement", lineno, col)
            if not _IDENT.match(args[0][0]):
                raise ParseError(f"invalid identifier {args[0][0]!r}", lineno, args[0][1])
            name = args[0][0]
        elif head == "domain":
            if len(args) != 2:
                raise ParseError("expected `domain <q> <q>`", lineno, col)
            if domain is not None:
                raise ParseError("duplicate `domain` statement", lineno, col)
            lo = _rational(args[0][0], lineno, args[0][1])
            hi = _rational(args[1][0], lineno, args[1][1])
            if not lo < hi:
                raise ValidationError("domain must satisfy lo < hi", lineno)
            domain = (lo, hi)
        elif head == "selfmap":
            if args:
                raise ParseError("`selfmap` takes no arguments", lineno, args[0][1])
            selfmap = True
        elif head == "meta":
            if len(args) < 2:
                raise ParseError("expected `meta <key> <text>`", lineno, col)
            if not _KEY.match(args[0][0]):
                raise ParseError(f"invalid metadata key {args[0][0]!r}", lineno, args[0][1])
            metadata.append((args[0][0], " ".join(t for t, _ in args[1:])))
        elif head == "node":
            if len(args) != 2:
                raise ParseError("expected `node <q> <q>`", lineno, col)
            x = _rational(args[0][0], lineno, args[0][1])
            y = _rational(args[1][0], lineno, args[1][1])
            if nodes and x == nodes[-1][0]:
                raise ValidationError(f"duplicate node abscissa {show_q(x)}", lineno)
            if nodes and x < nodes[-1][0]:
                raise ValidationError(f"node abscissa {show_q(x)} out of order", lineno)
            nodes.append((x, y))
            node_lines.append(lineno)
        else:
            raise ParseError(f"unknown statement {head!r}", lineno, col)
    if name is None:
        raise ParseError("missing `map` statement", 0, 0)
    if domain is None:
        raise ParseError("missing `domain` statement", 0, 0)
    if len(nodes) < 2:
        raise ValidationError("at least two nodes are required")
    lo, hi = domain
    if nodes[0][0] != lo or nodes[-1][0] != hi:
        raise ValidationError("first and last node must lie on the domain endpoints", node_lines[0])
    if selfmap:
        for (x, y), ln in zip(nodes, node_lines):
            if not lo <= y <= hi:
                raise ValidationError(f"value {show_q(y)} at x={show_q(x)} leaves the domain", ln)
    return MapSource(name, domain, tuple(nodes), selfmap, tuple(metadata))


def serialize(src: MapSource) -> str:
    """Canonical text; ``parse_map(serialize(s)) == s``."""
    lines = [f"map {src.name}"]
    lines += [f"meta {k} {v}" for k, v in src.metadata]
    lines.append(f"domain {show_q(src.domain[0])} {show_q(src.domain[1])}")
    if src.selfmap:
        lines.append("selfmap")
    lines += [f"node {show_q(x)} {show_q(y)}" for x, y in src.nodes]
    return "\n".join(lines) + "\n"


def source_from_map(f: PLMap, name: str | None = None, metadata=()) -> MapSource:
    d = f.domain
    return MapSource(name or f.name or "anonymous", (d.lo, d.hi), tuple(f.nodes), f.is_selfmap(), tuple(metadata))


def remark2_nodes(n: int) -> list[tuple[int, int]]:
    """Nodes of the transitive family on [1, 2n+1] with one period-(2n+1) orbit."""
    if n < 2:
        raise UnknownBuiltin(f"remark2 family needs n >= 2, got {n}")
    ys = {1: n + 1}
    for i in range(2, n + 2):
        ys[i] = 2 * n + 3 - i
    for j in range(n + 2, 2 * n + 2):
        ys[j] = 2 * n + 2 - j
    return [(k, ys[k]) for k in range(1, 2 * n + 2)]


def _corpus_file(stem: str) -> str:
    return resources.files("plcert.corpus").joinpath(f"{stem}.plmap").read_text(encoding="utf-8")


def corpus_names() -> list[str]:
    return sorted(p.name[:-6] for p in resources.files("plcert.corpus").iterdir() if p.name.endswith(".plmap"))


_FN_FORMS = (re.compile(r"remark2:(\d+)\Z"), re.compile(r"fn\((\d+)\)\Z"), re.compile(r"f_?(\d+)\Z"))


def builtin(name: str) -> MapSource:
    """Built-in example map by name (``tent``, ``remark1``, ``remark2:<n>``, ``remark4``, ``example7``)."""
    for pattern in _FN_FORMS:
        m = pattern.match(name)
        if m:
            n = int(m.group(1))
            nodes = tuple((Fraction(x), Fraction(y)) for x, y in remark2_nodes(n))
            return MapSource(f"remark2:{n}", (Fraction(1), Fraction(2 * n + 1)), nodes, True,
                             (("n", str(n)),))
    if name in corpus_names():
        return parse_map(_corpus_file(name))
    raise UnknownBuiltin(f"unknown builtin map {name!r}; known: {', '.join(BUILTIN_NAMES)}")


def load_map(spec: str) -> PLMap:
    """Resolve a builtin name or a path to a ``.plmap`` file."""
    if os.path.exists(spec):
        with open(spec, encoding="utf-8") as fh:
            return parse_map(fh.read()).to_map()
    return builtin(spec).to_map()
