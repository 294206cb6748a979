"""Exact rationals, closed intervals and continuous piecewise-linear maps.

Every scalar is a :class:`fractions.Fraction`; nothing in this module rounds.
A :class:`PLMap` is stored as its breakpoint nodes ``(x_i, y_i)`` and is the
unique continuous function that is affine between consecutive nodes.
"""

from __future__ import annotations

import os
import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .errors import BudgetExceeded, DomainError

Rational = Fraction

ENV_MAX_PIECES = "PLCERT_MAX_PIECES"
ENV_MAX_BITS = "PLCERT_MAX_BITS"


def q(value) -> Fraction:
    """Coerce ``value`` to an exact rational.

    Accepts ints, Fractions and strings of the form ``"n"`` or ``"n/d"``.
    Floats are rejected because they cannot be represented exactly.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            den_i = int(den)
            if den_i <= 0:
                raise ValueError(f"denominator must be positive: {value!r}")
            return Fraction(int(num), den_i)
        return Fraction(int(text))
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def fmt_q(x: Fraction) -> str:
    """Render as ``num/den`` (always with an explicit denominator)."""
    x = q(x)
    return f"{x.numerator}/{x.denominator}"


def show_q(x: Fraction) -> str:
    """Human-friendly rendering: ``3`` or ``2/3``."""
    x = q(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def bits(x: Fraction) -> int:
    return max(x.numerator.bit_length(), x.denominator.bit_length())


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]``; ``lo == hi`` is a point."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = q(self.lo), q(self.hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x) -> Interval:
        return cls(x, x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def contains(self, other: Interval) -> bool:
        """True when ``other`` is a subset of this interval."""
        return self.lo <= other.lo and other.hi <= self.hi

    def intersects(self, other: Interval) -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersection(self, other: Interval) -> Interval | None:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None

    def hull(self, other: Interval) -> Interval:
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def distance(self, other: Interval) -> Fraction:
        if self.intersects(other):
            return Fraction(0)
        return max(other.lo - self.hi, self.lo - other.hi)

    def __str__(self):
        return f"[{show_q(self.lo)}, {show_q(self.hi)}]"


@dataclass(frozen=True)
class PieceBudget:
    max_pieces: int = 1_000_000
    max_bits: int = 4096

    def __post_init__(self):
        if self.max_pieces <= 0 or self.max_bits <= 0:
            raise ValueError("budget limits must be positive")

    @classmethod
    def from_env(cls) -> PieceBudget:
        """Default budget, overridable via PLCERT_MAX_PIECES / PLCERT_MAX_BITS."""
        kwargs = {}
        if os.environ.get(ENV_MAX_PIECES):
            kwargs["max_pieces"] = int(os.environ[ENV_MAX_PIECES])
        if os.environ.get(ENV_MAX_BITS):
            kwargs["max_bits"] = int(os.environ[ENV_MAX_BITS])
        return cls(**kwargs)


DEFAULT_BUDGET = PieceBudget()


@dataclass(frozen=True)
class FixedSet:
    """A connected component of the fixed-point set of a map."""

    interval: Interval
    kind: str  # "isolated" | "segment"

    @property
    def point(self) -> Fraction:
        return self.interval.lo


@dataclass(frozen=True)
class PLMap:
    """Continuous piecewise-linear map through nodes ``(xs[i], ys[i])``."""

    xs: tuple
    ys: tuple
    bound: Interval | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        xs = tuple(q(x) for x in self.xs)
        ys = tuple(q(y) for y in self.ys)
        if len(xs) != len(ys):
            raise ValueError("xs and ys differ in length")
        if len(xs) < 2:
            raise ValueError("a PL map needs at least two nodes")
        for a, b in zip(xs, xs[1:]):
            if not a < b:
                raise ValueError(f"node abscissae must strictly increase ({a} >= {b})")
        span = Interval(min(ys), max(ys))
        bound = span if self.bound is None else self.bound
        if not bound.contains(span):
            raise ValueError(f"codomain bound {bound} does not contain the values {span}")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "bound", bound)

    @classmethod
    def from_nodes(cls, nodes: Iterable[Sequence], bound: Interval | None = None, name: str = "") -> PLMap:
        nodes = list(nodes)
        return cls(tuple(n[0] for n in nodes), tuple(n[1] for n in nodes), bound, name)

    @classmethod
    def identity(cls, domain: Interval) -> PLMap:
        return cls((domain.lo, domain.hi), (domain.lo, domain.hi), domain, "id")

    @property
    def nodes(self) -> list[tuple[Fraction, Fraction]]:
        return list(zip(self.xs, self.ys))

    @property
    def domain(self) -> Interval:
        return Interval(self.xs[0], self.xs[-1])

    @property
    def range(self) -> Interval:
        return Interval(min(self.ys), max(self.ys))

    @property
    def n_pieces(self) -> int:
        return len(self.xs) - 1

    @property
    def max_bits(self) -> int:
        return max(max(bits(x), bits(y)) for x, y in zip(self.xs, self.ys))

    def is_selfmap(self) -> bool:
        return self.domain.contains(self.bound)

    def pieces(self) -> Iterator[tuple[Fraction, Fraction, Fraction, Fraction]]:
        xs, ys = self.xs, self.ys
        for i in range(len(xs) - 1):
            yield xs[i], xs[i + 1], ys[i], ys[i + 1]

    def slopes(self) -> list[Fraction]:
        return [(y1 - y0) / (x1 - x0) for x0, x1, y0, y1 in self.pieces()]

    def piece_index(self, x: Fraction) -> int:
        """Index ``i`` of a piece ``[xs[i], xs[i+1]]`` containing ``x``."""
        xs = self.xs
        if not xs[0] <= x <= xs[-1]:
            raise DomainError(f"{x} outside domain {self.domain}")
        i = bisect_right(xs, x) - 1
        return min(i, len(xs) - 2)

    def __call__(self, x) -> Fraction:
        return evaluate(self, x)

    def restrict(self, K: Interval) -> PLMap:
        """The map restricted to ``K`` (same codomain bound)."""
        if not self.domain.contains(K):
            raise DomainError(f"{K} not inside domain {self.domain}")
        if K.degenerate:
            raise DomainError("cannot restrict to a point")
        xs = self.xs
        i, j = bisect_right(xs, K.lo), bisect_left(xs, K.hi)
        new_x = [K.lo, *xs[i:j], K.hi]
        new_y = [evaluate(self, K.lo), *self.ys[i:j], evaluate(self, K.hi)]
        return PLMap(tuple(new_x), tuple(new_y), self.bound, self.name)

    def simplified(self) -> PLMap:
        """Drop interior nodes where the slope does not change."""
        xs, ys = self.xs, self.ys
        keep_x, keep_y = [xs[0]], [ys[0]]
        for i in range(1, len(xs) - 1):
            s_left = (ys[i] - keep_y[-1]) / (xs[i] - keep_x[-1])
            s_right = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
            if s_left != s_right:
                keep_x.append(xs[i])
                keep_y.append(ys[i])
        keep_x.append(xs[-1])
        keep_y.append(ys[-1])
        return PLMap(tuple(keep_x), tuple(keep_y), self.bound, self.name)

    def laps(self) -> int:
        """Number of maximal intervals of monotonicity."""
        signs = [s > 0 for s in self.slopes() if s != 0]
        if not signs:
            return 1
        return 1 + sum(1 for a, b in zip(signs, signs[1:]) if a != b)

    def __str__(self):
        label = self.name or "PLMap"
        body = " ".join(f"({show_q(x)},{show_q(y)})" for x, y in self.nodes)
        return f"{label}: {body}"


def evaluate(f: PLMap, x) -> Fraction:
    """Exact value ``f(x)``."""
    if type(x) is not Fraction:
        x = q(x)
    xs = f.xs
    if not xs[0] <= x <= xs[-1]:
        raise DomainError(f"{x} outside domain {f.domain}")
    i = bisect_left(xs, x)
    if xs[i] == x:
        return f.ys[i]
    x0, x1 = xs[i - 1], xs[i]
    y0, y1 = f.ys[i - 1], f.ys[i]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def _check_budget(n_nodes: int, max_bits: int, budget: PieceBudget):
    if n_nodes - 1 > budget.max_pieces:
        raise BudgetExceeded(f"{n_nodes - 1} pieces exceed budget {budget.max_pieces}", pieces=n_nodes - 1)
    if max_bits > budget.max_bits:
        raise BudgetExceeded(f"coefficient size {max_bits} bits exceeds budget {budget.max_bits}", bits=max_bits)


def compose(f: PLMap, g: PLMap, budget: PieceBudget = DEFAULT_BUDGET) -> PLMap:
    """Exact ``f o g``.

    Nodes are the breakpoints of ``g`` together with every ``g``-preimage of an
    interior breakpoint of ``f``.
    """
    if not f.domain.contains(g.range):
        raise DomainError(f"range {g.range} of inner map not inside domain {f.domain}")
    fx, fy = f.xs, f.ys
    out_x = [g.xs[0]]
    out_y = [evaluate(f, g.ys[0])]
    size = bits(out_x[0])
    for x0, x1, y0, y1 in g.pieces():
        if y0 != y1:
            lo, hi = (y0, y1) if y0 < y1 else (y1, y0)
            a, b = bisect_right(fx, lo), bisect_left(fx, hi)
            idx = range(a, b) if y0 < y1 else range(b - 1, a - 1, -1)
            dx_dy = (x1 - x0) / (y1 - y0)
            for k in idx:
                x = x0 + (fx[k] - y0) * dx_dy
                out_x.append(x)
                out_y.append(fy[k])
                size = max(size, bits(x))
            if len(out_x) > budget.max_pieces + 1:
                _check_budget(len(out_x), 0, budget)
        out_x.append(x1)
        out_y.append(evaluate(f, y1))
    size = max(size, max(bits(y) for y in out_y), max(bits(x) for x in g.xs))
    _check_budget(len(out_x), size, budget)
    return PLMap(tuple(out_x), tuple(out_y), f.bound, f"{f.name}o{g.name}" if f.name and g.name else "")


class _IterateCache:
    """Small LRU of iterate chains ``[f, f^2, ...]`` keyed by map and budget."""

    def __init__(self, maxsize: int = 16):
        self.maxsize = maxsize
        self._data: dict = {}
        self._lock = threading.Lock()

    def get(self, key) -> list:
        with self._lock:
            chain = self._data.pop(key, None)
            if chain is None:
                chain = []
            self._data[key] = chain
            while len(self._data) > self.maxsize:
                self._data.pop(next(iter(self._data)))
            return chain


_ITERATES = _IterateCache()


def iterate(f: PLMap, n: int, budget: PieceBudget = DEFAULT_BUDGET) -> PLMap:
    """Exact ``f^n`` (``f^1 = f``, ``f^n = f o f^(n-1)``)."""
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return f
    if not f.is_selfmap():
        raise DomainError("iterate requires a self-map")
    chain = _ITERATES.get((f, budget))
    if not chain:
        chain.append(f)
    while len(chain) < n:
        chain.append(compose(f, chain[-1], budget))
    return PLMap(chain[n - 1].xs, chain[n - 1].ys, f.bound, f"{f.name}^{n}" if f.name else "")


def image(f: PLMap, K: Interval) -> Interval:
    """Exact ``f(K)`` from endpoint values and node values inside ``K``."""
    if not f.domain.contains(K):
        raise DomainError(f"{K} not inside domain {f.domain}")
    a, b = evaluate(f, K.lo), evaluate(f, K.hi)
    lo, hi = min(a, b), max(a, b)
    i, j = bisect_right(f.xs, K.lo), bisect_left(f.xs, K.hi)
    if i < j:
        inner = f.ys[i:j]
        lo, hi = min(lo, min(inner)), max(hi, max(inner))
    return Interval(lo, hi)


def image_orbit(f: PLMap, K: Interval, n: int) -> list[Interval]:
    """``[K, f(K), ..., f^n(K)]`` by repeated interval images."""
    out = [K]
    for _ in range(n):
        out.append(image(f, out[-1]))
    return out


def image_iter(f: PLMap, K: Interval, n: int) -> Interval:
    """``f^n(K)`` by repeated images; stops early once ``f(K) = K``."""
    for _ in range(n):
        nxt = image(f, K)
        if nxt == K:
            break
        K = nxt
    return K


def _merge(intervals: list[Interval]) -> list[Interval]:
    intervals = sorted(intervals, key=lambda I: (I.lo, I.hi))
    merged: list[Interval] = []
    for I in intervals:
        if merged and I.lo <= merged[-1].hi:
            if I.hi > merged[-1].hi:
                merged[-1] = Interval(merged[-1].lo, I.hi)
        else:
            merged.append(I)
    return merged


def preimage(f: PLMap, V: Interval) -> list[Interval]:
    """Maximal disjoint closed intervals whose union is ``{x : f(x) in V}``."""
    parts = []
    for x0, x1, y0, y1 in f.pieces():
        if y0 == y1:
            if V.lo <= y0 <= V.hi:
                parts.append(Interval(x0, x1))
            continue
        if max(y0, y1) < V.lo or min(y0, y1) > V.hi:
            continue
        dx_dy = (x1 - x0) / (y1 - y0)
        xa = x0 + (V.lo - y0) * dx_dy
        xb = x0 + (V.hi - y0) * dx_dy
        lo, hi = max(x0, min(xa, xb)), min(x1, max(xa, xb))
        if lo <= hi:
            parts.append(Interval(lo, hi))
    return _merge(parts)


def fixed_points(f: PLMap) -> list[FixedSet]:
    """Solve ``f(x) = x`` piece by piece; diagonal pieces give segments."""
    found = []
    for x0, x1, y0, y1 in f.pieces():
        s = (y1 - y0) / (x1 - x0)
        if s == 1:
            if y0 == x0:
                found.append(Interval(x0, x1))
            continue
        x = (y0 - s * x0) / (1 - s)
        if x0 <= x <= x1:
            found.append(Interval.point(x))
    return [FixedSet(I, "isolated" if I.degenerate else "segment") for I in _merge(found)]


def sup_displacement(f: PLMap, n: int, budget: PieceBudget = DEFAULT_BUDGET) -> Fraction:
    """``max_x |f^n(x) - x|`` read off the nodes of ``f^n``."""
    h = iterate(f, n, budget)
    return max(abs(y - x) for x, y in zip(h.xs, h.ys))
