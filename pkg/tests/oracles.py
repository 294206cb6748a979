"""Independent reference computations used to check the library.

Nothing here imports the algorithms under test; maps are plain node lists and
every answer is produced by the most direct method available (linear scans,
exhaustive candidate enumeration, grids).
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

TENT_NODES = [(Fraction(0), Fraction(0)), (Fraction(1, 2), Fraction(1)), (Fraction(1), Fraction(0))]


def ev(nodes, x) -> Fraction:
    """Interpolate by scanning pieces left to right."""
    x = Fraction(x)
    for (x0, y0), (x1, y1) in zip(nodes, nodes[1:]):
        if x0 <= x <= x1:
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    raise ValueError(f"{x} outside the node range")


def ev_iter(nodes, x, n: int) -> Fraction:
    for _ in range(n):
        x = ev(nodes, x)
    return x


def image_bounds(nodes, lo, hi) -> tuple[Fraction, Fraction]:
    """``[min f, max f]`` over ``[lo, hi]``: extrema sit at endpoints or interior nodes."""
    vals = [ev(nodes, lo), ev(nodes, hi)] + [y for x, y in nodes if lo < x < hi]
    return min(vals), max(vals)


def iterated_image(nodes, lo, hi, n: int) -> tuple[Fraction, Fraction]:
    for _ in range(n):
        lo, hi = image_bounds(nodes, lo, hi)
    return lo, hi


def tent_periodic_candidates(m: int) -> set:
    """Solutions of ``T^m(x) = x``: the branches of ``T^m`` are ``±2^m x + k``,
    so every solution has denominator dividing ``2^m - 1`` or ``2^m + 1``."""
    out = set()
    for den in (2 ** m - 1, 2 ** m + 1):
        for k in range(den + 1):
            x = Fraction(k, den)
            if ev_iter(TENT_NODES, x, m) == x:
                out.add(x)
    return out


def least_period(nodes, x, bound: int) -> int | None:
    y = x
    for p in range(1, bound + 1):
        y = ev(nodes, y)
        if y == x:
            return p
    return None


def grid(lo, hi, n: int) -> list[Fraction]:
    return [lo + (hi - lo) * Fraction(i, n) for i in range(n + 1)]


def grid_conditions(nodes, z, n: int = 2000) -> dict:
    """Which trichotomy conditions have a grid witness around the fixed point ``z``.

    cond1: some ``x != z`` is not moved toward ``z`` (``(f(x)-z)/(x-z) >= 1``).
    cond2: some ``x`` moves strictly toward ``z`` without reaching or crossing it.
    cond3: every ``x < z`` maps to ``>= z`` and every ``x > z`` maps to ``<= z``.
    """
    lo, hi = nodes[0][0], nodes[-1][0]
    pts = set(grid(lo, hi, n)) | {x for x, _ in nodes}
    c1 = c2 = False
    c3 = True
    for x in pts:
        if x == z:
            continue
        fx = ev(nodes, x)
        if (fx - z) / (x - z) >= 1:
            c1 = True
        if x < fx < z or z < fx < x:
            c2 = True
        if (x < z and fx < z) or (x > z and fx > z):
            c3 = False
    return {"cond1": c1, "cond2": c2, "cond3": c3}


def brute_turbulent_pair(nodes, cands) -> tuple | None:
    """First ``(J0, J1)`` among adjacent candidate intervals with ``f(J0) ∩ f(J1) ⊇ J0 ∪ J1``."""
    cands = sorted(set(cands))
    img = {(a, b): image_bounds(nodes, a, b) for a, b in combinations(cands, 2)}
    for a, c, b in combinations(cands, 3):
        l0, h0 = img[a, c]
        l1, h1 = img[c, b]
        if max(l0, l1) <= a and min(h0, h1) >= b:
            return (a, c), (c, b)
    return None
