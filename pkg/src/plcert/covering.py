"""Eventual covering, return-time sets and their intersections.

All iteration here is by exact interval images, one step at a time, so the
cost per step is proportional to the number of pieces a current image meets.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, PreconditionError
from .exact import DEFAULT_BUDGET, Interval, PieceBudget, PLMap, image
from .orbits import periodic_points

COVER_HORIZON = 64
RETURN_HORIZON = 256


def _check(f: PLMap, *intervals: Interval):
    if not f.is_selfmap():
        raise PreconditionError("covering analysis needs a self-map")
    for I in intervals:
        if not f.domain.contains(I):
            raise DomainError(f"{I} not inside domain {f.domain}")


def trajectory(f: PLMap, K: Interval, horizon: int) -> list[Interval]:
    """``[f^1(K), ..., f^horizon(K)]``; stops copying once the image is stationary."""
    out = []
    cur = K
    for _ in range(horizon):
        nxt = image(f, cur)
        out.append(nxt)
        if nxt == cur:
            out.extend([nxt] * (horizon - len(out)))
            break
        cur = nxt
    return out


def _runs(times) -> int:
    best = run = 0
    prev = None
    for t in times:
        run = run + 1 if prev is not None and t == prev + 1 else 1
        best = max(best, run)
        prev = t
    return best


@dataclass(frozen=True)
class CoveringResult:
    K: Interval
    L: Interval
    horizon: int
    first_N: int | None
    trajectory: tuple  # f^n(K) for n = 1..horizon

    def covers_at(self, n: int) -> bool:
        return self.trajectory[n - 1].contains(self.L)


def eventually_covers(f: PLMap, K: Interval, L: Interval, horizon: int = COVER_HORIZON) -> CoveringResult:
    """Least ``N`` with ``f^n(K) ⊇ L`` for every ``N <= n <= horizon``, or None."""
    _check(f, K, L)
    traj = trajectory(f, K, horizon)
    first = None
    for n in range(horizon, 0, -1):
        if traj[n - 1].contains(L):
            first = n
        else:
            break
    return CoveringResult(K, L, horizon, first, tuple(traj))


@dataclass(frozen=True)
class ReturnTimeSet:
    U: Interval
    V: Interval
    horizon: int
    times: tuple
    longest_run: int
    cofinite_from: int | None  # least m with {m, ..., horizon} inside times

    @property
    def cofinite(self) -> bool:
        return self.cofinite_from is not None


def _tail_start(times, horizon: int) -> int | None:
    if not times or times[-1] != horizon:
        return None
    m = horizon
    s = set(times)
    while m - 1 in s:
        m -= 1
    return m


def return_times(f: PLMap, U: Interval, V: Interval, horizon: int = RETURN_HORIZON) -> ReturnTimeSet:
    """``{n <= horizon : f^n(U) ∩ V ≠ ∅}`` computed forward by interval images."""
    _check(f, U, V)
    times = tuple(n for n, img in enumerate(trajectory(f, U, horizon), start=1) if img.intersects(V))
    return ReturnTimeSet(U, V, horizon, times, _runs(times), _tail_start(times, horizon))


@dataclass(frozen=True)
class IntersectionReport:
    pairs: tuple
    horizon: int
    times: tuple
    nonempty: bool
    longest_run: int
    per_pair: tuple  # ReturnTimeSet for each pair


def furstenberg_intersection_check(f: PLMap, pairs, horizon: int = RETURN_HORIZON) -> IntersectionReport:
    """Intersect the return-time sets of several ``(U, V)`` pairs within the horizon."""
    sets = [return_times(f, U, V, horizon) for U, V in pairs]
    common = set(range(1, horizon + 1))
    for r in sets:
        common &= set(r.times)
    times = tuple(sorted(common))
    return IntersectionReport(tuple(pairs), horizon, times, bool(times), _runs(times), tuple(sets))


@dataclass(frozen=True)
class PeriodsInU:
    U: Interval
    M: int
    periods: tuple  # least periods n <= M with a period-n point in U
    m: int | None


def periods_in(f: PLMap, U: Interval, M: int, budget: PieceBudget = DEFAULT_BUDGET) -> PeriodsInU:
    _check(f, U)
    found = []
    for n in range(1, M + 1):
        pp = periodic_points(f, n, budget)
        if any(x in U for o in pp.of_period(n) for x in o.points):
            found.append(n)
    m = None
    k = M
    while k >= 1 and k in found:
        m = k
        k -= 1
    return PeriodsInU(U, M, tuple(found), m)


def estimate_m_of_U(f: PLMap, U: Interval, M: int, budget: PieceBudget = DEFAULT_BUDGET) -> int | None:
    """Least ``m <= M`` such that ``U`` holds a period-``n`` point for every ``n`` in ``[m, M]``."""
    return periods_in(f, U, M, budget).m


def cell_pairs_cover(f: PLMap, cells, horizon: int = COVER_HORIZON) -> dict:
    """``first_N`` for every ordered pair of cells (used for mixing consistency checks)."""
    return {(i, j): eventually_covers(f, K, L, horizon).first_N
            for i, K in enumerate(cells) for j, L in enumerate(cells)}


def window(p: Fraction, n: int, domain: Interval) -> Interval:
    """``[p - 1/(4n), p + 1/(4n)]`` clipped to the domain; its length is below ``1/n``."""
    r = Fraction(1, 4 * n)
    return Interval(max(domain.lo, p - r), min(domain.hi, p + r))
