"""Exact periodic orbits, period spectra and period-claim verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetExceeded, ClassificationUnavailable, NotMarkovWithinHorizon, PreconditionError
from .exact import DEFAULT_BUDGET, Interval, PieceBudget, PLMap, evaluate, fixed_points, iterate
from .markov import cylinder_solutions, detect_markov, periodic_cuts


@dataclass(frozen=True)
class PeriodicOrbit:
    points: tuple  # full cycle in orbit order, starting at its least element
    least_period: int

    @property
    def witness(self) -> tuple:
        """Evaluation trace ``(x, f(x))`` around the cycle."""
        pts = self.points
        return tuple((pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts)))

    def __contains__(self, x) -> bool:
        return x in self.points


@dataclass(frozen=True)
class PeriodicSegment:
    interval: Interval
    m: int
    midpoint_period: int


@dataclass(frozen=True)
class PeriodicPoints:
    m: int
    orbits: tuple
    segments: tuple
    strategy: str

    def of_period(self, p: int) -> list[PeriodicOrbit]:
        return [o for o in self.orbits if o.least_period == p]

    def points(self) -> set:
        return {x for o in self.orbits for x in o.points}


def orbit_of(f: PLMap, x: Fraction, limit: int) -> PeriodicOrbit | None:
    """The cycle through ``x`` if ``x`` returns within ``limit`` steps."""
    pts = [x]
    y = evaluate(f, x)
    while y != x:
        if len(pts) >= limit:
            return None
        pts.append(y)
        y = evaluate(f, y)
    k = pts.index(min(pts))
    return PeriodicOrbit(tuple(pts[k:] + pts[:k]), len(pts))


def _group(f: PLMap, points, m: int) -> tuple:
    remaining = set(points)
    orbits = []
    for x in sorted(points):
        if x not in remaining:
            continue
        orb = orbit_of(f, x, m)
        if orb is None:
            raise AssertionError(f"{x} is not periodic with period dividing {m}")
        remaining.difference_update(orb.points)
        orbits.append(orb)
    return tuple(sorted(orbits, key=lambda o: (o.least_period, o.points[0])))


def _direct(f: PLMap, m: int, budget: PieceBudget):
    h = iterate(f, m, budget)
    fixed = fixed_points(h)
    points = [s.point for s in fixed if s.kind == "isolated"]
    segs = [s.interval for s in fixed if s.kind == "segment"]
    return points, segs


def _cylinder(f: PLMap, m: int):
    P = detect_markov(f)
    if not P.expansive:
        raise PreconditionError("cylinder strategy needs an expansive Markov map")
    sols = cylinder_solutions(P, m)
    segs = [s.cylinder for s in sols if s.kind == "segment"]
    points = {s.point for s in sols if s.kind == "isolated"}
    # fixed cuts on no closed walk
    points.update(c for c in periodic_cuts(P, m) if not any(J.lo <= c <= J.hi for J in segs))
    points = sorted(points)
    return points, segs


def periodic_points(f: PLMap, m: int, budget: PieceBudget = DEFAULT_BUDGET, strategy: str = "auto") -> PeriodicPoints:
    """All solutions of ``f^m(x) = x`` grouped into cycles with certified least periods.

    ``strategy`` is ``"direct"`` (solve on the composed map), ``"cylinder"``
    (closed walks of an expansive Markov partition) or ``"auto"`` (direct,
    falling back to cylinders when the budget is exceeded).
    """
    if m < 1:
        raise ValueError("m must be positive")
    if strategy == "direct":
        points, segs = _direct(f, m, budget)
    elif strategy == "cylinder":
        points, segs = _cylinder(f, m)
    elif strategy == "auto":
        try:
            points, segs = _direct(f, m, budget)
            strategy = "direct"
        except BudgetExceeded as exc:
            try:
                points, segs = _cylinder(f, m)
            except (PreconditionError, NotMarkovWithinHorizon):
                raise exc from None
            strategy = "cylinder"
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    segments = []
    for seg in segs:
        orb = orbit_of(f, seg.midpoint, m)
        segments.append(PeriodicSegment(seg, m, orb.least_period if orb else m))
    return PeriodicPoints(m, _group(f, points, m), tuple(segments), strategy)


@dataclass(frozen=True)
class PeriodSpectrum:
    map_id: str
    max_checked: int
    present: frozenset
    counts: dict = field(compare=False)
    segment_flags: frozenset = frozenset()
    coverage: tuple = ()  # coverage[m-1] is False when period m hit the budget

    @property
    def complete(self) -> bool:
        return all(self.coverage)

    def orbit_count(self, m: int) -> int:
        return self.counts.get(m, 0)


def period_spectrum(f: PLMap, M: int, budget: PieceBudget = DEFAULT_BUDGET, strategy: str = "auto") -> PeriodSpectrum:
    """Least periods ``<= M`` realized by isolated periodic orbits.

    Periods whose computation exceeds the budget are marked uncovered instead of
    aborting the whole spectrum.
    """
    counts: dict[int, int] = {}
    seg_flags = set()
    coverage = []
    for m in range(1, M + 1):
        try:
            pp = periodic_points(f, m, budget, strategy)
        except BudgetExceeded:
            coverage.append(False)
            continue
        coverage.append(True)
        n = len(pp.of_period(m))
        if n:
            counts[m] = n
        seg_flags.update(s.midpoint_period for s in pp.segments if s.midpoint_period == m)
    return PeriodSpectrum(f.name or "map", M, frozenset(counts), counts, frozenset(seg_flags), tuple(coverage))


def sharkovsky_key(n: int) -> tuple:
    """Sort key for the Sharkovsky order 3, 5, 7, ..., 2*3, 2*5, ..., 8, 4, 2, 1."""
    if n < 1:
        raise ValueError("periods are positive")
    k = 0
    while n % 2 == 0:
        n //= 2
        k += 1
    if n > 1:
        return (0, k, n)
    return (1, -k, 0)


def sharkovsky_precedes(a: int, b: int) -> bool:
    return sharkovsky_key(a) < sharkovsky_key(b)


def sharkovsky_tail_check(S: PeriodSpectrum | set, M: int | None = None) -> bool:
    """True when the present periods are downward closed in the Sharkovsky order below ``M``."""
    if isinstance(S, PeriodSpectrum):
        present, M = set(S.present), S.max_checked
    else:
        present = set(S)
        M = M if M is not None else max(present, default=1)
    for p in present:
        for n in range(1, M + 1):
            if sharkovsky_precedes(p, n) and n not in present:
                return False
    return True


@dataclass(frozen=True)
class Theorem1Report:
    verdict: str
    M: int
    passed: bool
    spectrum: PeriodSpectrum
    missing: tuple
    odd_present: tuple
    notes: tuple = ()
    witnesses: dict = field(default_factory=dict, compare=False)


def verify_theorem1(f: PLMap, M: int, budget: PieceBudget = DEFAULT_BUDGET, classification=None) -> Theorem1Report:
    """Check the period claims implied by the fixed-point trichotomy.

    COND1 maps must have every period up to ``M``; COND2 and COND3 maps must
    have every even period, COND2 maps also some odd period ``>= 3`` and COND3
    maps no odd period above 1.
    """
    from .chaos import classify_conditions

    cls = classification if classification is not None else classify_conditions(f)
    if cls.verdict not in ("COND1", "COND2", "COND3"):
        raise ClassificationUnavailable(f"trichotomy verdict is {cls.verdict}")
    spec = period_spectrum(f, M, budget)
    present = spec.present
    odd = tuple(sorted(p for p in present if p % 2 and p > 1))
    notes = []
    if cls.verdict == "COND1":
        missing = tuple(m for m in range(1, M + 1) if m not in present)
        passed = not missing
        notes.append("expects every period 1..M")
    else:
        missing = tuple(m for m in range(2, M + 1, 2) if m not in present)
        passed = not missing
        notes.append("expects every even period <= M")
        if cls.verdict == "COND2":
            if M >= 3:
                passed = passed and bool(odd)
                notes.append("expects some odd period >= 3 within M")
        else:
            passed = passed and not odd
            notes.append("expects no odd period > 1")
    if not spec.complete:
        passed = False
        notes.append("spectrum incomplete under the piece budget")
    witnesses = {}
    for p in sorted(present):
        pp = periodic_points(f, p, budget)
        orbs = pp.of_period(p)
        if orbs:
            witnesses[p] = orbs[0]
    return Theorem1Report(cls.verdict, M, passed, spec, missing, odd, tuple(notes), witnesses)
