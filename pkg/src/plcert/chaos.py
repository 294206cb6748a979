"""Fixed-point trichotomy, turbulence certificates and the invariant-interval dichotomy.

Turbulence search uses the classical characterization of turbulent interval
maps: ``f`` is turbulent iff there are points ``a, b, c`` with
``f(a) = f(b) = a``, ``f(c) = b`` and ``c`` strictly between ``a`` and ``b``.
Such a triple gives the certificate ``J0 = [a, c]``, ``J1 = [c, b]`` (or its
mirror), and the triples of a PL map are finitely enumerable, so a search
over them is exhaustive whenever every fixed point is isolated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import HypothesisFailed, NoInteriorFixedPoint, PreconditionError
from .exact import Interval, PLMap, evaluate, fixed_points, image, image_iter, iterate, preimage

COND1, COND2, COND3, NONE = "COND1", "COND2", "COND3", "NONE"
TURBULENT, DOUBLY_TURBULENT = "TURBULENT", "DOUBLY_TURBULENT"

_OPS = {
    "<": lambda v: v < 0,
    "<=": lambda v: v <= 0,
    ">": lambda v: v > 0,
    ">=": lambda v: v >= 0,
}


def _first_point(lo, hi, lo_open, hi_open, conds):
    """Least candidate ``x`` in the (half-)open interval meeting every affine condition.

    ``conds`` holds ``(slope, intercept, op)`` triples meaning ``slope*x + intercept op 0``.
    The feasible set is an interval whose endpoints are among ``lo``, ``hi`` and
    the roots, so those points and the midpoints between them decide it.
    """
    if lo > hi or (lo == hi and (lo_open or hi_open)):
        return None
    cands = {lo, hi}
    for s, c, _ in conds:
        if s != 0:
            r = -c / s
            if lo <= r <= hi:
                cands.add(r)
    pts = sorted(cands)
    pts += [(u + v) / 2 for u, v in zip(pts, pts[1:])]
    for x in sorted(pts):
        if (lo_open and x == lo) or (hi_open and x == hi):
            continue
        if all(_OPS[op](s * x + c) for s, c, op in conds):
            return x
    return None


def _affine(x0, x1, y0, y1):
    s = (y1 - y0) / (x1 - x0)
    return s, y0 - s * x0


@dataclass(frozen=True)
class ConditionClassification:
    fixed_points_interior: tuple
    verdict: str
    z: Fraction | None = None
    witness: Fraction | None = None  # c for COND1, c-hat for COND2
    sign_certificates: tuple = ()  # COND3: (piece, side, extreme value of f on the piece)
    notes: tuple = ()

    def verify(self, f: PLMap) -> bool:
        """Re-check the witness by direct evaluation."""
        z, c = self.z, self.witness
        if self.verdict == COND1:
            fc = evaluate(f, c)
            return evaluate(f, z) == z and c != z and (fc - z) / (c - z) >= 1
        if self.verdict == COND2:
            fc = evaluate(f, c)
            return evaluate(f, z) == z and (c < fc < z or z < fc < c)
        if self.verdict == COND3:
            for (x0, x1), side, _ in self.sign_certificates:
                vals = (evaluate(f, x0), evaluate(f, x1))
                if side == "left" and min(vals) < z:
                    return False
                if side == "right" and max(vals) > z:
                    return False
            return [s.point for s in fixed_points(f)] == [z]
        return True


def classify_conditions(f: PLMap) -> ConditionClassification:
    """Decide the fixed-point trichotomy by exact per-piece inequality solving.

    Interior fixed points are tried in ascending order and the first witness
    wins.  Maps with a fixed segment get verdict NONE with a note.
    """
    if not f.is_selfmap():
        raise PreconditionError("classification needs a self-map")
    dom = f.domain
    fixed = fixed_points(f)
    interior = tuple(s.point for s in fixed if s.kind == "isolated" and dom.lo < s.point < dom.hi)
    if any(s.kind == "segment" for s in fixed):
        return ConditionClassification(interior, NONE, notes=("fixed-point segment present; trichotomy undefined",))
    if not interior:
        raise NoInteriorFixedPoint("no isolated fixed point in the interior of the domain")
    pieces = list(f.pieces())

    def search(z, make_conds):
        # left side x < z, then right side x > z
        for side in ("left", "right"):
            for x0, x1, y0, y1 in pieces:
                s, c = _affine(x0, x1, y0, y1)
                if side == "left":
                    lo, hi, lo_open, hi_open = x0, min(x1, z), False, x1 >= z
                else:
                    lo, hi, lo_open, hi_open = max(x0, z), x1, x0 <= z, False
                x = _first_point(lo, hi, lo_open, hi_open, make_conds(side, s, c, z))
                if x is not None:
                    return x
        return None

    def cond1(side, s, c, z):
        # f(x) - x <= 0 left of z, f(x) - x >= 0 right of z
        return [(s - 1, c, "<=" if side == "left" else ">=")]

    def cond2(side, s, c, z):
        if side == "left":
            return [(s - 1, c, ">"), (s, c - z, "<")]
        return [(s - 1, c, "<"), (s, c - z, ">")]

    for z in interior:
        x = search(z, cond1)
        if x is not None:
            return ConditionClassification(interior, COND1, z, x)
    for z in interior:
        x = search(z, cond2)
        if x is not None:
            return ConditionClassification(interior, COND2, z, x)
    if len(fixed) == 1:
        z = interior[0]
        certs = []
        ok = True
        for x0, x1, y0, y1 in pieces:
            if x1 <= z:
                certs.append(((x0, x1), "left", min(y0, y1)))
                ok = ok and min(y0, y1) >= z
            elif x0 >= z:
                certs.append(((x0, x1), "right", max(y0, y1)))
                ok = ok and max(y0, y1) <= z
            else:
                fz = z  # z is a fixed point inside this piece
                certs.append(((x0, z), "left", min(y0, fz)))
                certs.append(((z, x1), "right", max(fz, y1)))
                ok = ok and min(y0, fz) >= z and max(fz, y1) <= z
        if ok:
            return ConditionClassification(interior, COND3, z, None, tuple(certs))
    return ConditionClassification(interior, NONE, notes=("no trichotomy condition holds",))


@dataclass(frozen=True)
class TurbulenceCertificate:
    J0: Interval
    J1: Interval
    images: tuple
    level: str = TURBULENT
    strategy: str = ""
    triple: tuple = ()  # (a, b, c) when found by the exhaustive search

    @property
    def host(self) -> Interval:
        return self.J0.hull(self.J1)

    def verify(self, f: PLMap) -> bool:
        union = self.J0.hull(self.J1)
        inter = self.J0.intersection(self.J1)
        if inter is not None and not inter.degenerate:
            return False
        return all(image(f, J).contains(union) for J in (self.J0, self.J1))


@dataclass(frozen=True)
class DoubleTurbulenceCertificate:
    hosts: tuple  # (I0, I1)
    parts: tuple  # one TurbulenceCertificate per host
    level: str = DOUBLY_TURBULENT

    def verify(self, f: PLMap) -> bool:
        I0, I1 = self.hosts
        inter = I0.intersection(I1)
        if inter is not None and not inter.degenerate:
            return False
        return all(h.contains(p.host) and p.verify(f) for h, p in zip(self.hosts, self.parts))


@dataclass(frozen=True)
class NotFound:
    exhaustive: bool
    reason: str = ""

    def __bool__(self):
        return False


def _certify(f: PLMap, J0: Interval, J1: Interval, strategy: str, triple=()) -> TurbulenceCertificate | None:
    cert = TurbulenceCertificate(J0, J1, (image(f, J0), image(f, J1)), TURBULENT, strategy, triple)
    return cert if cert.verify(f) else None


def _constructive(f: PLMap) -> TurbulenceCertificate | None:
    """Search between consecutive fixed points, following the proof pattern.

    On a gap where ``f`` stays below the diagonal with right fixed point ``q``,
    take ``d`` the last ``q``-preimage left of the gap and ``b`` the leftmost
    minimizer of ``f`` on ``[d, q]``; ``f(b) <= d`` certifies ``[d, b], [b, q]``.
    The mirror case handles gaps above the diagonal.
    """
    fixed = [s.interval for s in fixed_points(f)]
    for left, right in zip(fixed, fixed[1:]):
        p, q = left.hi, right.lo
        mid = (p + q) / 2
        if evaluate(f, mid) < mid:
            pre = [I for I in preimage(f, Interval.point(q)) if I.lo < p]
            if not pre:
                continue
            d = min(pre[-1].hi, p)
            xs = [d, q] + [x for x in f.xs if d < x < q]
            b = min(xs, key=lambda x: (evaluate(f, x), x))
            if evaluate(f, b) <= d and d < b < q:
                cert = _certify(f, Interval(d, b), Interval(b, q), "constructive")
                if cert:
                    return cert
        else:
            pre = [I for I in preimage(f, Interval.point(p)) if I.hi > q]
            if not pre:
                continue
            d = max(pre[0].lo, q)
            xs = [p, d] + [x for x in f.xs if p < x < d]
            b = min(xs, key=lambda x: (-evaluate(f, x), x))
            if evaluate(f, b) >= d and p < b < d:
                cert = _certify(f, Interval(p, b), Interval(b, d), "constructive")
                if cert:
                    return cert
    return None


def _open_hit(I: Interval, lo: Fraction, hi: Fraction) -> Fraction | None:
    """A point of ``I`` inside the open interval ``(lo, hi)``, preferring the closest to ``lo``."""
    a, b = max(I.lo, lo), min(I.hi, hi)
    if a > b:
        return None
    for x in (a, b, (a + b) / 2):
        if lo < x < hi:
            return x
    return None


def turbulent_triples(f: PLMap) -> tuple[list, bool]:
    """All certificate triples ``(a, b, c)`` (one ``c`` per preimage component).

    Returns ``(triples, exhaustive)``; the search is exhaustive unless ``f``
    has a fixed segment.
    """
    fixed = fixed_points(f)
    exhaustive = all(s.kind == "isolated" for s in fixed)
    out = []
    for s in fixed:
        if s.kind != "isolated":
            continue
        a = s.point
        for comp in preimage(f, Interval.point(a)):
            if a in comp:
                continue  # c between a and b would map to a, never to b
            if comp.degenerate:
                b = comp.lo
                lo, hi = min(a, b), max(a, b)
                for C in preimage(f, Interval.point(b)):
                    c = _open_hit(C, lo, hi)
                    if c is not None:
                        out.append((a, b, c))
            else:
                # plateau at level a: need c between a and the plateau with f(c) on it
                near = comp.lo if comp.lo > a else comp.hi
                lo, hi = min(a, near), max(a, near)
                for C in preimage(f, comp):
                    c = _open_hit(C, lo, hi)
                    if c is not None:
                        out.append((a, evaluate(f, c), c))
    return sorted(set(out), key=lambda t: (min(t[0], t[1]), max(t[0], t[1]), t[2])), exhaustive


def _from_triple(f: PLMap, t) -> TurbulenceCertificate | None:
    a, b, c = t
    lo, hi = min(a, b), max(a, b)
    return _certify(f, Interval(lo, c), Interval(c, hi), "exhaustive", t)


def find_turbulence(f: PLMap) -> TurbulenceCertificate | NotFound:
    """A verified turbulence certificate, or NotFound flagged exhaustive when the search proves none exists."""
    if not f.is_selfmap():
        raise PreconditionError("turbulence search needs a self-map")
    cert = _constructive(f)
    if cert:
        return cert
    triples, exhaustive = turbulent_triples(f)
    for t in triples:
        cert = _from_triple(f, t)
        if cert:
            return cert
    return NotFound(exhaustive, "no turbulent triple" + ("" if exhaustive else " among isolated fixed points"))


def find_double_turbulence(f: PLMap) -> DoubleTurbulenceCertificate | NotFound:
    """Two certificates whose hosts share at most one point (first pair in host order)."""
    if not f.is_selfmap():
        raise PreconditionError("turbulence search needs a self-map")
    triples, exhaustive = turbulent_triples(f)
    certs = [c for c in (_from_triple(f, t) for t in triples) if c]
    # the tightest certificate per host keeps the pairing search small
    by_host = {}
    for c in certs:
        by_host.setdefault((c.host.lo, c.host.hi), c)
    hosts = sorted(by_host)
    for i, h0 in enumerate(hosts):
        for h1 in hosts[i + 1:]:
            if h0[1] <= h1[0]:
                c0, c1 = by_host[h0], by_host[h1]
                return DoubleTurbulenceCertificate((c0.host, c1.host), (c0, c1))
    return NotFound(exhaustive, "no pair of turbulent hosts with disjoint interiors")


@dataclass(frozen=True)
class Lemma5Report:
    K: Interval
    s: int
    fs_K: Interval
    f2_K: Interval
    complements: tuple  # (L, f^2(L)) for the closure of each complementary component
    passed: bool
    notes: tuple = field(default=("dense periodic points assumed by the caller, not verified",))


def check_lemma5(f: PLMap, K: Interval, s: int) -> Lemma5Report:
    """Given ``f^s(K) ⊆ K``, check ``f^2(K) = K`` and ``f^2(L) = L`` for each complementary closure ``L``."""
    dom = f.domain
    if not dom.contains(K) or K == dom or K.degenerate:
        raise PreconditionError("K must be a proper nondegenerate subinterval of the domain")
    fsK = image_iter(f, K, s)
    if not K.contains(fsK):
        raise HypothesisFailed(f"f^{s}(K) = {fsK} is not inside K = {K}")
    f2K = image_iter(f, K, 2)
    comps = []
    if dom.lo < K.lo:
        L = Interval(dom.lo, K.lo)
        comps.append((L, image_iter(f, L, 2)))
    if K.hi < dom.hi:
        L = Interval(K.hi, dom.hi)
        comps.append((L, image_iter(f, L, 2)))
    passed = f2K == K and all(L == img for L, img in comps)
    return Lemma5Report(K, s, fsK, f2K, tuple(comps), passed)


def square(f: PLMap) -> PLMap:
    return iterate(f, 2)
