"""Finite-stage scrambled-set construction with exactly replayable certificates.

Stage ``l`` owns ``l`` seeds; seed ``j`` carries ``2^(l+1)`` pairwise disjoint
compact leaves indexed by bit words of length ``l+1``.  Each stage records a
schedule of steps.  A step is a time ``k``, a shift ``s`` and a window per
leaf, and asserts ``f^(k+s)(leaf) ⊆ window``.  Later leaves only shrink, so
every recorded step remains true for the final leaves and can be replayed
with exact interval images.

Step kinds per stage ``l``:

* SEPARATION, ``s = 0..l``: leaves go to ``W(0) = V(a_l)`` or ``W(1) = V(b_l)``
  by their last bit;
* SEED_SEPARATION, ``r = 1..l-1`` and ``s = 0..l``: seeds ``j <= r`` go to
  ``V(a_l)``, the others to ``V(b_l)``;
* PROXIMALITY, ``m = 1..l``: all leaves go into ``V(v_m)``;
* DENSITY: all leaves go into the open set ``U_l`` at a time divisible by ``l!``;
* TRACKING (optional): leaves into ``V(y_m)`` or the far window ``V^(y_m)``
  while the tracked periodic point ``x_m`` sits in ``V(y_m)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .chaos import COND3, classify_conditions
from .errors import CoverageTimeout, DisjointnessFailure, NotMarkovWithinHorizon, PreconditionError, ReplayFailure
from .exact import Interval, PLMap, evaluate, fixed_points, image, image_iter, iterate, sup_displacement
from .markov import detect_markov, graph_certificate
from .covering import eventually_covers, window
from .orbits import orbit_of

SEPARATION = "SEPARATION"
SEED_SEPARATION = "SEED_SEPARATION"
PROXIMALITY = "PROXIMALITY"
DENSITY = "DENSITY"
TRACKING = "TRACKING"

DEFAULT_HORIZON = 2000


# ---------------------------------------------------------------------------
# configuration and defaults


@dataclass(frozen=True)
class ScrambleConfig:
    f: PLMap
    stages: int = 1
    q: int = 1  # time set M = positive multiples of q
    proximality_points: tuple = ()  # v_1, v_2, ...; defaults to fixed points
    tracked_points: tuple = ()  # periodic x_1, x_2, ...
    horizon: int = DEFAULT_HORIZON
    n1: int | None = None  # resolution of stage 1
    divisibility: bool = True

    def __post_init__(self):
        if self.stages < 0:
            raise ValueError("stages must be >= 0")
        if self.q < 1:
            raise ValueError("q must be positive")

    def a_b(self, l: int) -> tuple[Fraction, Fraction]:
        d = self.f.domain
        r = d.width / 2 ** (l + 2)
        return d.lo + r, d.hi - r

    def first_resolution(self) -> int:
        # windows of total length <= 1/n stay well apart once 1/n <= |I|/4
        return self.n1 if self.n1 is not None else math.ceil(4 / self.f.domain.width)

    def v_points(self) -> tuple:
        if self.proximality_points:
            return tuple(self.proximality_points)
        d = self.f.domain
        fx = [s.point for s in fixed_points(self.f)]
        inner = [x for x in fx if d.lo < x < d.hi]
        return tuple(inner + [x for x in fx if x not in inner]) or (d.midpoint,)


def base_opens(domain: Interval):
    """Enumerate open intervals with rational endpoints: grid ``1/q`` for q = 1, 2, ..."""
    seen = set()
    for qd in itertools.count(1):
        for i in range(qd):
            for j in range(i + 1, qd + 1):
                lo = domain.lo + domain.width * Fraction(i, qd)
                hi = domain.lo + domain.width * Fraction(j, qd)
                if (lo, hi) not in seen:
                    seen.add((lo, hi))
                    yield Interval(lo, hi)


def nth_open(domain: Interval, j: int) -> Interval:
    """``U_j`` (1-based) as the closure of the open interval; openness is kept by callers."""
    return next(itertools.islice(base_opens(domain), j - 1, None))


def far_window(y: Fraction, n: int, domain: Interval) -> Interval:
    end = domain.lo if y - domain.lo >= domain.hi - y else domain.hi
    return window(end, n, domain)


def omega_words(length: int) -> list[str]:
    """Distinct length-``length`` prefixes of ``a0 a0a1 a0a1a2 ...`` over all bit sequences."""
    out = set()
    for bits_ in itertools.product("01", repeat=length):
        code = ""
        k = 1
        while len(code) < length:
            code += "".join(bits_[:k])
            k += 1
        out.add(code[:length])
    return sorted(out)


# ---------------------------------------------------------------------------
# certificate data


@dataclass(frozen=True)
class Step:
    kind: str
    stage: int
    time: int
    shift: int
    targets: tuple  # ((seed, word), window)
    label: tuple = ()  # e.g. (("r", 1),) or (("m", 2),)
    point: Fraction | None = None
    point_window: Interval | None = None


@dataclass(frozen=True)
class ScrambleStage:
    index: int
    n: int | None
    a: Fraction | None
    b: Fraction | None
    fresh: tuple  # ((seed, word), leaf) seeded at the start of this stage
    fresh_open: Interval | None  # U_j the fresh leaves sit in (as an open interval)
    density_open: Interval | None  # U_l for the DENSITY step (open)
    leaves: tuple  # ((seed, word), leaf) at the end of the stage
    steps: tuple = ()

    def leaf_map(self) -> dict:
        return dict(self.leaves)

    @property
    def width_bound(self) -> Fraction:
        return Fraction(1, 2 ** (2 * self.index + 1))


@dataclass(frozen=True)
class ScrambleCertificate:
    f: PLMap
    stages: tuple
    q: int = 1
    v_points: tuple = ()
    tracked: tuple = ()  # (x_m, y_m)
    divisibility: bool = True
    codes: tuple = ()  # omega-code prefixes of the extracted points
    points: tuple = ()  # ((seed, word), midpoint of the final leaf)

    @property
    def final(self) -> ScrambleStage:
        return self.stages[-1]

    def steps(self):
        for st in self.stages:
            yield from st.steps


# ---------------------------------------------------------------------------
# exact pull-back machinery


def _branches(f: PLMap, K: Interval, n: int, W: Interval, start: int = 0):
    """Affine branches ``(J, slope, intercept)`` of ``f^n`` on ``K``, left to right.

    Branches whose ``f^n``-image cannot meet ``W`` in more than a point are
    pruned with one interval-image check per node, so the search stays small
    even when ``f^n|K`` has very many laps.  ``start`` is a level ``m <= n``
    at which ``f^m`` is already known to be affine on ``K``; the search
    resumes there.
    """
    xs = f.xs

    seen = {}

    def alive(A: Interval, r: int) -> bool:
        if (A, r) in seen:
            return seen[A, r]
        img = image_iter(f, A, r)
        inter = img.intersection(W)
        seen[A, r] = ok = inter is not None and (not inter.degenerate or (img.degenerate and W.degenerate))
        return ok

    def rec(J: Interval, al: Fraction, be: Fraction, i: int):
        if i == n:
            yield J, al, be
            return
        A = Interval(min(al * J.lo + be, al * J.hi + be), max(al * J.lo + be, al * J.hi + be))
        cuts = [A.lo] + [x for x in xs if A.lo < x < A.hi] + [A.hi]
        parts = list(zip(cuts, cuts[1:])) if not A.degenerate else [(A.lo, A.hi)]
        if al < 0:
            parts.reverse()
        for y0, y1 in parts:
            P = Interval(y0, y1)
            k = f.piece_index(P.midpoint)
            px0, px1 = xs[k], xs[k + 1]
            s = (f.ys[k + 1] - f.ys[k]) / (px1 - px0)
            c = f.ys[k] - s * px0
            if not alive(Interval(min(s * y0 + c, s * y1 + c), max(s * y0 + c, s * y1 + c)), n - i - 1):
                continue
            if al == 0:
                Jc = J
            else:
                u, v = (y0 - be) / al, (y1 - be) / al
                Jc = Interval(min(u, v), max(u, v))
            yield from rec(Jc, s * al, s * be + c, i + 1)

    al, be = affine_power(f, K, start)
    if n == start:
        yield K, al, be
        return
    A = Interval(min(al * K.lo + be, al * K.hi + be), max(al * K.lo + be, al * K.hi + be))
    if not alive(A, n - start):
        return
    yield from rec(K, al, be, start)


def affine_power(f: PLMap, K: Interval, m: int) -> tuple[Fraction, Fraction]:
    """``(slope, intercept)`` of ``f^m`` on ``K``, assuming ``f^i(K)`` stays in one piece for ``i < m``."""
    al, be = Fraction(1), Fraction(0)
    lo, hi = K.lo, K.hi
    for _ in range(m):
        k = f.piece_index((lo + hi) / 2)
        x0, x1 = f.xs[k], f.xs[k + 1]
        if not (x0 <= lo and hi <= x1):
            raise ValueError(f"f^{m} is not affine on {K}")
        s = (f.ys[k + 1] - f.ys[k]) / (x1 - x0)
        c = f.ys[k] - s * x0
        al, be = s * al, s * be + c
        lo, hi = sorted((s * lo + c, s * hi + c))
    return al, be


def pull_into(f: PLMap, K: Interval, n: int, W: Interval, start: int = 0) -> Interval | None:
    """Leftmost nondegenerate ``J ⊆ K`` on which ``f^n`` is affine with ``f^n(J) ⊆ W``."""
    for J, al, be in _branches(f, K, n, W, min(start, n)):
        if al == 0:
            if W.lo <= be <= W.hi and not J.degenerate:
                return J
            continue
        u, v = (W.lo - be) / al, (W.hi - be) / al
        sub = Interval(min(u, v), max(u, v)).intersection(J)
        if sub is not None and not sub.degenerate:
            return sub
    return None


def periodic_point_in(f: PLMap, K: Interval, t: int) -> Fraction | None:
    """A fixed point of ``f^t`` inside ``K`` (leftmost branch first)."""
    for J, al, be in _branches(f, K, t, K):
        if al == 1:
            if be == 0:
                return J.lo
            continue
        x = be / (1 - al)
        if x in J:
            return x
    return None


# ---------------------------------------------------------------------------
# construction


def mixing_evidence(f: PLMap, horizon: int = 64) -> str:
    """Name of the evidence that ``f`` is mixing, or raise PreconditionError."""
    try:
        P = detect_markov(f)
        cert = graph_certificate(P)
        if P.expansive and cert.primitive:
            return "markov-primitive"
    except NotMarkovWithinHorizon:
        pass
    d = f.domain
    if all(eventually_covers(f, Interval(x0, x1), d, horizon).first_N for x0, x1, _, _ in f.pieces()):
        return "pieces-cover-domain"
    raise PreconditionError("no mixing evidence for this map (Markov-primitive or piece covering)")


class _Builder:
    def __init__(self, cfg: ScrambleConfig):
        self.cfg = cfg
        self.f = cfg.f
        self.dom = cfg.f.domain
        self.last_time = 0
        self.levels = {}  # leaf key -> m with f^m affine on the leaf
        self.v = cfg.v_points()
        self.tracked = []
        for x in cfg.tracked_points:
            orb = orbit_of(self.f, x, 10_000)
            if orb is None:
                raise PreconditionError(f"tracked point {x} is not periodic; only periodic points are tracked exactly")
            self.tracked.append((x, x, orb.least_period))

    def search(self, leaves: dict, targets: dict, shift: int, modulus: int, point=None) -> int:
        """Least time ``k`` after the last one, ``k ≡ 0 (mod modulus)``, covering every target."""
        f = self.f
        horizon = self.cfg.horizon
        trajs = {key: [leaves[key]] for key in targets}

        def img(key, n):
            tr = trajs[key]
            while len(tr) <= n:
                nxt = image(f, tr[-1])
                tr.append(nxt)
            return tr[n]

        k = (self.last_time // modulus + 1) * modulus
        while k <= horizon:
            ok = all(img(key, k + shift).contains(W) for key, W in targets.items())
            if ok and point is not None:
                x, Wp, per = point
                ok = evaluate_iter(f, x, (k + shift) % per) in Wp
            if ok:
                return k
            k += modulus
        raise CoverageTimeout(f"no qualifying time up to horizon {horizon}")

    def step(self, kind, stage, leaves, targets, shift=0, label=(), modulus=None, point=None) -> Step:
        modulus = modulus or self.cfg.q
        k = self.search(leaves, targets, shift, modulus, point)
        for key, W in targets.items():
            m = self.levels.get(key, 0)
            J = pull_into(self.f, leaves[key], k + shift, W, m)
            if J is None:
                raise DisjointnessFailure(f"pull-back failed for leaf {key} at time {k}")
            leaves[key] = J
            self.levels[key] = max(m, k + shift)
        self.last_time = k
        targets_t = tuple(sorted(targets.items()))
        if point is not None:
            return Step(kind, stage, k, shift, targets_t, label, point[0], point[1])
        return Step(kind, stage, k, shift, targets_t, label)


def _fresh_leaves(U: Interval, existing, count: int, seed: int, word_len: int) -> dict:
    """``count`` disjoint compact leaves inside the open interval ``U`` avoiding ``existing``."""
    gaps = [(U.lo, U.hi)]
    for K in sorted(existing, key=lambda I: I.lo):
        nxt = []
        for g0, g1 in gaps:
            if K.hi <= g0 or K.lo >= g1:
                nxt.append((g0, g1))
                continue
            if g0 < K.lo:
                nxt.append((g0, K.lo))
            if K.hi < g1:
                nxt.append((K.hi, g1))
        gaps = nxt
    gaps = [g for g in gaps if g[0] < g[1]]
    if not gaps:
        raise DisjointnessFailure(f"no room left in {U}")
    g0, g1 = max(gaps, key=lambda g: (g[1] - g[0], -g[0]))
    step = (g1 - g0) / (2 * count + 1)
    words = ["".join(w) for w in itertools.product("01", repeat=word_len)]
    return {(seed, w): Interval(g0 + (2 * i + 1) * step, g0 + (2 * i + 2) * step) for i, w in enumerate(words)}


def _shrink(K: Interval, bound: Fraction) -> Interval:
    if K.width < bound:
        return K
    c, r = K.midpoint, bound / 4
    return Interval(c - r, c + r)


def _closed_core(U: Interval) -> Interval:
    r = U.width / 4
    return Interval(U.lo + r, U.hi - r)


def build_scramble(cfg: ScrambleConfig, check_mixing: bool = True) -> ScrambleCertificate:
    """Run the staged construction and return a replayable certificate."""
    f = cfg.f
    if not f.is_selfmap():
        raise PreconditionError("scramble construction needs a self-map")
    if check_mixing:
        mixing_evidence(f)
    B = _Builder(cfg)
    dom = B.dom
    U1 = nth_open(dom, 1)
    leaves = _fresh_leaves(U1, [], 2, 1, 1)
    stages = [ScrambleStage(0, None, None, None, tuple(sorted(leaves.items())), U1, None, tuple(sorted(leaves.items())))]
    n_first = cfg.first_resolution()
    for l in range(1, cfg.stages + 1):
        n = max(n_first, B.last_time + 1)
        a, b = cfg.a_b(l)
        Wa, Wb = window(a, n, dom), window(b, n, dom)
        B.last_time = max(B.last_time, n)
        fresh = {}
        fresh_open = None
        if l >= 2:
            fresh_open = nth_open(dom, l)
            fresh = _fresh_leaves(fresh_open, list(leaves.values()), 2 ** l, l, l)
            leaves.update(fresh)
        steps = []
        # split every leaf into its two children with the unshifted separation step
        parents = dict(leaves)
        cover = {key: Wa.hull(Wb) for key in parents}
        k = B.search(parents, cover, 0, cfg.q)
        leaves = {}
        for key, K in parents.items():
            for bit, W in (("0", Wa), ("1", Wb)):
                m = B.levels.get(key, 0)
                J = pull_into(f, K, k, W, m)
                if J is None:
                    raise DisjointnessFailure(f"could not split leaf {key}")
                leaves[(key[0], key[1] + bit)] = J
                B.levels[(key[0], key[1] + bit)] = max(m, k)
        B.last_time = k
        steps.append(Step(SEPARATION, l, k, 0,
                          tuple(sorted((key, Wa if key[1][-1] == "0" else Wb) for key in leaves))))
        for s in range(1, l + 1):
            targets = {key: (Wa if key[1][-1] == "0" else Wb) for key in leaves}
            steps.append(B.step(SEPARATION, l, leaves, targets, s))
        for r in range(1, l):
            for s in range(0, l + 1):
                targets = {key: (Wa if key[0] <= r else Wb) for key in leaves}
                steps.append(B.step(SEED_SEPARATION, l, leaves, targets, s, (("r", r),)))
        for m in range(1, l + 1):
            v = B.v[(m - 1) % len(B.v)]
            Wv = window(v, n, dom)
            steps.append(B.step(PROXIMALITY, l, leaves, {key: Wv for key in leaves}, 0, (("m", m),)))
        U_l = nth_open(dom, l)
        core = _closed_core(U_l)
        modulus = math.lcm(cfg.q, math.factorial(l)) if cfg.divisibility else cfg.q
        steps.append(B.step(DENSITY, l, leaves, {key: core for key in leaves}, 0, (), modulus))
        for m, (x, y, per) in enumerate(B.tracked[:l], start=1):
            Vy, Vhat = window(y, n, dom), far_window(y, n, dom)
            for s in range(0, l + 1):
                for tag, W in (("near", Vy), ("far", Vhat)):
                    steps.append(B.step(TRACKING, l, leaves, {key: W for key in leaves}, s,
                                        (("m", m), ("side", tag)), None, (x, Vy, per)))
        bound = Fraction(1, 2 ** (2 * l + 1))
        leaves = {key: _shrink(K, bound) for key, K in leaves.items()}
        nxt = nth_open(dom, l + 1)
        _fresh_leaves(nxt, list(leaves.values()), 1, 0, 0)  # raises when U_{l+1} is used up
        stages.append(ScrambleStage(l, n, a, b, tuple(sorted(fresh.items())), fresh_open, U_l,
                                    tuple(sorted(leaves.items())), tuple(steps)))
    L = cfg.stages
    codes = tuple(omega_words(L + 1))
    final = dict(stages[-1].leaves)
    points = tuple(((j, w), final[(j, w)].midpoint) for j in range(1, max(L, 1) + 1) for w in codes if (j, w) in final)
    return ScrambleCertificate(f, tuple(stages), cfg.q, B.v, tuple((x, y) for x, y, _ in B.tracked),
                               cfg.divisibility, codes, points)


def evaluate_iter(f: PLMap, x: Fraction, n: int) -> Fraction:
    for _ in range(n):
        x = evaluate(f, x)
    return x


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class VerifyReport:
    ok: bool
    steps_checked: int
    leaves_checked: int
    failures: tuple = ()


def _strict_inside_open(K: Interval, U: Interval) -> bool:
    return U.lo < K.lo and K.hi < U.hi


def verify_certificate(cert: ScrambleCertificate) -> VerifyReport:
    """Replay every recorded fact exactly; raises ReplayFailure at the first broken one."""
    f = cert.f
    prev_leaves: dict = {}
    last_time = 0
    n_steps = 0
    n_leaves = 0
    for st in cert.stages:
        leaves = st.leaf_map()
        where = f"stage {st.index}"
        # nesting and seeding
        fresh = dict(st.fresh)
        for key, K in fresh.items():
            if st.fresh_open is None or not _strict_inside_open(K, st.fresh_open):
                raise ReplayFailure(f"{where}: fresh leaf {key} not inside its open set", (st.index, "fresh", key))
        parents = dict(prev_leaves)
        parents.update(fresh)
        for key, K in leaves.items():
            if st.index == 0:
                if not _strict_inside_open(K, st.fresh_open):
                    raise ReplayFailure(f"{where}: seed leaf {key} outside U_1", (0, "seed", key))
                continue
            parent = parents.get((key[0], key[1][:-1]))
            if parent is None or not parent.contains(K):
                raise ReplayFailure(f"{where}: leaf {key} not nested in its parent", (st.index, "nesting", key))
            if K.degenerate:
                raise ReplayFailure(f"{where}: leaf {key} has empty interior", (st.index, "interior", key))
            if st.index >= 1 and not K.width < st.width_bound:
                raise ReplayFailure(f"{where}: leaf {key} too wide", (st.index, "width", key))
        if st.index >= 1:
            expected = {(j, "".join(w)) for j in range(1, st.index + 1) for w in itertools.product("01", repeat=st.index + 1)}
            if set(leaves) != expected:
                raise ReplayFailure(f"{where}: leaf index set is wrong", (st.index, "index"))
        ordered = sorted(leaves.items(), key=lambda kv: kv[1].lo)
        for (k1, A), (k2, B) in zip(ordered, ordered[1:]):
            if A.hi >= B.lo:
                raise ReplayFailure(f"{where}: leaves {k1} and {k2} overlap", (st.index, "disjoint", k1, k2))
        n_leaves += len(leaves)
        # schedule
        for idx, stp in enumerate(st.steps):
            tag = (st.index, idx, stp.kind)
            if stp.time <= last_time:
                raise ReplayFailure(f"{where} step {idx}: time {stp.time} not increasing", tag)
            if st.n is not None and stp.time <= st.n:
                raise ReplayFailure(f"{where} step {idx}: time not above resolution", tag)
            if stp.time % cert.q:
                raise ReplayFailure(f"{where} step {idx}: time {stp.time} outside M", tag)
            if stp.kind == DENSITY:
                if cert.divisibility and stp.time % math.factorial(st.index):
                    raise ReplayFailure(f"{where} step {idx}: density time not divisible by {st.index}!", tag)
                for _, W in stp.targets:
                    if not _strict_inside_open(W, st.density_open):
                        raise ReplayFailure(f"{where} step {idx}: density window outside U", tag)
            elif any(not W.width < Fraction(1, st.n) for _, W in stp.targets):
                raise ReplayFailure(f"{where} step {idx}: window not shorter than 1/{st.n}", tag)
            last_time = stp.time
            keys = {key for key, _ in stp.targets}
            if keys != set(leaves):
                raise ReplayFailure(f"{where} step {idx}: step does not cover every leaf", tag)
            for key, W in stp.targets:
                img = image_iter(f, leaves[key], stp.time + stp.shift)
                if not W.contains(img):
                    raise ReplayFailure(f"{where} step {idx} ({stp.kind}): f^{stp.time + stp.shift}{leaves[key]} = {img} not in {W}", tag)
            if stp.point is not None:
                y = evaluate_iter(f, stp.point, stp.time + stp.shift)
                if y not in stp.point_window:
                    raise ReplayFailure(f"{where} step {idx}: tracked point leaves its window", tag)
            n_steps += 1
        prev_leaves = leaves
    final = cert.final.leaf_map()
    for key, x in cert.points:
        if key not in final or x not in final[key]:
            raise ReplayFailure(f"extracted point for {key} is not in its leaf", ("points", key))
    return VerifyReport(True, n_steps, n_leaves)


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class SeparationClaim:
    pair: tuple  # two leaf keys
    stage: int
    time: int
    windows: tuple
    bound: Fraction  # |a_l - b_l| minus the two window widths
    gap: Fraction  # exact distance between the windows
    observed: Fraction  # exact distance of the two points at that time


@dataclass(frozen=True)
class ProximityClaim:
    stage: int
    time: int
    window: Interval
    bound: Fraction  # window width
    observed: Fraction  # exact diameter of all extracted points at that time


@dataclass(frozen=True)
class ScrambleReport:
    beta: Fraction
    separations: tuple
    proximities: tuple
    deltas: tuple  # (n, sup_x |f^n(x) - x|)

    @property
    def min_separation_bound(self) -> Fraction | None:
        return min((c.bound for c in self.separations), default=None)


def _window_of(step: Step, key) -> Interval:
    return dict(step.targets)[key]


def scramble_report(cert: ScrambleCertificate, delta_n: int = 4) -> ScrambleReport:
    f = cert.f
    points = dict(cert.points)
    by_stage = {st.index: st for st in cert.stages}
    seps = []
    keys = sorted(points)
    for i, k1 in enumerate(keys):
        for k2 in keys[i + 1:]:
            step = None
            if k1[0] == k2[0]:
                # seed j only takes part in stages j, j+1, ...
                diff = [p for p in range(max(1, k1[0]), len(k1[1])) if k1[1][p] != k2[1][p]]
                if not diff:
                    continue
                st = by_stage[diff[0]]
                step = next(s for s in st.steps if s.kind == SEPARATION and s.shift == 0)
            else:
                j1, j2 = sorted((k1[0], k2[0]))
                st = by_stage[j2]
                step = next(s for s in st.steps if s.kind == SEED_SEPARATION and s.shift == 0 and dict(s.label)["r"] == j1)
            st = by_stage[step.stage]
            # windows are attached to the stage's leaves; an extracted point sits in a descendant
            anc1 = (k1[0], k1[1][: st.index + 1])
            anc2 = (k2[0], k2[1][: st.index + 1])
            W1, W2 = _window_of(step, anc1), _window_of(step, anc2)
            y1 = evaluate_iter(f, points[k1], step.time)
            y2 = evaluate_iter(f, points[k2], step.time)
            bound = abs(st.b - st.a) - (W1.width + W2.width)
            seps.append(SeparationClaim((k1, k2), st.index, step.time, (W1, W2), bound, W1.distance(W2), abs(y1 - y2)))
    prox = []
    for st in cert.stages:
        for step in st.steps:
            if step.kind != PROXIMALITY:
                continue
            W = step.targets[0][1]
            ys = [evaluate_iter(f, x, step.time) for key, x in points.items() if key[0] <= st.index]
            prox.append(ProximityClaim(st.index, step.time, W, W.width, max(ys) - min(ys) if ys else Fraction(0)))
    deltas = tuple((n, sup_displacement(f, n)) for n in range(1, delta_n + 1))
    return ScrambleReport(f.domain.width, tuple(seps), tuple(prox), deltas)


# ---------------------------------------------------------------------------
# invariant family through the square of a condition-(3) map


@dataclass(frozen=True)
class InvariantFamilyCertificate:
    f: PLMap
    z: Fraction
    base: ScrambleCertificate  # built on f^2 restricted to the left of z
    anchors: tuple  # ((seed, word), periodic point of the base map inside the final leaf)
    S_hat: tuple  # union of base-map orbits of the anchors
    S_ddot: tuple  # S_hat together with f(S_hat)


def square_on_left(f: PLMap, z: Fraction) -> PLMap:
    g = iterate(f, 2).restrict(Interval(f.domain.lo, z))
    return PLMap(g.xs, g.ys, Interval(f.domain.lo, z), f"{f.name}^2|left" if f.name else "")


def build_invariant_family(f: PLMap, stages: int = 1, horizon: int = DEFAULT_HORIZON, q: int = 1) -> InvariantFamilyCertificate:
    """Scramble ``g = f^2`` on ``[a, z]`` and close the anchors under ``g`` and ``f``."""
    cls = classify_conditions(f)
    if cls.verdict != COND3:
        raise PreconditionError(f"invariant-via-square path needs a condition-(3) map, got {cls.verdict}")
    z = cls.z
    g = square_on_left(f, z)
    if not g.is_selfmap():
        raise PreconditionError("f^2 does not map [a, z] into itself")
    base = build_scramble(ScrambleConfig(g, stages, q=q, horizon=horizon))
    final = base.final.leaf_map()
    anchors = []
    for key, _ in base.points:
        K = final[key]
        x = None
        for t in range(1, horizon + 1):
            if image_iter(g, K, t).contains(K):
                x = periodic_point_in(g, K, t)
                if x is not None:
                    break
        if x is None:
            raise CoverageTimeout(f"no periodic anchor found in leaf {key}")
        anchors.append((key, x))
    S_hat = set()
    for _, x in anchors:
        S_hat.update(orbit_of(g, x, horizon + 1).points)
    S_ddot = S_hat | {evaluate(f, x) for x in S_hat}
    return InvariantFamilyCertificate(f, z, base, tuple(anchors), tuple(sorted(S_hat)), tuple(sorted(S_ddot)))


@dataclass(frozen=True)
class InvariantFamilyReport:
    invariant: bool
    straddles: tuple  # (time of f, ok) for every odd time 2k+1 with k a recorded base time
    separation: tuple  # (time of f, bound, observed)
    base: VerifyReport


def verify_invariant_family(cert: InvariantFamilyCertificate) -> InvariantFamilyReport:
    """Exact checks: base replay, anchors periodic in their leaves, ``f(S̈) ⊆ S̈``, straddling and separation."""
    f, z = cert.f, cert.z
    base = verify_certificate(cert.base)
    g = cert.base.f
    final = cert.base.final.leaf_map()
    for key, x in cert.anchors:
        if x not in final[key] or orbit_of(g, x, 100_000) is None:
            raise ReplayFailure(f"anchor {key} is not a periodic point inside its leaf", ("anchor", key))
    S_hat = set()
    for _, x in cert.anchors:
        S_hat.update(orbit_of(g, x, 100_000).points)
    if tuple(sorted(S_hat)) != cert.S_hat:
        raise ReplayFailure("recorded S_hat differs from the recomputed orbits", ("S_hat",))
    S_ddot = set(cert.S_ddot)
    if S_ddot != S_hat | {evaluate(f, x) for x in S_hat}:
        raise ReplayFailure("recorded S_ddot differs from S_hat and its image", ("S_ddot",))
    invariant = all(evaluate(f, x) in S_ddot for x in S_ddot)
    if not invariant:
        raise ReplayFailure("f(S_ddot) is not inside S_ddot", ("invariance",))
    left = sorted(S_hat)
    right = sorted(S_ddot - S_hat)
    orbits = {x: orbit_of(g, x, 100_000).points for x in left}

    def g_pow(x, k):
        pts = orbits[x]
        return pts[(pts.index(x) + k) % len(pts)]

    straddles = []
    seps = []
    times = sorted({s.time + s.shift for s in cert.base.steps()})
    for k in times:
        # at f-time 2k+1 the left family sits right of z and f(left family) sits left of z
        # f^(2k+1)(x) = f(g^k(x)) and, for y = f(x'), f^(2k+1)(y) = g^k(f(y))
        ok = all(evaluate(f, g_pow(x, k)) >= z for x in left) and all(g_pow(evaluate(f, y), k) <= z for y in right)
        straddles.append((2 * k + 1, ok))
        if not ok:
            raise ReplayFailure(f"straddle fails at time {2 * k + 1}", ("straddle", k))
    for st in cert.base.stages:
        for step in st.steps:
            if step.kind != SEPARATION or step.shift != 0:
                continue
            Wa = next(W for key, W in step.targets if key[1][-1] == "0")
            bound = z - Wa.hi
            lows = [x for key, x in cert.anchors if key[1][st.index] == "0"]
            if not lows or not right:
                continue
            x = lows[0]
            y = right[0]
            gx = g_pow(x, step.time)
            fy = evaluate(f, g_pow(y_pre(y, f, left), step.time))
            observed = abs(gx - fy)
            if observed < bound:
                raise ReplayFailure("separation bound violated", ("separation", step.time))
            seps.append((2 * step.time, bound, observed))
    return InvariantFamilyReport(invariant, tuple(straddles), tuple(seps), base)


def y_pre(y: Fraction, f: PLMap, left) -> Fraction:
    """A point of the left family mapped onto ``y`` by ``f``."""
    return next(x for x in left if evaluate(f, x) == y)
