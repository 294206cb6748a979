"""Markov partitions, covering matrices and graph-level certificates."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from bisect import bisect_right

import numpy as np

from .errors import BudgetExceeded, NotMarkovWithinHorizon, PreconditionError
from .exact import Interval, PLMap, evaluate, image

MAX_CUTS = 10_000


@dataclass(frozen=True)
class MarkovPartition:
    f: PLMap
    cuts: tuple
    matrix: tuple  # tuple of 0/1 row tuples
    expansive: bool

    @property
    def size(self) -> int:
        return len(self.cuts) - 1

    @property
    def cells(self) -> list[Interval]:
        return [Interval(a, b) for a, b in zip(self.cuts, self.cuts[1:])]

    def cell_of(self, x: Fraction) -> int:
        i = bisect_right(self.cuts, x) - 1
        return min(max(i, 0), self.size - 1)

    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=np.int64)

    def branch(self, i: int) -> tuple[Fraction, Fraction]:
        """``(slope, intercept)`` of the affine map ``f`` on cell ``i``."""
        a, b = self.cuts[i], self.cuts[i + 1]
        fa, fb = evaluate(self.f, a), evaluate(self.f, b)
        s = (fb - fa) / (b - a)
        return s, fa - s * a


def covering_matrix(f: PLMap, cuts) -> tuple:
    cells = [Interval(a, b) for a, b in zip(cuts, cuts[1:])]
    images = [image(f, c) for c in cells]
    return tuple(tuple(int(img.contains(c)) for c in cells) for img in images)


def detect_markov(f: PLMap, horizon: int = 64, max_cuts: int = MAX_CUTS) -> MarkovPartition:
    """Close breakpoints and domain endpoints under ``f``.

    Raises NotMarkovWithinHorizon (carrying the partial cut set) when no closure
    is reached within ``horizon`` growth rounds or ``max_cuts`` cuts.
    """
    if not f.is_selfmap():
        raise PreconditionError("Markov detection needs a self-map")
    cuts = set(f.xs)
    frontier = set(cuts)
    for _ in range(horizon + 1):
        new = {evaluate(f, c) for c in frontier} - cuts
        if not new:
            ordered = tuple(sorted(cuts))
            expansive = all(abs(s) > 1 for s in f.slopes())
            return MarkovPartition(f, ordered, covering_matrix(f, ordered), expansive)
        cuts |= new
        frontier = new
        if len(cuts) > max_cuts:
            raise NotMarkovWithinHorizon(f"cut set exceeded {max_cuts} cuts", sorted(cuts))
    raise NotMarkovWithinHorizon(f"cut set still growing after {horizon} rounds", sorted(cuts))


def _strongly_connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    if n == 0:
        return False

    def reaches_all(mat):
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in np.nonzero(mat[i])[0]:
                j = int(j)
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == n

    if n == 1:
        return bool(adj[0, 0])
    return reaches_all(adj) and reaches_all(adj.T)


def _bool_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.astype(np.int64) @ b.astype(np.int64)) > 0


@dataclass(frozen=True)
class GraphCertificate:
    size: int
    irreducible: bool
    primitive: bool
    primitivity_exponent: int | None
    power_irreducible: tuple  # flag for A^k, k = 1..K
    period: int | None  # gcd of cycle lengths when irreducible
    spectral_radius: float = field(default=float("nan"), compare=False)

    @property
    def wielandt_bound(self) -> int:
        return (self.size - 1) ** 2 + 1


def graph_certificate(P: MarkovPartition, K: int = 10) -> GraphCertificate:
    """Irreducibility, primitivity (with exponent) and irreducibility of ``A^k`` for ``k <= K``."""
    A = P.array() > 0
    r = A.shape[0]
    irreducible = _strongly_connected(A)
    exponent = None
    period = None
    if irreducible:
        power = A.copy()
        for m in range(1, (r - 1) ** 2 + 2):
            if power.all():
                exponent = m
                break
            power = _bool_matmul(power, A)
        period = _cycle_period(A)
    flags = []
    power = A.copy()
    for _ in range(K):
        flags.append(_strongly_connected(power))
        power = _bool_matmul(power, A)
    rho = float(max(abs(np.linalg.eigvals(A.astype(float))))) if r else 0.0
    return GraphCertificate(r, irreducible, exponent is not None, exponent, tuple(flags), period, rho)


def _cycle_period(A: np.ndarray) -> int:
    """Period of an irreducible 0/1 matrix: gcd of level differences along edges."""
    from math import gcd

    level = {0: 0}
    order = [0]
    for i in order:
        for j in np.nonzero(A[i])[0]:
            j = int(j)
            if j not in level:
                level[j] = level[i] + 1
                order.append(j)
    g = 0
    for i in range(A.shape[0]):
        for j in np.nonzero(A[i])[0]:
            g = gcd(g, level[i] + 1 - level[int(j)])
    return g


def communicating_classes(P: MarkovPartition) -> list[tuple[tuple, int]]:
    """Strongly connected classes of the covering graph with their periods.

    Only classes carrying at least one edge are returned, as ``(cells, period)``.
    """
    A = P.array() > 0
    r = A.shape[0]
    reach = A.copy() | np.identity(r, dtype=bool)
    for _ in range(max(1, r.bit_length())):
        reach = _bool_matmul(reach, reach)
    seen = set()
    out = []
    for i in range(r):
        if i in seen:
            continue
        members = tuple(j for j in range(r) if reach[i, j] and reach[j, i])
        seen.update(members)
        sub = A[np.ix_(members, members)]
        if sub.any():
            out.append((members, _cycle_period(sub)))
    return out


def _int_matpow_trace(rows: tuple, m: int) -> int:
    A = np.array(rows, dtype=object)
    result = np.identity(len(rows), dtype=object)
    base = A
    while m:
        if m & 1:
            result = result.dot(base)
        base = base.dot(base)
        m >>= 1
    return int(sum(result[i, i] for i in range(len(rows))))


def count_markov_fixed(P: MarkovPartition, m: int) -> int:
    """``trace(A^m)``: closed walks of length ``m`` in the covering graph.

    Only claimed as a fixed-point count of ``f^m`` for expansive partitions.
    Fixed points sitting on cuts may be counted once per incident cylinder;
    :func:`reconcile_fixed` reports those explicitly.
    """
    if not P.expansive:
        raise PreconditionError("trace count is only certified for expansive Markov maps")
    if m < 1:
        raise ValueError("m must be positive")
    return _int_matpow_trace(P.matrix, m)


@dataclass(frozen=True)
class CylinderSolution:
    walk: tuple
    cylinder: Interval
    kind: str  # "isolated" | "segment"
    point: Fraction | None


def cylinder_solutions(P: MarkovPartition, m: int, max_walks: int = 2_000_000) -> list[CylinderSolution]:
    """Solve ``f^m(x) = x`` on every closed walk of length ``m``.

    Each closed walk ``w_0 -> ... -> w_{m-1} -> w_0`` fixes a cylinder on which
    ``f^m`` is the composition of the cell branches; that affine equation is
    solved exactly.  A composed branch equal to the identity is a segment.
    """
    r = P.size
    succ = [[j for j in range(r) if P.matrix[i][j]] for i in range(r)]
    branches = [P.branch(i) for i in range(r)]
    cells = P.cells
    out: list[CylinderSolution] = []
    count = 0

    def pull_back(walk):
        J = cells[walk[0]]
        for k in range(len(walk) - 1, -1, -1):
            s, c = branches[walk[k]]
            if s == 0:
                J = cells[walk[k]] if c in J else None
            else:
                a, b = (J.lo - c) / s, (J.hi - c) / s
                J = Interval(min(a, b), max(a, b)).intersection(cells[walk[k]])
            if J is None:
                return None
        return J

    def dfs(walk, alpha, beta):
        nonlocal count
        if len(walk) == m:
            if not P.matrix[walk[-1]][walk[0]]:
                return
            count += 1
            if count > max_walks:
                raise BudgetExceeded(f"more than {max_walks} closed walks of length {m}")
            J = pull_back(walk)
            if J is None:
                return
            if alpha == 1:
                if beta == 0:
                    out.append(CylinderSolution(tuple(walk), J, "segment", None))
                return
            x = beta / (1 - alpha)
            if x in J:
                out.append(CylinderSolution(tuple(walk), J, "isolated", x))
            return
        for j in succ[walk[-1]]:
            s, c = branches[j]
            walk.append(j)
            dfs(walk, s * alpha, s * beta + c)
            walk.pop()

    for start in range(r):
        s, c = branches[start]
        dfs([start], s, c)
    return out


def periodic_cuts(P: MarkovPartition, m: int) -> list[Fraction]:
    """Cuts fixed by ``f^m``.

    The cut set is forward invariant, so this is a finite scan.  A fixed cut
    whose two neighbouring cells both leave it lies on no closed walk and is
    invisible to the trace and to :func:`cylinder_solutions`.
    """
    out = []
    for c in P.cuts:
        y = c
        for _ in range(m):
            y = evaluate(P.f, y)
        if y == c:
            out.append(c)
    return out


@dataclass(frozen=True)
class FixedCountReport:
    m: int
    trace: int
    points: tuple  # distinct isolated fixed points of f^m found on cylinders
    boundary_multiplicity: dict = field(compare=False)  # point -> number of cylinders counting it
    segments: tuple = ()
    unrealized: int = 0  # closed walks whose cylinder carried no isolated fixed point
    stranded: tuple = ()  # fixed cuts lying on no closed walk

    @property
    def corrections(self) -> dict:
        """Points counted by more than one closed walk."""
        return {x: k for x, k in self.boundary_multiplicity.items() if k > 1}

    @property
    def reconciled(self) -> int:
        return self.trace - self.unrealized - sum(k - 1 for k in self.corrections.values())

    @property
    def total(self) -> int:
        """Distinct isolated fixed points of ``f^m``."""
        return self.reconciled + len(self.stranded)


def reconcile_fixed(P: MarkovPartition, m: int) -> FixedCountReport:
    """Raw trace together with the cut points that the trace counts more than once."""
    trace = count_markov_fixed(P, m)
    sols = cylinder_solutions(P, m)
    mult = Counter(s.point for s in sols if s.kind == "isolated")
    segs = tuple(sorted({s.cylinder for s in sols if s.kind == "segment"}, key=lambda I: I.lo))
    stranded = tuple(c for c in periodic_cuts(P, m)
                     if c not in mult and not any(J.lo <= c <= J.hi for J in segs))
    return FixedCountReport(m, trace, tuple(sorted(mult)), dict(mult), segs, trace - sum(mult.values()), stranded)
