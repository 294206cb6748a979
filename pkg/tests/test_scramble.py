import math
from dataclasses import replace
from fractions import Fraction as F
from itertools import product

import pytest

from oracles import TENT_NODES, ev_iter
from plcert.covering import window
from plcert.dsl import load_map
from plcert.errors import PreconditionError, ReplayFailure
from plcert.exact import Interval, evaluate, image_iter
from plcert.scramble import (DENSITY, PROXIMALITY, SEPARATION, ScrambleCertificate, ScrambleConfig, ScrambleStage,
                             Step, build_invariant_family, build_scramble, mixing_evidence, omega_words,
                             scramble_report, verify_certificate, verify_invariant_family)

T = load_map("tent")
FH = load_map("remark4")


@pytest.fixture(scope="module")
def tent2():
    return build_scramble(ScrambleConfig(T, 2))


def I(a, b):
    return Interval(F(a), F(b))


# ---------------------------------------------------------------------------
# hand-built stage-1 certificate for the tent map
#
# Windows follow the default rule at resolution n = 4: V(1/8) = [1/16, 3/16],
# V(7/8) = [13/16, 15/16], V(2/3) = [29/48, 35/48], density core [1/4, 3/4].
# Each leaf is a tiny interval around a point whose orbit is designed
# backwards with the inverse branches y/2 and 1 - y/2:
#   T^11(x) = 2/3 (fixed), so T^14(x) = 2/3 as well;
#   T^9(x) = 1/6 or 5/6, both sent to 2/3 by T^2;
#   T^5(x) inside the same window as T^9(x).


def _back(y, word):
    for b in word:
        y = y / 2 if b == "L" else 1 - y / 2
    return y


def _preimages(y, depth):
    return sorted(_back(y, w) for w in product("LR", repeat=depth))


def hand_built_tent_certificate() -> ScrambleCertificate:
    Wa, Wb = I(F(1, 16), F(3, 16)), I(F(13, 16), F(15, 16))
    Wv, core = I(F(29, 48), F(35, 48)), I(F(1, 4), F(3, 4))
    y9 = {"0": F(1, 6), "1": F(5, 6)}
    W = {"0": Wa, "1": Wb}
    y5 = {}
    for bit in "01":
        y5[bit] = next(y for y in _preimages(y9[bit], 4) if y in W[bit])
    assert y5 == {"0": F(11, 96), "1": F(79, 96)}
    xs = {}
    for bit in "01":
        pre = _preimages(y5[bit], 5)
        xs["0" + bit], xs["1" + bit] = pre[0], pre[-1]
    r = F(1, 2 ** 24)
    leaves = {(1, w): Interval(x - r, x + r) for w, x in xs.items()}
    parents = {}
    for a in "01":
        kids = [leaves[(1, a + b)] for b in "01"]
        lo, hi = min(K.lo for K in kids), max(K.hi for K in kids)
        parents[(1, a)] = Interval(lo - r, hi + r)
    keys = sorted(leaves)
    steps = (
        Step(SEPARATION, 1, 5, 0, tuple((k, W[k[1][1]]) for k in keys)),
        Step(SEPARATION, 1, 8, 1, tuple((k, W[k[1][1]]) for k in keys)),
        Step(PROXIMALITY, 1, 11, 0, tuple((k, Wv) for k in keys), (("m", 1),)),
        Step(DENSITY, 1, 14, 0, tuple((k, core) for k in keys)),
    )
    stage0 = ScrambleStage(0, None, None, None, tuple(sorted(parents.items())), I(0, 1), None,
                           tuple(sorted(parents.items())))
    stage1 = ScrambleStage(1, 4, F(1, 8), F(7, 8), (), None, I(0, 1), tuple(sorted(leaves.items())), steps)
    points = tuple(((1, w), xs[w]) for w in ("00", "11"))
    return ScrambleCertificate(T, (stage0, stage1), 1, (F(2, 3), F(0)), (), True, ("00", "11"), points)


def test_hand_built_certificate_orbits():
    cert = hand_built_tent_certificate()
    for (_, w), K in cert.final.leaves:
        x = K.midpoint
        assert ev_iter(TENT_NODES, x, 11) == F(2, 3)
        assert ev_iter(TENT_NODES, x, 9) == (F(1, 6) if w[1] == "0" else F(5, 6))


def test_hand_built_certificate_verifies():
    rep = verify_certificate(hand_built_tent_certificate())
    assert rep.ok and rep.steps_checked == 4 and rep.leaves_checked == 6


def test_hand_built_certificate_report():
    cert = hand_built_tent_certificate()
    rep = scramble_report(cert)
    (claim,) = rep.separations
    assert claim.pair == ((1, "00"), (1, "11"))
    assert claim.bound == F(7, 8) - F(1, 8) - 2 * F(1, 8) > 0
    assert claim.observed >= claim.gap >= claim.bound
    (prox,) = rep.proximities
    assert prox.bound == F(1, 8) and prox.observed <= prox.bound


# ---------------------------------------------------------------------------
# built certificates


def test_stage_zero_certificate():
    cert = build_scramble(ScrambleConfig(T, 0))
    assert len(cert.stages) == 1 and cert.stages[0].steps == ()
    assert [k for k, _ in cert.stages[0].leaves] == [(1, "0"), (1, "1")]
    assert verify_certificate(cert).ok


def test_stage_one_shape():
    cert = build_scramble(ScrambleConfig(T, 1))
    st = cert.final
    assert sorted(k for k, _ in st.leaves) == [(1, w) for w in ("00", "01", "10", "11")]
    sep = st.steps[0]
    assert sep.kind == SEPARATION and sep.shift == 0
    Wa, Wb = window(F(1, 8), st.n, T.domain), window(F(7, 8), st.n, T.domain)
    leaves = st.leaf_map()
    for key, K in leaves.items():
        target = Wa if key[1][-1] == "0" else Wb
        assert target.contains(image_iter(T, K, sep.time))
    assert verify_certificate(cert).ok


def test_two_stage_invariants(tent2):
    rep = verify_certificate(tent2)
    assert rep.ok
    times = [s.time for s in tent2.steps()]
    assert times == sorted(set(times))
    for st in tent2.stages[1:]:
        assert all(K.width < F(1, 2 ** (2 * st.index + 1)) for _, K in st.leaves)
        for s in st.steps:
            if s.kind == DENSITY:
                assert s.time % math.factorial(st.index) == 0
    leaves = sorted((K for _, K in tent2.final.leaves), key=lambda K: K.lo)
    assert all(A.hi < B.lo for A, B in zip(leaves, leaves[1:]))


def test_two_stage_report(tent2):
    rep = scramble_report(tent2)
    a2, b2 = tent2.final.a, tent2.final.b
    assert rep.separations and rep.proximities
    for c in rep.separations:
        assert c.observed >= c.gap >= c.bound > 0
        if c.stage == 2 and len(c.windows) == 2 and c.windows[0] != c.windows[1]:
            w0, w1 = c.windows
            assert c.bound >= abs(b2 - a2) - w0.width - w1.width
    for p in rep.proximities:
        assert p.observed <= p.bound
    assert all(d > 0 for _, d in rep.deltas)


def test_identical_codes_give_no_claim(tent2):
    rep = scramble_report(tent2)
    assert all(c.pair[0] != c.pair[1] for c in rep.separations)


def test_omega_words():
    assert omega_words(2) == ["00", "11"]
    assert omega_words(3) == ["000", "001", "110", "111"]


def test_arithmetic_time_set():
    cert = build_scramble(ScrambleConfig(T, 1, q=3))
    assert all(s.time % 3 == 0 for s in cert.steps())
    assert verify_certificate(cert).ok


def test_tracking_periodic_point():
    cert = build_scramble(ScrambleConfig(T, 1, tracked_points=(F(2, 5),)))
    assert verify_certificate(cert).ok
    assert any(s.point == F(2, 5) for s in cert.steps())
    with pytest.raises(PreconditionError):
        # 1/1000 is preperiodic (its orbit drops to denominator 125) but never returns
        build_scramble(ScrambleConfig(T, 1, tracked_points=(F(1, 1000),)))


def test_mixing_evidence():
    assert mixing_evidence(T) == "markov-primitive"
    with pytest.raises(PreconditionError):
        mixing_evidence(load_map("remark1"))


def _tamper(W: Interval, dom: Interval) -> Interval:
    # a window disjoint from the recorded one
    if W.hi < dom.hi:
        return Interval(W.hi + (dom.hi - W.hi) / 2, dom.hi)
    return Interval(dom.lo, W.lo / 2)


def tampered_copies(cert):
    for si, st in enumerate(cert.stages):
        for ti, stp in enumerate(st.steps):
            for wi, (key, W) in enumerate(stp.targets):
                targets = list(stp.targets)
                targets[wi] = (key, _tamper(W, cert.f.domain))
                steps = list(st.steps)
                steps[ti] = replace(stp, targets=tuple(targets))
                stages = list(cert.stages)
                stages[si] = replace(st, steps=tuple(steps))
                yield (si, ti), replace(cert, stages=tuple(stages))


def test_every_single_tampered_window_fails():
    cert = build_scramble(ScrambleConfig(T, 1))
    n = 0
    for (si, ti), bad in tampered_copies(cert):
        with pytest.raises(ReplayFailure) as info:
            verify_certificate(bad)
        assert info.value.step[:2] == (si, ti)
        n += 1
    assert n == sum(len(s.targets) for s in cert.steps())


def test_tampered_leaf_fails():
    cert = hand_built_tent_certificate()
    st = cert.final
    leaves = list(st.leaves)
    key, K = leaves[0]
    leaves[0] = (key, Interval(K.lo, K.lo + F(1, 100)))
    with pytest.raises(ReplayFailure):
        verify_certificate(replace(cert, stages=(cert.stages[0], replace(st, leaves=tuple(leaves)))))


def test_invariant_family_on_remark4():
    cert = build_invariant_family(FH, 1)
    rep = verify_invariant_family(cert)
    assert rep.invariant and rep.base.ok
    assert rep.straddles and all(ok for _, ok in rep.straddles)
    assert rep.separation
    for t, bound, observed in rep.separation:
        assert t % 2 == 0 and observed >= bound > 0
    S = set(cert.S_ddot)
    assert {evaluate(FH, x) for x in S} <= S


def test_invariant_family_requires_cond3():
    with pytest.raises(PreconditionError):
        build_invariant_family(T, 1)
