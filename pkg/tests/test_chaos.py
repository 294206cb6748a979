from fractions import Fraction as F

import pytest
from hypothesis import given, settings

from oracles import brute_turbulent_pair, grid, grid_conditions, image_bounds
from plcert.chaos import (COND1, COND2, COND3, NONE, DoubleTurbulenceCertificate, NotFound, TurbulenceCertificate,
                          check_lemma5, classify_conditions, find_double_turbulence, find_turbulence, square)
from plcert.dsl import corpus_names, load_map
from plcert.errors import HypothesisFailed, NoInteriorFixedPoint
from plcert.exact import Interval, PLMap, fixed_points, image, iterate
from strategies import selfmaps

T = load_map("tent")
FH = load_map("remark4")

# Grid oracle run once on the tent map (z = 2/3): cond1 has a witness, so the
# verdict is frozen here and the exact solver must keep reproducing it.
TENT_ORACLE = {"cond1": True, "cond2": True, "cond3": False}
TENT_VERDICT = (COND1, F(2, 3))


def I(a, b):
    return Interval(F(a), F(b))


def test_tent_verdict_frozen_from_oracle():
    assert grid_conditions(T.nodes, F(2, 3)) == TENT_ORACLE
    cls = classify_conditions(T)
    assert (cls.verdict, cls.z) == TENT_VERDICT
    assert cls.verify(T)


def test_remark4_cond3():
    cls = classify_conditions(FH)
    assert cls.verdict == COND3 and cls.z == F(1, 2) and cls.verify(FH)
    assert grid_conditions(FH.nodes, F(1, 2)) == {"cond1": False, "cond2": False, "cond3": True}
    assert image(FH, I(0, F(1, 2))).lo >= F(1, 2)
    assert image(FH, I(F(1, 2), 1)).hi <= F(1, 2)


@pytest.mark.parametrize("name", ["remark2:2", "remark2:3", "remark2:4", "remark1"])
def test_cond2_maps(name):
    f = load_map(name)
    cls = classify_conditions(f)
    assert cls.verdict == COND2 and cls.verify(f)
    g = grid_conditions(f.nodes, cls.z)
    assert g["cond2"] and not g["cond1"]


def test_fixed_segment_gives_none():
    f = PLMap.from_nodes([(0, F(1, 2)), (F(1, 4), F(1, 4)), (F(3, 4), F(3, 4)), (1, F(1, 2))], Interval(F(0), F(1)))
    assert classify_conditions(f).verdict == NONE


def test_no_interior_fixed_point():
    f = PLMap.from_nodes([(0, 0), (1, F(1, 2))], Interval(F(0), F(1)))
    with pytest.raises(NoInteriorFixedPoint):
        classify_conditions(f)


def test_tent_turbulence():
    t = find_turbulence(T)
    assert isinstance(t, TurbulenceCertificate)
    assert (t.J0, t.J1) == (I(0, F(1, 2)), I(F(1, 2), 1))
    assert t.verify(T)


@pytest.mark.parametrize("name", ["remark2:2", "remark2:3", "remark2:4"])
def test_remark2_not_turbulent(name):
    f = load_map(name)
    res = find_turbulence(f)
    assert isinstance(res, NotFound) and res.exhaustive and not res
    dom = f.domain
    assert brute_turbulent_pair(f.nodes, grid(dom.lo, dom.hi, 4 * int(dom.width))) is None
    d = find_double_turbulence(square(f))
    assert isinstance(d, DoubleTurbulenceCertificate) and d.verify(square(f))


def test_remark4_turbulence():
    assert isinstance(find_turbulence(FH), NotFound)
    g = iterate(FH, 2)
    assert isinstance(find_turbulence(g), TurbulenceCertificate)
    d = find_double_turbulence(g)
    assert isinstance(d, DoubleTurbulenceCertificate) and d.verify(g)
    (h0, h1) = d.hosts
    assert h0.hi <= F(1, 2) <= h1.lo
    assert [(p.J0, p.J1) for p in d.parts] == [(I(0, F(1, 4)), I(F(1, 4), F(1, 2))),
                                              (I(F(1, 2), F(3, 4)), I(F(3, 4), 1))]


def test_tent_square_doubly_turbulent():
    g = iterate(T, 2)
    d = find_double_turbulence(g)
    assert isinstance(d, DoubleTurbulenceCertificate) and d.verify(g)
    assert d.hosts[0].hi <= d.hosts[1].lo


@pytest.mark.parametrize("name", corpus_names())
def test_theorem1_chain(name):
    f = load_map(name)
    cls = classify_conditions(f)
    if cls.verdict == COND1:
        assert isinstance(find_turbulence(f), TurbulenceCertificate)
    if cls.verdict in (COND2, COND3):
        g = square(f)
        assert find_double_turbulence(g).verify(g)


def test_lemma5():
    rep = check_lemma5(FH, I(0, F(1, 2)), 2)
    assert rep.passed and rep.f2_K == I(0, F(1, 2))
    with pytest.raises(HypothesisFailed):
        check_lemma5(T, I(0, F(1, 2)), 1)
    ident = PLMap.identity(I(0, 1))
    assert check_lemma5(ident, I(F(1, 4), F(1, 2)), 1).passed


@settings(max_examples=300)
@given(selfmaps(max_pieces=4))
def test_classification_sound_against_grid(f):
    try:
        cls = classify_conditions(f)
    except NoInteriorFixedPoint:
        return
    assert cls.verify(f)
    interior = cls.fixed_points_interior
    if cls.verdict in (COND2, COND3) or (cls.verdict == NONE and not cls.notes[0].startswith("fixed")):
        for z in interior:
            assert not grid_conditions(f.nodes, z, 240)["cond1"]
    if cls.verdict in (COND3,) or (cls.verdict == NONE and not cls.notes[0].startswith("fixed")):
        for z in interior:
            assert not grid_conditions(f.nodes, z, 240)["cond2"]
    if cls.verdict == COND3:
        assert grid_conditions(f.nodes, cls.z, 240)["cond3"]


@settings(max_examples=300)
@given(selfmaps(max_pieces=4))
def test_turbulence_sound_against_brute_force(f):
    res = find_turbulence(f)
    if isinstance(res, TurbulenceCertificate):
        for J in (res.J0, res.J1):
            lo, hi = image_bounds(f.nodes, J.lo, J.hi)
            assert lo <= min(res.J0.lo, res.J1.lo) and hi >= max(res.J0.hi, res.J1.hi)
        assert res.J0.intersection(res.J1) is None or res.J0.intersection(res.J1).degenerate
    elif res.exhaustive:
        assert not any(s.kind == "segment" for s in fixed_points(f))
        assert brute_turbulent_pair(f.nodes, grid(F(0), F(1), 24)) is None
