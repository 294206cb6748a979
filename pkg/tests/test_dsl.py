import random
from fractions import Fraction as F
from importlib import resources

import pytest

from plcert.dsl import builtin, corpus_names, load_map, parse_map, serialize, source_from_map
from plcert.errors import ParseError, PLCertError, UnknownBuiltin, ValidationError

TENT_SRC = """\
# tent map
map tent
domain 0 1
selfmap
node 0 0
node 1/2 1
node 1 0
"""


def corpus_text(name):
    return resources.files("plcert.corpus").joinpath(f"{name}.plmap").read_text(encoding="utf-8")


def test_tent_source():
    src = parse_map(TENT_SRC)
    assert src.name == "tent" and src.selfmap and len(src.nodes) == 3
    assert src.to_map().is_selfmap()


def test_remark1_source():
    src = builtin("remark1")
    assert src.nodes == tuple((F(x), F(y)) for x, y in [(1, 4), (6, 9), (7, 2), (8, 3), (9, 1)])


def test_zero_denominator():
    with pytest.raises(ParseError) as info:
        parse_map("map m\ndomain 0 1\nnode 1/0 2\n")
    assert info.value.line == 3 and info.value.column == 6


@pytest.mark.parametrize("text,err,line", [
    ("map m\ndomain 0 1\nnode 0 0\nnode 0 1\nnode 1 0\n", ValidationError, 4),
    ("map m\ndomain 0 1\nnode 0 0\nnode 1 0\nnode 1/2 1\n", ValidationError, 5),
    ("map m\ndomain 0 1\nselfmap\nnode 0 0\nnode 1 2\n", ValidationError, 5),
    ("map m\ndomain 0 1\nnode 0 0\nnode 1 0 3\n", ParseError, 4),
    ("map m\ndomian 0 1\n", ParseError, 2),
    ("domain 0 1\nnode 0 0\nnode 1 1\n", ParseError, 0),
    ("map m\ndomain 1 0\n", ValidationError, 2),
    ("map m\ndomain 0 1\nnode 0 0\nnode 1/2 1\n", ValidationError, 3),
    ("map m\ndomain 0 1\nnode 0 1.5\nnode 1 0\n", ParseError, 3),
])
def test_structured_errors(text, err, line):
    with pytest.raises(err) as info:
        parse_map(text)
    assert info.value.line == line


@pytest.mark.parametrize("name,nodes", [
    ("remark2:2", [(1, 3), (2, 5), (3, 4), (4, 2), (5, 1)]),
    ("fn(2)", [(1, 3), (2, 5), (3, 4), (4, 2), (5, 1)]),
    ("remark4", [(0, F(1, 2)), (F(1, 4), 1), (F(1, 2), F(1, 2)), (1, 0)]),
    ("example7", [(0, 0), (1, 2), (2, 0), (3, 2)]),
    ("tent", [(0, 0), (F(1, 2), 1), (1, 0)]),
])
def test_builtins(name, nodes):
    src = builtin(name)
    assert src.nodes == tuple((F(x), F(y)) for x, y in nodes)
    assert src.selfmap


@pytest.mark.parametrize("n", range(2, 8))
def test_remark2_formula(n):
    f = load_map(f"remark2:{n}")
    ys = {int(x): y for x, y in f.nodes}
    assert ys[1] == n + 1
    assert all(ys[i] == 2 * n + 3 - i for i in range(2, n + 2))
    assert all(ys[j] == 2 * n + 2 - j for j in range(n + 2, 2 * n + 2))
    assert f.is_selfmap()


def test_remark2_corpus_files_match_formula():
    for n in (2, 3, 4):
        assert builtin(f"remark2_{n}").nodes == builtin(f"remark2:{n}").nodes


def test_unknown_builtin():
    with pytest.raises(UnknownBuiltin):
        builtin("logistic")
    with pytest.raises(UnknownBuiltin):
        builtin("remark2:1")


@pytest.mark.parametrize("name", corpus_names())
def test_corpus_round_trip_byte_stable(name):
    text = corpus_text(name)
    src = parse_map(text)
    assert serialize(src) == text
    assert parse_map(serialize(src)) == src
    assert src.to_map().is_selfmap()


def test_source_from_map_round_trip():
    f = load_map("remark4")
    src = source_from_map(f)
    assert parse_map(serialize(src)).to_map() == f


def test_load_from_path(tmp_path):
    p = tmp_path / "m.plmap"
    p.write_text(TENT_SRC, encoding="utf-8")
    assert load_map(str(p)) == load_map("tent")


@pytest.mark.parametrize("name", corpus_names())
def test_swapped_nodes_rejected(name):
    lines = corpus_text(name).splitlines()
    idx = [i for i, ln in enumerate(lines) if ln.startswith("node")]
    for a, b in zip(idx, idx[1:]):
        swapped = list(lines)
        swapped[a], swapped[b] = swapped[b], swapped[a]
        with pytest.raises(ValidationError):
            parse_map("\n".join(swapped))


JUNK = ["1/0", "-", "x", "", "3/-2", "1e3", "0.5", "node", "map", "domain", "selfmap", "#", "//", "1//2",
        "99999999999999999999/3", "-7", "1/2/3", "\t", "é", "meta", "a b", "0", "1", "2", "7/2"]


def mutate(text: str, rng: random.Random) -> str:
    lines = text.splitlines()
    i = rng.randrange(len(lines))
    toks = lines[i].split(" ")
    kind = rng.randrange(6)
    if kind == 0:
        toks[rng.randrange(len(toks))] = rng.choice(JUNK)
    elif kind == 1:
        del toks[rng.randrange(len(toks))]
    elif kind == 2:
        toks.insert(rng.randrange(len(toks) + 1), rng.choice(JUNK))
    elif kind == 3:
        j = rng.randrange(len(lines))
        lines[i], lines[j] = lines[j], lines[i]
        return "\n".join(lines) + "\n"
    elif kind == 4:
        lines.insert(i, lines[i])
        return "\n".join(lines) + "\n"
    else:
        s = lines[i]
        k = rng.randrange(len(s) + 1)
        lines[i] = s[:k] + rng.choice("0123456789/-# x\x00") + s[k:]
        return "\n".join(lines) + "\n"
    lines[i] = " ".join(toks)
    return "\n".join(lines) + "\n"


def test_mutation_fuzz_structured_errors_only():
    rng = random.Random(20240601)
    names = corpus_names()
    outcomes = {"ok": 0, "error": 0}
    for _ in range(1000):
        text = mutate(corpus_text(rng.choice(names)), rng)
        try:
            src = parse_map(text)
            src.to_map()
            outcomes["ok"] += 1
        except PLCertError as exc:
            assert isinstance(exc, (ParseError, ValidationError))
            outcomes["error"] += 1
    assert outcomes["error"] > 300 and sum(outcomes.values()) == 1000
