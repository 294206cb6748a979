"""JSON certificate documents and their kind-dispatched verification.

Every document has ``schema``, ``version``, ``kind`` and ``map`` fields.
Rationals are always strings ``"num/den"`` so that files stay exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .chaos import (DoubleTurbulenceCertificate, NotFound, TurbulenceCertificate, classify_conditions,
                    find_double_turbulence, find_turbulence)
from .covering import return_times
from .errors import NotMarkovWithinHorizon, PLCertError, ReplayFailure
from .exact import Interval, PLMap, evaluate, fmt_q, image, q
from .markov import detect_markov
from .scramble import (InvariantFamilyCertificate, ScrambleCertificate, ScrambleStage, Step, verify_certificate,
                       verify_invariant_family)

SCHEMA = "plcert-certificate"
VERSION = 1


def enc_q(x: Fraction) -> str:
    return fmt_q(x)


def dec_q(s) -> Fraction:
    if not isinstance(s, str):
        raise ValueError(f"rational must be a string, got {s!r}")
    return q(s)


def enc_iv(I: Interval) -> list:
    return [enc_q(I.lo), enc_q(I.hi)]


def dec_iv(v) -> Interval:
    return Interval(dec_q(v[0]), dec_q(v[1]))


def enc_map(f: PLMap) -> dict:
    return {"name": f.name, "nodes": [[enc_q(x), enc_q(y)] for x, y in f.nodes], "bound": enc_iv(f.bound)}


def dec_map(d: dict) -> PLMap:
    return PLMap.from_nodes([(dec_q(x), dec_q(y)) for x, y in d["nodes"]], dec_iv(d["bound"]), d.get("name", ""))


def _key(k) -> list:
    return [k[0], k[1]]


def _dekey(v) -> tuple:
    return (int(v[0]), str(v[1]))


def _leaves(items) -> list:
    return [{"leaf": _key(k), "interval": enc_iv(I)} for k, I in items]


def _deleaves(v) -> tuple:
    return tuple((_dekey(e["leaf"]), dec_iv(e["interval"])) for e in v)


def _opt_iv(I):
    return None if I is None else enc_iv(I)


def _opt_deiv(v):
    return None if v is None else dec_iv(v)


def _opt_q(x):
    return None if x is None else enc_q(x)


def _opt_deq(v):
    return None if v is None else dec_q(v)


def header(kind: str, f: PLMap) -> dict:
    return {"schema": SCHEMA, "version": VERSION, "kind": kind, "map": enc_map(f)}


# ---------------------------------------------------------------------------
# scramble


def _enc_step(s: Step) -> dict:
    return {
        "kind": s.kind, "stage": s.stage, "time": s.time, "shift": s.shift,
        "targets": [{"leaf": _key(k), "window": enc_iv(W)} for k, W in s.targets],
        "label": [[a, b] for a, b in s.label],
        "point": _opt_q(s.point), "point_window": _opt_iv(s.point_window),
    }


def _dec_step(d: dict) -> Step:
    return Step(d["kind"], int(d["stage"]), int(d["time"]), int(d["shift"]),
                tuple((_dekey(t["leaf"]), dec_iv(t["window"])) for t in d["targets"]),
                tuple((a, b) for a, b in d.get("label", [])),
                _opt_deq(d.get("point")), _opt_deiv(d.get("point_window")))


def _enc_scramble_body(c: ScrambleCertificate) -> dict:
    return {
        "q": c.q,
        "divisibility": c.divisibility,
        "v_points": [enc_q(v) for v in c.v_points],
        "tracked": [[enc_q(x), enc_q(y)] for x, y in c.tracked],
        "codes": list(c.codes),
        "points": [{"leaf": _key(k), "x": enc_q(x)} for k, x in c.points],
        "stages": [{
            "index": st.index, "n": st.n, "a": _opt_q(st.a), "b": _opt_q(st.b),
            "fresh": _leaves(st.fresh), "fresh_open": _opt_iv(st.fresh_open),
            "density_open": _opt_iv(st.density_open), "leaves": _leaves(st.leaves),
            "steps": [_enc_step(s) for s in st.steps],
        } for st in c.stages],
    }


def _dec_scramble_body(f: PLMap, d: dict) -> ScrambleCertificate:
    stages = tuple(ScrambleStage(
        int(st["index"]), st["n"], _opt_deq(st["a"]), _opt_deq(st["b"]), _deleaves(st["fresh"]),
        _opt_deiv(st["fresh_open"]), _opt_deiv(st["density_open"]), _deleaves(st["leaves"]),
        tuple(_dec_step(s) for s in st["steps"])) for st in d["stages"])
    return ScrambleCertificate(
        f, stages, int(d["q"]), tuple(dec_q(v) for v in d["v_points"]),
        tuple((dec_q(x), dec_q(y)) for x, y in d["tracked"]), bool(d["divisibility"]), tuple(d["codes"]),
        tuple((_dekey(p["leaf"]), dec_q(p["x"])) for p in d["points"]))


def scramble_doc(c: ScrambleCertificate) -> dict:
    doc = header("scramble", c.f)
    doc["certificate"] = _enc_scramble_body(c)
    return doc


def invariant_doc(c: InvariantFamilyCertificate) -> dict:
    doc = header("invariant-family", c.f)
    doc["certificate"] = {
        "z": enc_q(c.z),
        "base_map": enc_map(c.base.f),
        "base": _enc_scramble_body(c.base),
        "anchors": [{"leaf": _key(k), "x": enc_q(x)} for k, x in c.anchors],
        "S_hat": [enc_q(x) for x in c.S_hat],
        "S_ddot": [enc_q(x) for x in c.S_ddot],
    }
    return doc


def scramble_from_doc(doc: dict) -> ScrambleCertificate:
    return _dec_scramble_body(dec_map(doc["map"]), doc["certificate"])


def invariant_from_doc(doc: dict) -> InvariantFamilyCertificate:
    c = doc["certificate"]
    base = _dec_scramble_body(dec_map(c["base_map"]), c["base"])
    return InvariantFamilyCertificate(
        dec_map(doc["map"]), dec_q(c["z"]), base,
        tuple((_dekey(a["leaf"]), dec_q(a["x"])) for a in c["anchors"]),
        tuple(dec_q(x) for x in c["S_hat"]), tuple(dec_q(x) for x in c["S_ddot"]))


# ---------------------------------------------------------------------------
# turbulence, spectra, covering


def _enc_turb(t: TurbulenceCertificate) -> dict:
    return {"J0": enc_iv(t.J0), "J1": enc_iv(t.J1), "images": [enc_iv(I) for I in t.images],
            "strategy": t.strategy, "triple": [enc_q(x) for x in t.triple]}


def _dec_turb(d: dict) -> TurbulenceCertificate:
    return TurbulenceCertificate(dec_iv(d["J0"]), dec_iv(d["J1"]), tuple(dec_iv(I) for I in d["images"]),
                                 strategy=d.get("strategy", ""), triple=tuple(dec_q(x) for x in d.get("triple", [])))


def turbulence_doc(f: PLMap, t: TurbulenceCertificate) -> dict:
    doc = header("turbulence", f)
    doc["certificate"] = _enc_turb(t)
    return doc


def double_turbulence_doc(f: PLMap, t: DoubleTurbulenceCertificate) -> dict:
    doc = header("double-turbulence", f)
    doc["certificate"] = {"hosts": [enc_iv(h) for h in t.hosts], "parts": [_enc_turb(p) for p in t.parts]}
    return doc


def no_turbulence_doc(f: PLMap, res: NotFound, double: bool = False) -> dict:
    """Negative search result; replay reruns the (deterministic) search."""
    doc = header("no-turbulence", f)
    doc["certificate"] = {"double": double, "exhaustive": res.exhaustive, "reason": res.reason}
    return doc


def spectrum_doc(f: PLMap, spectrum, orbits: dict) -> dict:
    """``orbits`` maps each present period to one witness PeriodicOrbit."""
    doc = header("spectrum", f)
    doc["certificate"] = {
        "max_checked": spectrum.max_checked,
        "present": sorted(spectrum.present),
        "counts": {str(k): v for k, v in sorted(spectrum.counts.items())},
        "coverage": list(spectrum.coverage),
        "segment_flags": sorted(spectrum.segment_flags),
        "witnesses": {str(p): [enc_q(x) for x in o.points] for p, o in sorted(orbits.items())},
    }
    return doc


def covering_doc(f: PLMap, res) -> dict:
    doc = header("covering", f)
    doc["certificate"] = {"K": enc_iv(res.K), "L": enc_iv(res.L), "horizon": res.horizon,
                          "first_N": res.first_N, "trajectory": [enc_iv(I) for I in res.trajectory]}
    return doc


def returns_doc(f: PLMap, sets) -> dict:
    """One or more return-time sets; their intersection is recomputed on replay."""
    doc = header("returns", f)
    doc["certificate"] = {"sets": [{"U": enc_iv(r.U), "V": enc_iv(r.V), "horizon": r.horizon,
                                    "times": list(r.times)} for r in sets]}
    return doc


def analysis_doc(f: PLMap, cls, P, graph) -> dict:
    """Trichotomy verdict plus Markov cuts and covering matrix (``P`` may be None)."""
    doc = header("analysis", f)
    c = {"classification": None, "markov": None}
    if cls is not None:
        c["classification"] = {"verdict": cls.verdict, "z": _opt_q(cls.z), "witness": _opt_q(cls.witness)}
    if P is not None:
        c["markov"] = {"cuts": [enc_q(x) for x in P.cuts], "matrix": [list(r) for r in P.matrix],
                       "expansive": P.expansive}
        if graph is not None:
            c["markov"]["graph"] = {"irreducible": graph.irreducible, "primitive": graph.primitive,
                                    "exponent": graph.primitivity_exponent, "period": graph.period}
    doc["certificate"] = c
    return doc


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class DocumentCheck:
    kind: str
    ok: bool
    message: str
    step: object = None


def _check_spectrum(f: PLMap, c: dict) -> str:
    for p, pts in c["witnesses"].items():
        p = int(p)
        xs = [dec_q(x) for x in pts]
        if len(xs) != p:
            raise ReplayFailure(f"witness for period {p} has {len(xs)} points", ("witness", p))
        for i, x in enumerate(xs):
            if evaluate(f, x) != xs[(i + 1) % p]:
                raise ReplayFailure(f"witness for period {p} is not an orbit at index {i}", ("witness", p, i))
        if len(set(xs)) != p:
            raise ReplayFailure(f"witness for period {p} repeats a point", ("witness", p))
    if sorted(int(p) for p in c["witnesses"]) != sorted(c["present"]):
        raise ReplayFailure("witness periods differ from the present set", ("present",))
    return f"{len(c['witnesses'])} periodic witnesses replayed"


def _check_covering(f: PLMap, c: dict) -> str:
    K, L = dec_iv(c["K"]), dec_iv(c["L"])
    cur = K
    for n, rec in enumerate(c["trajectory"], start=1):
        cur = image(f, cur)
        if cur != dec_iv(rec):
            raise ReplayFailure(f"trajectory differs at step {n}", ("trajectory", n))
    N = c["first_N"]
    if N is not None:
        for n in range(N, c["horizon"] + 1):
            if not dec_iv(c["trajectory"][n - 1]).contains(L):
                raise ReplayFailure(f"f^{n}(K) does not cover L", ("cover", n))
    return f"trajectory of {len(c['trajectory'])} images replayed"


def _check_returns(f: PLMap, c: dict) -> str:
    for i, r in enumerate(c["sets"]):
        got = return_times(f, dec_iv(r["U"]), dec_iv(r["V"]), int(r["horizon"]))
        if list(got.times) != list(r["times"]):
            raise ReplayFailure(f"return times of pair {i} differ", ("returns", i))
    return f"{len(c['sets'])} return-time sets replayed"


def _check_analysis(f: PLMap, c: dict) -> str:
    rec = c["classification"]
    if rec is not None:
        cls = classify_conditions(f)
        if (cls.verdict, _opt_q(cls.z), _opt_q(cls.witness)) != (rec["verdict"], rec["z"], rec["witness"]):
            raise ReplayFailure("classification differs", ("classification",))
        if not cls.verify(f):
            raise ReplayFailure("classification witness fails", ("classification",))
    rec = c["markov"]
    if rec is not None:
        try:
            P = detect_markov(f)
        except NotMarkovWithinHorizon:
            raise ReplayFailure("cut closure does not stabilize", ("markov",)) from None
        if [enc_q(x) for x in P.cuts] != rec["cuts"]:
            raise ReplayFailure("Markov cuts differ", ("markov", "cuts"))
        for i, row in enumerate(P.matrix):
            if list(row) != rec["matrix"][i]:
                raise ReplayFailure(f"covering matrix row {i} differs", ("markov", "row", i))
    return "classification and Markov data replayed"


def verify_document(doc: dict) -> DocumentCheck:
    """Replay a certificate document; failures come back as ``ok=False`` with the step."""
    kind = doc.get("kind", "?")
    try:
        if doc.get("schema") != SCHEMA or doc.get("version") != VERSION:
            raise ReplayFailure("unsupported schema or version", ("header",))
        f = dec_map(doc["map"])
        c = doc["certificate"]
        if kind == "scramble":
            rep = verify_certificate(scramble_from_doc(doc))
            msg = f"{rep.steps_checked} steps and {rep.leaves_checked} leaves replayed"
        elif kind == "invariant-family":
            rep = verify_invariant_family(invariant_from_doc(doc))
            msg = f"invariant family of {len(c['S_ddot'])} points replayed"
        elif kind == "turbulence":
            if not _dec_turb(c).verify(f):
                raise ReplayFailure("turbulence containments fail", ("turbulence",))
            msg = "turbulence containments replayed"
        elif kind == "double-turbulence":
            t = DoubleTurbulenceCertificate(tuple(dec_iv(h) for h in c["hosts"]), tuple(_dec_turb(p) for p in c["parts"]))
            if not t.verify(f):
                raise ReplayFailure("double turbulence containments fail", ("double-turbulence",))
            msg = "double turbulence containments replayed"
        elif kind == "no-turbulence":
            res = (find_double_turbulence if c["double"] else find_turbulence)(f)
            if not isinstance(res, NotFound) or res.exhaustive != c["exhaustive"]:
                raise ReplayFailure("search result differs from the recorded negative", ("search",))
            msg = f"negative search replayed (exhaustive={res.exhaustive})"
        elif kind == "spectrum":
            msg = _check_spectrum(f, c)
        elif kind == "covering":
            msg = _check_covering(f, c)
        elif kind == "returns":
            msg = _check_returns(f, c)
        elif kind == "analysis":
            msg = _check_analysis(f, c)
        else:
            raise ReplayFailure(f"unknown certificate kind {kind!r}", ("kind",))
    except ReplayFailure as exc:
        return DocumentCheck(kind, False, str(exc), exc.step)
    except (KeyError, IndexError, TypeError, ValueError, PLCertError) as exc:
        return DocumentCheck(kind, False, f"malformed certificate: {exc}", ("format",))
    return DocumentCheck(kind, True, msg)


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def loads(text: str) -> dict:
    return json.loads(text)
