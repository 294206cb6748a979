"""Command-line front end: ``plcert <subcommand> <map> ...``.

Exit codes: 0 success, 1 analysis-negative, 2 usage error, 3 budget or timeout.
Structured output (``--format json``) is a certificate document accepted by
``plcert verify``; it carries no timestamp unless ``--timestamp`` is given.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction

from . import __version__
from .chaos import NotFound, classify_conditions, find_double_turbulence, find_turbulence, square
from .covering import COVER_HORIZON, RETURN_HORIZON, eventually_covers, furstenberg_intersection_check, return_times
from .dsl import BUILTIN_NAMES, corpus_names, load_map
from .errors import (BudgetExceeded, ClassificationUnavailable, CoverageTimeout, DomainError, NoInteriorFixedPoint,
                     NotMarkovWithinHorizon, ParseError, PLCertError, UnknownBuiltin, ValidationError)
from .exact import ENV_MAX_BITS, ENV_MAX_PIECES, Interval, PieceBudget, PLMap, q, show_q
from .markov import detect_markov, graph_certificate
from .orbits import period_spectrum, periodic_points, sharkovsky_key, verify_theorem1
from .scramble import (DEFAULT_HORIZON, ScrambleConfig, build_invariant_family, build_scramble, scramble_report,
                       verify_certificate, verify_invariant_family)
from . import serialize as ser

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


@dataclass
class RunConfig:
    subcommand: str
    source: str | None
    budget: PieceBudget
    fmt: str = "text"
    output: str | None = None
    timestamp: bool = False
    options: dict = field(default_factory=dict)


@dataclass
class Outcome:
    code: int
    lines: list
    doc: dict | None = None


def approx(x: Fraction) -> str:
    x = q(x)
    if x.denominator == 1:
        return show_q(x)
    return f"{show_q(x)} ≈ {float(x):.6g}"


def _iv(pair) -> Interval:
    return Interval(q(pair[0]), q(pair[1]))


def _rational(text: str) -> Fraction:
    try:
        return q(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _head(f: PLMap) -> str:
    return f"map {f.name or '?'} on {f.domain}, {len(f.nodes) - 1} pieces"


# ---------------------------------------------------------------------------
# subcommands


def cmd_analyze(f: PLMap, cfg: RunConfig) -> Outcome:
    lines = [_head(f)]
    cls = None
    try:
        cls = classify_conditions(f)
        lines.append(f"trichotomy: {cls.verdict}")
        if cls.z is not None:
            lines.append(f"  interior fixed point z = {approx(cls.z)}")
        if cls.witness is not None:
            lines.append(f"  witness = {approx(cls.witness)}")
        lines.extend(f"  note: {n}" for n in cls.notes)
    except NoInteriorFixedPoint as exc:
        lines.append(f"trichotomy: unavailable ({exc})")
    P = graph = None
    try:
        P = detect_markov(f)
        graph = graph_certificate(P)
        lines.append(f"Markov partition: {P.size} cells, expansive={P.expansive}")
        lines.append("  cuts: " + " ".join(show_q(c) for c in P.cuts))
        for row in P.matrix:
            lines.append("  " + "".join(str(v) for v in row))
        exp = graph.primitivity_exponent
        lines.append(f"  irreducible={graph.irreducible} primitive={graph.primitive}"
                     + (f" exponent={exp}" if exp is not None else "")
                     + (f" period={graph.period}" if graph.period is not None else ""))
        lines.append(f"  spectral radius ≈ {graph.spectral_radius:.6g}")
    except (NotMarkovWithinHorizon, PLCertError) as exc:
        lines.append(f"Markov partition: none ({exc})")
    return Outcome(EXIT_OK, lines, ser.analysis_doc(f, cls, P, graph))


def _forcing_order(M: int) -> list[int]:
    # weakest period first: each listed period is forced by everything after it
    return sorted(range(1, M + 1), key=sharkovsky_key, reverse=True)


def cmd_periods(f: PLMap, cfg: RunConfig) -> Outcome:
    M = cfg.options["max"]
    spec = period_spectrum(f, M, cfg.budget)
    parts = []
    for m in _forcing_order(M):
        if m in spec.present:
            k = spec.orbit_count(m)
            parts.append(f"{m} present ({k} orbit{'s' if k != 1 else ''})")
        elif not spec.coverage[m - 1]:
            parts.append(f"{m} unknown (budget)")
        else:
            parts.append(f"{m} absent")
    lines = [_head(f), f"periods up to {M}: " + ", ".join(parts)]
    if spec.segment_flags:
        lines.append("  periodic segments with midpoint periods " + ", ".join(map(str, sorted(spec.segment_flags))))
    code = EXIT_OK if spec.complete else EXIT_BUDGET
    witnesses = {}
    try:
        rep = verify_theorem1(f, M, cfg.budget)
        witnesses = rep.witnesses
        lines.append(f"trichotomy {rep.verdict}: period claims {'hold' if rep.passed else 'FAIL'}")
        lines.extend(f"  {n}" for n in rep.notes)
        if rep.missing:
            lines.append("  missing: " + ", ".join(map(str, rep.missing)))
        if not rep.passed and code == EXIT_OK:
            code = EXIT_NEGATIVE
    except (ClassificationUnavailable, NoInteriorFixedPoint) as exc:
        lines.append(f"period claims not checked: {exc}")
        for p in sorted(spec.present):
            orbs = periodic_points(f, p, cfg.budget).of_period(p)
            witnesses[p] = orbs[0]
    dump = cfg.options.get("dump_orbit")
    if dump is not None:
        lines.append("period\tindex\tx\tf(x)")
        for p, orb in sorted(witnesses.items()):
            if dump and p != dump:
                continue
            for i, (x, y) in enumerate(orb.witness):
                lines.append(f"{p}\t{i}\t{show_q(x)}\t{show_q(y)}")
    return Outcome(code, lines, ser.spectrum_doc(f, spec, witnesses))


def cmd_turbulence(f: PLMap, cfg: RunConfig) -> Outcome:
    if cfg.options["square"]:
        g = square(f)
        res = find_double_turbulence(g)
        lines = [_head(f), "double turbulence of f^2:"]
        if isinstance(res, NotFound):
            lines.append(f"  not found (exhaustive={res.exhaustive}): {res.reason}")
            return Outcome(EXIT_NEGATIVE, lines, ser.no_turbulence_doc(g, res, double=True))
        for h, p in zip(res.hosts, res.parts):
            lines.append(f"  host {h}: J0 = {p.J0}, J1 = {p.J1}")
        return Outcome(EXIT_OK, lines, ser.double_turbulence_doc(g, res))
    res = find_turbulence(f)
    lines = [_head(f)]
    if isinstance(res, NotFound):
        lines.append(f"turbulence: not found (exhaustive={res.exhaustive}): {res.reason}")
        return Outcome(EXIT_NEGATIVE, lines, ser.no_turbulence_doc(f, res))
    lines.append(f"turbulence: J0 = {res.J0}, J1 = {res.J1} ({res.strategy})")
    lines.append(f"  f(J0) = {res.images[0]}, f(J1) = {res.images[1]}")
    return Outcome(EXIT_OK, lines, ser.turbulence_doc(f, res))


def cmd_cover(f: PLMap, cfg: RunConfig) -> Outcome:
    K, L = _iv(cfg.options["K"]), _iv(cfg.options["L"])
    res = eventually_covers(f, K, L, cfg.options["horizon"])
    lines = [_head(f)]
    if res.first_N is None:
        lines.append(f"f^n({K}) does not cover {L} for all large n within horizon {res.horizon}")
        code = EXIT_NEGATIVE
    else:
        lines.append(f"f^n({K}) covers {L} for {res.first_N} <= n <= {res.horizon}")
        code = EXIT_OK
    for n, img in enumerate(res.trajectory[:8], start=1):
        lines.append(f"  f^{n}(K) = {img}")
    return Outcome(code, lines, ser.covering_doc(f, res))


def _times(ts, limit: int = 24) -> str:
    if not ts:
        return "(none)"
    s = ", ".join(map(str, ts[:limit]))
    return s + (", ..." if len(ts) > limit else "")


def cmd_returns(f: PLMap, cfg: RunConfig) -> Outcome:
    H = cfg.options["horizon"]
    U, V = _iv(cfg.options["U"]), _iv(cfg.options["V"])
    pairs = [(U, V)] + [(_iv(p[:2]), _iv(p[2:])) for p in cfg.options.get("intersect") or ()]
    lines = [_head(f)]
    sets = [return_times(f, A, B, H) for A, B in pairs]
    for r in sets:
        tail = f"cofinite from {r.cofinite_from}" if r.cofinite else "not cofinite within horizon"
        lines.append(f"N({r.U}, {r.V}) up to {H}: {len(r.times)} times, longest run {r.longest_run}, {tail}")
        lines.append(f"  {_times(r.times)}")
    if len(pairs) > 1:
        rep = furstenberg_intersection_check(f, pairs, H)
        lines.append(f"intersection: {len(rep.times)} times, longest run {rep.longest_run}")
        lines.append(f"  {_times(rep.times)}")
    return Outcome(EXIT_OK, lines, ser.returns_doc(f, sets))


def cmd_scramble(f: PLMap, cfg: RunConfig) -> Outcome:
    L = cfg.options["stages"]
    lines = [_head(f)]
    if cfg.options["invariant_via_square"]:
        cert = build_invariant_family(f, L, cfg.options["horizon"])
        rep = verify_invariant_family(cert)
        ok = rep.invariant and all(s for _, s in rep.straddles) and rep.base.ok
        lines.append(f"invariant family via f^2 on [{show_q(f.domain.lo)}, {show_q(cert.z)}], {L} stages")
        lines.append(f"  |S_hat| = {len(cert.S_hat)}, |S_ddot| = {len(cert.S_ddot)}, f(S_ddot) inside S_ddot: {rep.invariant}")
        lines.append(f"  straddles checked at {len(rep.straddles)} odd times, all hold: {all(s for _, s in rep.straddles)}")
        for t, bound, obs in rep.separation:
            lines.append(f"  separation at f-time {t}: bound {approx(bound)}, observed {approx(obs)}")
        return Outcome(EXIT_OK if ok else EXIT_NEGATIVE, lines, ser.invariant_doc(cert))
    tracked = tuple(cfg.options.get("track") or ())
    cert = build_scramble(ScrambleConfig(f, L, tracked_points=tracked, horizon=cfg.options["horizon"]))
    rep = verify_certificate(cert)
    lines.append(f"scramble certificate: {L} stages, {len(cert.final.leaves)} leaves, {rep.steps_checked} steps, "
                 f"replay {'ok' if rep.ok else 'FAILED'}")
    for st in cert.stages:
        kinds = sorted({s.kind for s in st.steps})
        lines.append(f"  stage {st.index}: n = {st.n}, {len(st.leaves)} leaves, {len(st.steps)} steps"
                     + (f" ({', '.join(kinds)})" if kinds else ""))
    if cert.points:
        sr = scramble_report(cert)
        if sr.separations:
            lines.append(f"  {len(sr.separations)} separation claims, least bound {approx(sr.min_separation_bound)}")
        if sr.proximities:
            lines.append(f"  {len(sr.proximities)} proximity claims")
    return Outcome(EXIT_OK if rep.ok else EXIT_NEGATIVE, lines, ser.scramble_doc(cert))


def cmd_verify(path: str, cfg: RunConfig) -> Outcome:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = ser.loads(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        chk = ser.DocumentCheck("?", False, f"not JSON: {exc}", ("format",))
        return Outcome(EXIT_NEGATIVE, [f"FAILED: {chk.message}"], _check_doc(chk))
    chk = ser.verify_document(doc)
    if chk.ok:
        return Outcome(EXIT_OK, [f"ok: {chk.kind}: {chk.message}"], _check_doc(chk))
    return Outcome(EXIT_NEGATIVE, [f"FAILED: {chk.kind} at step {chk.step}: {chk.message}"], _check_doc(chk))


def _check_doc(chk) -> dict:
    step = list(chk.step) if isinstance(chk.step, tuple) else chk.step
    return {"kind": "verification", "certificate_kind": chk.kind, "ok": chk.ok, "message": chk.message, "step": step}


def cmd_corpus(cfg: RunConfig) -> Outcome:
    names = corpus_names()
    lines = list(names) + ["remark2:<n>  (n >= 2, generated)"]
    return Outcome(EXIT_OK, lines, {"kind": "corpus", "maps": names, "families": ["remark2:<n>"]})


# ---------------------------------------------------------------------------
# argv


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    env = PieceBudget.from_env()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--output", "-o", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--timestamp", action="store_true", help="stamp structured output with the UTC time")
    common.add_argument("--max-pieces", type=_positive, default=env.max_pieces,
                        help=f"piece budget (default from {ENV_MAX_PIECES})")
    common.add_argument("--max-bits", type=_positive, default=env.max_bits,
                        help=f"coefficient bit budget (default from {ENV_MAX_BITS})")

    p = _Parser(prog="plcert", description="Exact certificates for piecewise-linear interval maps.")
    p.add_argument("--version", action="version", version=f"plcert {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    src_help = f"builtin name ({', '.join(BUILTIN_NAMES)}) or path to a .plmap file"

    s = sub.add_parser("analyze", parents=[common], help="trichotomy, Markov partition and graph certificate")
    s.add_argument("map", help=src_help)

    s = sub.add_parser("periods", parents=[common], help="period spectrum and period-claim check")
    s.add_argument("map", help=src_help)
    s.add_argument("--max", type=_positive, required=True, metavar="M")
    s.add_argument("--dump-orbit", type=int, nargs="?", const=0, metavar="P",
                   help="emit witness orbits as a table (all periods, or only P)")

    s = sub.add_parser("turbulence", parents=[common], help="turbulence of f, or double turbulence of f^2")
    s.add_argument("map", help=src_help)
    s.add_argument("--square", action="store_true")

    s = sub.add_parser("cover", parents=[common], help="eventual covering f^n(K) ⊇ L")
    s.add_argument("map", help=src_help)
    s.add_argument("--K", nargs=2, type=_rational, required=True, metavar=("LO", "HI"))
    s.add_argument("--L", nargs=2, type=_rational, required=True, metavar=("LO", "HI"))
    s.add_argument("--horizon", type=_positive, default=COVER_HORIZON)

    s = sub.add_parser("returns", parents=[common], help="return-time sets N(U, V)")
    s.add_argument("map", help=src_help)
    s.add_argument("--U", nargs=2, type=_rational, required=True, metavar=("LO", "HI"))
    s.add_argument("--V", nargs=2, type=_rational, required=True, metavar=("LO", "HI"))
    s.add_argument("--horizon", type=_positive, default=RETURN_HORIZON)
    s.add_argument("--intersect", nargs=4, type=_rational, action="append", metavar=("ULO", "UHI", "VLO", "VHI"),
                   help="another (U, V) pair whose return times are intersected with the first")

    s = sub.add_parser("scramble", parents=[common], help="build and replay a scrambled-set certificate")
    s.add_argument("map", help=src_help)
    s.add_argument("--stages", type=int, default=1, metavar="L")
    s.add_argument("--track", type=_rational, action="append", metavar="X", help="periodic point to track")
    s.add_argument("--horizon", type=_positive, default=DEFAULT_HORIZON)
    s.add_argument("--invariant-via-square", action="store_true",
                   help="scramble f^2 left of z and close under f (condition-(3) maps)")

    s = sub.add_parser("verify", parents=[common], help="replay a certificate file exactly")
    s.add_argument("certificate")

    s = sub.add_parser("corpus", parents=[common], help="list builtin maps")
    s.add_argument("action", choices=("list",))
    return p


def _config(ns) -> RunConfig:
    skip = {"subcommand", "map", "certificate", "format", "output", "timestamp", "max_pieces", "max_bits", "action"}
    source = getattr(ns, "map", None) or getattr(ns, "certificate", None)
    opts = {k: v for k, v in vars(ns).items() if k not in skip}
    return RunConfig(ns.subcommand, source, PieceBudget(ns.max_pieces, ns.max_bits), ns.format, ns.output,
                     ns.timestamp, opts)


_COMMANDS = {"analyze": cmd_analyze, "periods": cmd_periods, "turbulence": cmd_turbulence, "cover": cmd_cover,
             "returns": cmd_returns, "scramble": cmd_scramble}


def dispatch(cfg: RunConfig) -> Outcome:
    if cfg.subcommand == "corpus":
        return cmd_corpus(cfg)
    if cfg.subcommand == "verify":
        return cmd_verify(cfg.source, cfg)
    f = load_map(cfg.source)
    return _COMMANDS[cfg.subcommand](f, cfg)


def _render(out: Outcome, cfg: RunConfig | None) -> str:
    if cfg is not None and cfg.fmt == "json":
        doc = dict(out.doc) if out.doc is not None else {}
        doc["exit_code"] = out.code
        if cfg.timestamp:
            doc["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return ser.dumps(doc)
    return "\n".join(out.lines) + "\n"


def _diagnostic(code: int, exc: Exception, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}, sort_keys=True)
    return f"error: {type(exc).__name__}: {exc}"


def _sniff_format(argv) -> str:
    # diagnostics for argv that fails to parse still honour --format
    for i, a in enumerate(argv):
        if a == "--format=json" or (a == "--format" and argv[i + 1:i + 2] == ["json"]):
            return "json"
    return "text"


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    fmt = _sniff_format(argv or [])
    cfg = None
    try:
        ns = build_parser().parse_args(argv)
        cfg = _config(ns)
        fmt = cfg.fmt
        out = dispatch(cfg)
    except (UsageError, ParseError, ValidationError, UnknownBuiltin, DomainError, ValueError) as exc:
        print(_diagnostic(EXIT_USAGE, exc, fmt), file=stderr)
        return EXIT_USAGE
    except (BudgetExceeded, CoverageTimeout) as exc:
        print(_diagnostic(EXIT_BUDGET, exc, fmt), file=stderr)
        return EXIT_BUDGET
    except PLCertError as exc:
        print(_diagnostic(EXIT_NEGATIVE, exc, fmt), file=stderr)
        return EXIT_NEGATIVE
    text = _render(out, cfg)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return out.code


def main(argv=None) -> int:
    try:
        return run(argv if argv is not None else sys.argv[1:])
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
