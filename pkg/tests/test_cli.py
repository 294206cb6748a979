import io
import json

import pytest

from plcert.cli import EXIT_BUDGET, EXIT_NEGATIVE, EXIT_OK, EXIT_USAGE, run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_periods_remark2():
    code, out, _ = call("periods", "remark2:2", "--max", "5")
    assert code == EXIT_OK
    assert "5 present (1 orbit), 3 absent" in out


def test_turbulence_tent():
    code, out, _ = call("turbulence", "tent")
    assert code == EXIT_OK and "J0 = [0, 1/2], J1 = [1/2, 1]" in out


def test_turbulence_negative_exit():
    code, out, _ = call("turbulence", "remark2:2")
    assert code == EXIT_NEGATIVE and "exhaustive=True" in out


def test_turbulence_square():
    code, out, _ = call("turbulence", "remark4", "--square")
    assert code == EXIT_OK and out.count("host") == 2


def test_analyze_text_has_approximations():
    code, out, _ = call("analyze", "tent")
    assert code == EXIT_OK and "2/3 ≈ 0.666667" in out and "primitive=True exponent=1" in out


def test_cover_and_returns():
    code, out, _ = call("cover", "tent", "--K", "1/4", "1/2", "--L", "0", "1", "--horizon", "10")
    assert code == EXIT_OK and "for 2 <= n <= 10" in out
    code, _, _ = call("cover", "remark1", "--K", "1", "3", "--L", "1", "9", "--horizon", "50")
    assert code == EXIT_NEGATIVE
    code, out, _ = call("returns", "remark1", "--U", "1", "2", "--V", "7", "8", "--horizon", "30")
    assert code == EXIT_OK and "2, 5, 8, 11" in out


def test_dump_orbit_table():
    code, out, _ = call("periods", "remark4", "--max", "2", "--dump-orbit")
    rows = [ln.split("\t") for ln in out.splitlines() if "\t" in ln]
    assert rows[0] == ["period", "index", "x", "f(x)"]
    assert ["2", "0", "1/6", "5/6"] in rows


def test_corpus_list():
    code, out, _ = call("corpus", "list")
    assert code == EXIT_OK and "tent" in out.split() and "remark1" in out.split()


def test_usage_errors_are_structured():
    code, _, err = call("periods", "tent")
    assert code == EXIT_USAGE and err.startswith("error:")
    code, _, err = call("periods", "nosuch", "--max", "3", "--format", "json")
    assert code == EXIT_USAGE and json.loads(err)["error"] == "UnknownBuiltin"
    code, _, _ = call("cover", "tent", "--K", "1", "0", "--L", "0", "1")
    assert code == EXIT_USAGE
    code, _, _ = call("bogus")
    assert code == EXIT_USAGE


def test_budget_exit_code(monkeypatch):
    monkeypatch.setenv("PLCERT_MAX_PIECES", "8")
    code, out, _ = call("periods", "remark1", "--max", "4")
    assert code == EXIT_BUDGET and "unknown (budget)" in out


@pytest.mark.parametrize("argv", [
    ["analyze", "remark1"],
    ["periods", "remark2:2", "--max", "5"],
    ["turbulence", "tent"],
    ["turbulence", "remark4"],
    ["turbulence", "remark4", "--square"],
    ["cover", "tent", "--K", "1/4", "1/2", "--L", "0", "1"],
    ["returns", "tent", "--U", "0", "1/10", "--V", "1/2", "3/5", "--intersect", "1/3", "1/2", "0", "1/5"],
    ["scramble", "tent", "--stages", "1"],
    ["scramble", "tent", "--stages", "1", "--track", "2/5"],
    ["scramble", "remark4", "--stages", "1", "--invariant-via-square"],
])
def test_structured_output_reverifies(argv, tmp_path):
    path = tmp_path / "cert.json"
    code, _, _ = call(*argv, "--format", "json", "--output", str(path))
    assert code in (EXIT_OK, EXIT_NEGATIVE)
    doc = json.loads(path.read_text())
    assert "generated_at" not in doc
    vcode, vout, _ = call("verify", str(path))
    assert vcode == EXIT_OK, vout


def test_structured_output_deterministic():
    a = call("scramble", "tent", "--stages", "1", "--format", "json")[1]
    b = call("scramble", "tent", "--stages", "1", "--format", "json")[1]
    assert a == b
    stamped = json.loads(call("periods", "tent", "--max", "2", "--format", "json", "--timestamp")[1])
    assert "generated_at" in stamped


def test_verify_tampered_file(tmp_path):
    path = tmp_path / "cert.json"
    call("scramble", "tent", "--stages", "1", "--format", "json", "--output", str(path))
    doc = json.loads(path.read_text())
    doc["certificate"]["stages"][1]["steps"][0]["targets"][0]["window"] = ["1/2", "1/2"]
    path.write_text(json.dumps(doc))
    code, out, _ = call("verify", str(path))
    assert code == EXIT_NEGATIVE and "step (1, 0, 'SEPARATION')" in out
    code, out, _ = call("verify", str(path), "--format", "json")
    rep = json.loads(out)
    assert rep["ok"] is False and rep["step"] == [1, 0, "SEPARATION"]


def test_verify_garbage(tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    assert call("verify", str(path))[0] == EXIT_NEGATIVE
    assert call("verify", str(tmp_path / "missing.json"))[0] == EXIT_USAGE


def test_map_file_source(tmp_path):
    p = tmp_path / "m.plmap"
    p.write_text("map doubling\ndomain 0 1\nselfmap\nnode 0 0\nnode 1/2 1\nnode 1 0\n")
    code, out, _ = call("turbulence", str(p))
    assert code == EXIT_OK and "doubling" in out
    p.write_text("map broken\ndomain 0 1\nnode 0 0\nnode 0 1\n")
    code, _, err = call("analyze", str(p))
    assert code == EXIT_USAGE and "ValidationError" in err
