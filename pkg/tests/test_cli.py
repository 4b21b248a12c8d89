import json
import time

import pytest

from clawgeo import cli, corpus

ROWS = "1,0,-1,0;0,1,-1,0"


def run(args, capsys):
    status = cli.main(args)
    out = capsys.readouterr().out
    return status, json.loads(out) if out else None


def test_analyze(capsys):
    status, rep = run(["analyze", "example_intro.claw"], capsys)
    assert status == 0 and rep["pass"] and rep["schema"] == "report_v1"
    res = rep["results"]
    assert res["laws_valid"] == "5/5"
    assert res["linear_degeneracy"]["linearly_degenerate"]
    assert res["structure"]["nondiagonalizable"] == [True, True, True]


def test_reciprocal_writes_spec(tmp_path, capsys):
    out = tmp_path / "t.claw"
    status, rep = run(["reciprocal", "example_intro", "--rows", ROWS, "--out-spec", str(out)], capsys)
    assert status == 0
    assert rep["results"]["speeds"] == [[1.0, 0.0], pytest.approx([0.0, 1.0], abs=1e-12),
                                        pytest.approx([1.0, -1.0], abs=1e-9)]
    assert rep["results"]["focal"]["pass"]
    text = out.read_text()
    assert text.startswith("system example_intro_reciprocal") and "origin reciprocal;" in text

    status, rep = run(["web-cubic", str(out)], capsys)
    assert status == 0 and rep["results"]["nullity"] == 1


def test_dualize_and_hamiltonian(tmp_path, capsys):
    status, rep = run(["dualize", "example_intro", "--samples", "30", "--out-spec", str(tmp_path / "d.claw"),
                       "--csv", str(tmp_path / "g.csv")], capsys)
    assert status == 0 and all(c["pass"] for c in rep["results"]["checks"].values())
    assert (tmp_path / "d.claw").read_text().startswith("system example_intro_dual")
    status, rep = run(["hamiltonian-check", "example_intro", "--samples", "30"], capsys)
    assert status == 0 and rep["pass"]


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.claw"
    bad.write_text("system s vars u1; flux u1: u2;")
    status, rep = run(["analyze", str(bad)], capsys)
    assert status == 2 and not rep["pass"]
    assert rep["errors"][0]["type"] == "UnknownVariableError" and rep["errors"][0]["line"] == 1


def test_failure_exit_code(capsys):
    # burgers has no Hamiltonian block
    status, rep = run(["hamiltonian-check", "burgers"], capsys)
    assert status == 1 and rep["errors"]
    # a 1-component system has no infinite/zero/-1 web structure
    status, rep = run(["web-cubic", "burgers"], capsys)
    assert status == 1


def test_tolerance_override_can_fail(capsys):
    status, rep = run(["analyze", "example_intro", "--tol", "law=1e-30", "--samples", "10"], capsys)
    assert status == 1 and not rep["pass"]


def test_bad_config(capsys):
    assert cli.main(["analyze", "example_intro", "--samples", "3"]) == 2
    assert cli.main(["analyze", "example_intro", "--tol", "nope=1"]) == 2


def test_csv_dump(tmp_path, capsys):
    path = tmp_path / "f.csv"
    status, _ = run(["analyze", "linear_diagonal", "--samples", "10", "--csv", str(path)], capsys)
    lines = path.read_text().splitlines()
    assert status == 0 and len(lines) == 11 and lines[0].startswith("index,u1,u2,u3,speed1_a")


def test_all_is_deterministic_and_fast(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    t0 = time.perf_counter()
    assert cli.main(["all", "-o", str(a)]) == 0
    elapsed = time.perf_counter() - t0
    assert cli.main(["all", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert elapsed < 60
    rep = json.loads(a.read_text())
    assert set(rep["results"]) == {"analyze", "dualize", "hamiltonian-check", "reciprocal", "web-cubic",
                                   "temple-bridge"}


def test_corpus_names():
    assert {"example_intro", "burgers", "linear_diagonal", "hamiltonian_cubic", "generic_cubic"} <= set(corpus.names())
