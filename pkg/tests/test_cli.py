import json
import subprocess
import sys

import pytest

from biunitary.cli import dumps, main, run


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    d = tmp_path_factory.mktemp("conns")
    for name in ("E6", "E7", "A_4"):
        assert main(["ade", "build", "--diagram", name, "--out", str(d / f"{name}.json")]) == 0
    return d


def load(path):
    with open(path) as fh:
        return json.load(fh)


def assert_canonical(path):
    text = open(path).read()
    assert dumps(json.loads(text)) == text


def test_verify_ok(built, tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "--conn", str(built / "E6.json"), "--out", str(out)]) == 0
    doc = load(out)
    assert doc["pass"] and doc["unitarity_residual"] < 1e-10
    assert_canonical(out)


def test_verify_malformed(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"shape": ')
    assert main(["verify", "--conn", str(bad)]) == 2
    bad.write_text('{"shape": {}, "cells": []}')
    assert main(["verify", "--conn", str(bad)]) == 2
    assert main(["verify", "--conn", str(tmp_path / "missing.json")]) == 2


def test_verify_failing_connection(built, tmp_path):
    doc = load(built / "A_4.json")
    doc["cells"][0]["re"] += 0.5
    p = tmp_path / "broken.json"
    p.write_text(json.dumps(doc))
    res = run(["verify", "--conn", str(p), "--out", str(tmp_path / "r.json")])
    assert res.code == 1 and not load(res.report)["pass"]


def test_usage_errors():
    assert main([]) == 2
    assert main(["no-such-command"]) == 2
    assert main(["flatness"]) == 2


def test_flatness_violation_records_witness(built, tmp_path):
    out = tmp_path / "f.json"
    assert main(["flatness", "--conn", str(built / "E7.json"), "--max", "4", "4", "--out", str(out)]) == 1
    doc = load(out)
    assert doc["verdict"] == "violated" and doc["witness"]["size"] == [4, 4]
    assert_canonical(out)


def test_flatness_flat(built, tmp_path):
    out = tmp_path / "f.json"
    assert main(["flatness", "--conn", str(built / "E6.json"), "--max", "2", "2", "--out", str(out)]) == 0
    assert load(out)["verdict"] == "flat"


def test_flatness_bad_basepoint(built):
    assert main(["flatness", "--conn", str(built / "E6.json"), "--basepoint", "1"]) == 2


def test_flat_part_writes_graph(built, tmp_path):
    out = tmp_path / "fp"
    assert main(["flat-part", "--conn", str(built / "E7.json"), "--out", str(out)]) == 0
    g = load(out / "principal_graph.json")
    assert len(g["even"]) + len(g["odd"]) == 10
    assert (out / "principal_graph.dot").read_text().startswith("graph")


def test_decompose_and_compose(built, tmp_path):
    out = tmp_path / "dec"
    assert main(["decompose", "--conn", str(built / "A_4.json"), "--out", str(out)]) == 0
    rep = load(out / "report.json")
    assert [c["multiplicity"] for c in rep["components"]] == [1]
    assert main(["compose", "--up", str(built / "A_4.json"), "--down", str(built / "A_4.json")]) == 2


def test_fusion_table_su2k(tmp_path):
    out = tmp_path / "ft"
    assert main(["fusion-table", "--k", "4", "--out", str(out)]) == 0
    assert load(out / "report.json")["matches_su2k"]
    assert (out / "fusion_1.dot").exists()
    assert main(["fusion-table"]) == 2


def test_su2k_gen(tmp_path):
    out = tmp_path / "su.json"
    assert main(["su2k", "gen", "--k", "3", "--out", str(out)]) == 0
    doc = load(out)
    assert doc["pentagon_residual"] < 1e-10 and doc["k"] == 3
    assert_canonical(out)


def test_pf(tmp_path):
    g = tmp_path / "g.json"
    from biunitary.graphs import path_graph

    g.write_text(json.dumps(path_graph(4).to_doc()))
    out = tmp_path / "pf.json"
    assert main(["pf", "--graph", str(g), "--out", str(out)]) == 0
    assert load(out)["beta"] == pytest.approx(1.6180339887498949)


def test_module_pipeline(tmp_path):
    ghj = tmp_path / "ghj"
    assert main(["ghj", "solve", "--diagram", "E6", "--out", str(ghj)]) == 0
    man = load(ghj / "manifest.json")
    assert man["theta"] == [0, 6] and man["w2"] == {"1": "w2_1.json"}
    w4 = tmp_path / "w4.json"
    assert main(["alpha", "induce", "--module", str(ghj / "manifest.json"), "--lambda", "1", "--mu", "2",
                 "--out", str(w4)]) == 0
    assert main(["verify", "--conn", str(w4)]) == 0
    sweep = tmp_path / "sweep.json"
    assert main(["alpha", "sweep", "--module", str(ghj / "manifest.json"), "--out", str(sweep)]) == 0
    assert len(load(sweep)["rows"]) == 8
    orc = tmp_path / "orc"
    assert main(["oracle", "compare", "--module", "D4", "--out", str(orc)]) == 0
    assert load(orc / "report.json")["equivalent"]


def test_module_manifest_mismatch(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"diagram": "E6", "theta": [0, 4]}))
    assert main(["alpha", "induce", "--module", str(p)]) == 2


def test_reports_are_deterministic(built, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["flatness", "--conn", str(built / "E7.json"), "--max", "2", "2", "--seed", "0", "--out", str(a)])
    main(["flatness", "--conn", str(built / "E7.json"), "--max", "2", "2", "--seed", "0", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("x", [0.1, 1.0, 1e-300, 123456789.123, -2.5e17, 5e-324])
def test_float_round_trip(x):
    text = dumps({"x": x})
    assert json.loads(text)["x"] == x
    assert dumps(json.loads(text)) == text


def test_non_finite_becomes_null():
    assert dumps([float("inf"), float("nan")]) == "[null,null]\n"


def test_console_entry_point(built):
    r = subprocess.run([sys.executable, "-m", "biunitary.cli", "verify", "--conn", str(built / "E6.json")],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["pass"]
