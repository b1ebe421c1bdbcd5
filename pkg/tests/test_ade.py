import math

import numpy as np
import pytest

from biunitary.ade import (canonical_name, catalog, dynkin, ghj_module, global_index, locality_check, nimrep,
                           ocneanu_connection, twist_trivial)
from biunitary.connections import verify_biunitarity
from biunitary.graphs import GraphError
from conftest import module

COXETER = {"A_2": 3, "A_5": 6, "A_9": 10, "D_4": 6, "D_5": 8, "D_8": 14, "E6": 12, "E7": 18, "E8": 30}


@pytest.mark.parametrize("name,h", sorted(COXETER.items()))
def test_coxeter_number(name, h):
    d = dynkin(name)
    assert d.coxeter == h
    assert d.pf.beta == pytest.approx(2 * math.cos(math.pi / h), abs=1e-12)


def test_basepoint_has_smallest_weight():
    for name in ("D_5", "E6", "E7", "E8"):
        d = dynkin(name)
        assert d.weight[d.basepoint] == pytest.approx(min(d.weight.values()))
        assert d.weight[d.basepoint] == pytest.approx(1.0)


def test_names_are_canonicalized():
    assert canonical_name("a5") == canonical_name("A_5")
    with pytest.raises(GraphError):
        dynkin("A_1")


@pytest.mark.parametrize("name", catalog())
@pytest.mark.parametrize("chirality", ["+", "-"])
def test_ocneanu_connection_is_biunitary(name, chirality):
    r = verify_biunitarity(ocneanu_connection(name, chirality))
    assert r["unitarity_residual"] < 1e-10 and r["crossing_residual"] < 1e-10


def test_bad_chirality():
    with pytest.raises(ValueError):
        ocneanu_connection("A_3", "x")


@pytest.mark.parametrize("name", ["A_5", "D_4", "E6", "E7"])
def test_nimrep_is_a_representation(name):
    d = dynkin(name)
    vs = nimrep(d)
    k = len(vs) - 1
    assert np.array_equal(vs[0], np.eye(len(d.vertices), dtype=vs[0].dtype))
    for lam in range(1, k):
        # V_1 V_lam = V_{lam-1} + V_{lam+1}
        assert np.array_equal(vs[1] @ vs[lam], vs[lam - 1] + vs[lam + 1])
    assert all((v >= 0).all() for v in vs)


# Known dual canonical endomorphisms and locality of the GHJ modules.
THETA = {"A_5": ((0,), True), "D_4": ((0, 4), True), "D_6": ((0, 8), True), "D_5": ((0, 6), False),
         "E6": ((0, 6), True), "E7": ((0, 8, 16), False), "E8": ((0, 10, 18, 28), True)}


@pytest.mark.parametrize("name", sorted(THETA))
def test_theta_and_locality(name):
    m = module(name)
    theta, local = THETA[name]
    assert m.theta == theta
    assert m.local == local
    assert m.index() == pytest.approx(global_index(m.diagram), rel=1e-12)


def test_locality_details_show_a_failing_pair():
    m = module("E7")
    ok, rows = locality_check(m, details=True)
    assert not ok
    assert any(dev > 1e-6 for *_, dev in rows)


def test_twist_trivial():
    assert twist_trivial(10, 6)
    assert not twist_trivial(10, 2)


def test_w2_cell_is_built_and_biunitary():
    m = ghj_module("E6")
    assert m.built and 1 in m.w2_cells
    assert verify_biunitarity(m.w2_cells[1])["pass"]


def test_oversized_module_not_built():
    m = ghj_module("E8")
    assert not m.built and not m.w2_cells
