import pytest

from biunitary.alpha import (alpha_system, build_w2, build_w3, build_w4, check_conj, check_iybe, iybe_quadruple,
                             split_graded)
from biunitary.catops import equivalent
from biunitary.connections import verify_biunitarity
from biunitary.graphs import graph_isomorphic_unoriented
from conftest import module


@pytest.mark.parametrize("name", ["A_5", "D_4", "E6"])
@pytest.mark.parametrize("lam,mu", [(1, 1), (2, 1), (1, 2)])
def test_induced_connections_are_biunitary(name, lam, mu):
    m = module(name)
    for W in (build_w2(m, mu), build_w3(m, lam), build_w4(m, lam, mu)):
        assert verify_biunitarity(W)["pass"]


@pytest.mark.parametrize("name,chirality", [("A_5", "+"), ("D_4", "-"), ("E6", "+"), ("E6", "-")])
def test_iybe(name, chirality):
    assert check_iybe(*iybe_quadruple(module(name), 1, 2, chirality)) < 1e-9


def test_iybe_detects_wrong_w4():
    m = module("E6")
    w1, w2, w3a, w3b, _ = iybe_quadruple(m, 1, 1, "+")
    wrong = build_w4(m, 1, 1, "-")
    assert check_iybe(w1, w2, w3a, w3b, wrong) > 1e-3


@pytest.mark.parametrize("name", ["A_5", "E6", "E7"])
def test_conjugation_exchanges_chirality(name):
    assert check_conj(module(name), 1, 2) < 1e-9


@pytest.mark.parametrize("name", ["A_5", "D_4", "E6", "E7"])
def test_split_graded_gives_two_copies_of_the_diagram(name):
    m = module(name)
    parts = split_graded(build_w4(m, 1, 1))
    assert len(parts) == 2
    for p in parts:
        assert graph_isomorphic_unoriented(p.shape.g_top, m.diagram.graph) is not None
        assert graph_isomorphic_unoriented(p.shape.g_bot, m.diagram.graph) is not None


def test_split_components_have_all_four_sides():
    m = module("A_5")
    W = build_w4(m, 0, 1)
    parts = split_graded(W)
    assert all(all(len(v) for v in (p.shape.V0, p.shape.V1, p.shape.V2, p.shape.V3)) for p in parts)


def test_a_chiralities_agree():
    m = module("A_5")
    assert equivalent(build_w4(m, 1, 1, "+"), build_w4(m, 1, 1, "-")) is not None


def test_e6_chiralities_differ():
    m = module("E6")
    assert equivalent(build_w4(m, 1, 1, "+"), build_w4(m, 1, 1, "-")) is None


@pytest.mark.parametrize("name,size", [("A_5", 5), ("D_4", 4)])
def test_alpha_system_size(name, size):
    assert len(alpha_system(module(name)).irreducibles) == size


def test_bad_label():
    with pytest.raises(ValueError):
        build_w4(module("A_3"), 7, 1)


@pytest.mark.parametrize("chirality,other", [("+", "-"), ("-", "+")])
def test_graded_components_share_the_chirality(chirality, other):
    from biunitary.ade import ocneanu_connection
    from biunitary.connections import conjugate, dual

    m = module("E6")
    same, opposite = ocneanu_connection("E6", chirality), ocneanu_connection("E6", other)
    for part in split_graded(build_w4(m, 1, 1, chirality)):
        assert any(equivalent(f(same), part) is not None for f in (lambda x: x, conjugate, dual))
        assert all(equivalent(f(opposite), part) is None for f in (lambda x: x, conjugate, dual))
