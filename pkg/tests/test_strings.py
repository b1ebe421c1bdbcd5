import numpy as np
import pytest

from biunitary.alpha import build_w4
from biunitary.catops import equivalent
from biunitary.strings import (Inclusion, InclusionError, PathAlgebra, Step, TowerError, build_triple_tower,
                               canonical_word, connection_square, extract_w4_oracle, oracle_agreement,
                               perturb_connection, verify_commuting_square)
from conftest import conn, diagram, module


def test_path_algebra_dimension_counts_paths():
    d = diagram("A_4")
    g = d.graph
    steps = [Step(g, False, {v: d.weight[v] for v in g.odd}), Step(g, True, {v: d.weight[v] for v in g.even})]
    A = PathAlgebra(d.basepoint, steps * 2)
    assert A.dim == sum(n * n for n in A.dims.values())
    assert A.trace(A.one()) == pytest.approx(1.0)
    # Markov trace: weights proportional to PF weights of end vertices
    w = {v: A.weight[v] / d.weight[v] for v in A.ends}
    assert max(w.values()) == pytest.approx(min(w.values()))


def test_matrix_units_multiply():
    d = diagram("D_4")
    g = d.graph
    A = PathAlgebra(d.basepoint, [Step(g, False, {v: d.weight[v] for v in g.odd})])
    units = list(A.matrix_units())
    p, q = units[0]
    e = A.unit(p, q)
    f = A.unit(q, p)
    ef = PathAlgebra.mul(e, f)
    assert np.allclose(ef[p[-1]], A.unit(p, p)[p[-1]])


@pytest.mark.parametrize("name", ["A_4", "D_5", "E6"])
def test_connection_square_commutes(name):
    sq = connection_square(conn(name), diagram(name).basepoint)
    r = verify_commuting_square(*sq)
    assert r.residual < 1e-10
    assert r.nondegenerate


def test_inclusions_are_homomorphisms():
    A, B, C, D, AB, AC, BD, CD = connection_square(conn("E6"), diagram("E6").basepoint)
    for inc in (AB, AC, BD, CD):
        assert isinstance(inc, Inclusion)
        assert inc.defect() < 1e-12
        assert inc.trace_defect() < 1e-12


@pytest.mark.parametrize("name", ["A_4", "E6"])
def test_perturbed_connection_breaks_the_square(name):
    W = perturb_connection(conn(name), 0.5, seed=2)
    r = verify_commuting_square(*connection_square(W, diagram(name).basepoint))
    assert r.residual > 1e-3


def test_route_disagreement_is_reported():
    A, B, C, D, AB, AC, BD, CD = connection_square(conn("A_4"), diagram("A_4").basepoint)
    with pytest.raises(InclusionError):
        verify_commuting_square(A, B, C, D, AB, AC, BD, lambda x: {v: 0 * y for v, y in CD(x).items()})


def test_odd_prefix_rejected():
    with pytest.raises(ValueError):
        connection_square(conn("A_4"), prefix=3)


def test_canonical_word_order():
    word = canonical_word(2, 1, 1)
    fams = [x.fam for x in word]
    assert fams == ["i", "l", "l", "m"]
    assert all(x.side == "M" for x in word if x.fam != "i")


@pytest.mark.parametrize("name,lam,mu", [("A_5", 1, 1), ("E6", 1, 2), ("E6", 2, 1)])
def test_triple_tower_cubes_commute(name, lam, mu):
    t = build_triple_tower(module(name, True), lam, mu, 2, 2, 2)
    assert t.max_cube_residual < 1e-10
    assert t.embedding_residual < 1e-10
    assert t.trace_residual < 1e-10


def test_tower_rejects_wrong_w4():
    # The IYBE precheck uses the right W4; only the cube checks see the swap,
    # and they need two letters of each family to do so.
    from biunitary import strings

    m = module("E6", True)
    real = strings._alphabet

    def swapped(m_, lam, mu, chirality="+", with_w4=True):
        m2, alpha = real(m_, lam, mu, chirality, with_w4)
        alpha.W["W4"] = build_w4(m2, lam, mu, "-")
        alpha.cache.clear()
        return m2, alpha

    strings._alphabet = swapped
    try:
        with pytest.raises(TowerError):
            build_triple_tower(m, 1, 1, 2, 2, 2)
    finally:
        strings._alphabet = real


@pytest.mark.parametrize("name", ["A_5", "D_4", "E6"])
def test_oracle_matches_construction(name):
    m = module(name, True)
    res = extract_w4_oracle(m, 1, 1, full=True)
    assert res.containment < 1e-10 and res.agreement < 1e-10
    g = equivalent(res.connection, build_w4(m, 1, 1))
    assert g is not None and g.residual < 1e-8


def test_oracle_tracks_chirality():
    m = module("E6", True)
    ok, res = oracle_agreement(m, 1, 1, "-")
    assert ok and res < 1e-8
    assert equivalent(extract_w4_oracle(m, 1, 1, "+"), build_w4(m, 1, 1, "-")) is None
