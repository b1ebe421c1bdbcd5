import pytest

from biunitary.catops import ShapeMismatch, compose, decompose, equivalent, hom_dim, is_biunitary
from biunitary.connections import direct_sum, dual, gauge_transform, identity_connection, random_unitary_gauge
from conftest import conn


@pytest.mark.parametrize("name", ["A_4", "D_5", "E6"])
def test_ocneanu_connections_are_irreducible(name):
    parts = decompose(conn(name))
    assert len(parts) == 1 and parts[0][1] == 1


def test_equivalence_recovers_random_gauge():
    W = conn("E6")
    V = gauge_transform(W, random_unitary_gauge(W, seed=7))
    g = equivalent(W, V)
    assert g is not None and g.residual < 1e-9


def test_chiralities_inequivalent_on_e6():
    assert equivalent(conn("E6", "+"), conn("E6", "-")) is None


def test_compose_with_dual_is_biunitary_and_contains_identity():
    W = conn("D_4")
    P = compose(W, dual(W))
    assert is_biunitary(P)
    s = W.shape
    ident = identity_connection(s.g_top, s.weights["V0"], s.weights["V3"])
    assert hom_dim(P, ident) == 1


def test_compose_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        compose(conn("A_4"), conn("A_4"))


def test_decompose_direct_sum():
    W = conn("A_5")
    parts = decompose(direct_sum(W, W))
    assert len(parts) == 1 and parts[0][1] == 2
    assert equivalent(parts[0][0], W) is not None


def test_hom_dim_of_irreducible_is_one():
    W = conn("E7")
    assert hom_dim(W, W) == 1


def test_decomposition_is_seed_independent():
    W = conn("D_4")
    P = compose(W, dual(W))
    a = sorted(m for _, m in decompose(P, seed=0))
    b = sorted(m for _, m in decompose(P, seed=5))
    assert a == b



@pytest.mark.parametrize("seed", [0, 3])
def test_canonical_gauge_is_idempotent_and_gauge_equivalent(seed):
    from biunitary.alpha import build_w4
    from biunitary.catops import canonical_gauge
    from biunitary.connections import max_difference
    from conftest import module

    W = gauge_transform(build_w4(module("E6"), 1, 2), random_unitary_gauge(build_w4(module("E6"), 1, 2), seed))
    C = canonical_gauge(W)
    assert max_difference(canonical_gauge(C), C) < 1e-12
    assert equivalent(C, W) is not None
