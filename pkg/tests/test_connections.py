import numpy as np
import pytest

from biunitary.connections import (Connection, ConnectionError_, complex_conjugate, conjugate, connection_from_doc,
                                   direct_sum, dual, gauge_transform, max_difference, random_unitary_gauge,
                                   relabel_strings, verify_biunitarity)
from conftest import conn


@pytest.mark.parametrize("name", ["A_4", "D_5", "E6"])
def test_reflections_are_involutions(name):
    W = conn(name)
    assert max_difference(conjugate(conjugate(W)), W) < 1e-13
    assert max_difference(dual(dual(W)), W) < 1e-13


@pytest.mark.parametrize("name", ["A_4", "D_6", "E7"])
def test_reflections_stay_biunitary(name):
    W = conn(name)
    for V in (conjugate(W), dual(W), conjugate(dual(W)), complex_conjugate(W)):
        assert verify_biunitarity(V)["pass"]


def test_random_gauge_preserves_biunitarity():
    W = conn("E6")
    V = gauge_transform(W, random_unitary_gauge(W, seed=3))
    r = verify_biunitarity(V)
    assert r["pass"]
    assert max_difference(V, W) > 1e-3


def test_gauge_shape_mismatch_rejected():
    W = conn("D_4")
    g = random_unitary_gauge(W)
    key = next(iter(g.left))
    g.left[key] = np.eye(g.left[key].shape[0] + 1)
    with pytest.raises(ConnectionError_):
        gauge_transform(W, g)


def test_perturbed_values_fail_verification():
    W = conn("A_5")
    blocks = {k: np.array(b) for k, b in W.blocks.items()}
    key = next(k for k, b in blocks.items() if b.size)
    blocks[key] = blocks[key] * 1.1
    r = verify_biunitarity(Connection(W.shape, blocks))
    assert not r["pass"]
    assert r["unitarity_residual"] > 1e-3


def test_missing_cell_rejected():
    W = conn("A_3")
    blocks = dict(W.blocks)
    blocks.pop(next(iter(blocks)))
    with pytest.raises(ConnectionError_):
        Connection(W.shape, blocks)


def test_doc_round_trip_is_exact():
    W = relabel_strings(conn("E6"))
    V = connection_from_doc(W.to_doc())
    assert max_difference(V, W) == 0.0
    assert V.to_doc() == W.to_doc()


@pytest.mark.parametrize("doc", [{}, {"shape": 3}, {"shape": {"V0": []}, "cells": []}, []])
def test_malformed_doc_raises(doc):
    with pytest.raises(ConnectionError_):
        connection_from_doc(doc)


def test_direct_sum_doubles_multiplicities():
    W = conn("A_4")
    S = direct_sum(W, W)
    assert S.n_cells > W.n_cells
    assert verify_biunitarity(S)["pass"]
