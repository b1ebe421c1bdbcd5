import cmath

import numpy as np
import pytest

from biunitary.connections import verify_biunitarity
from biunitary.su2k import (braiding_gauge, build_w1, hexagon_residual, pentagon_residual, quantum_data,
                            w1_fusion_table)


@pytest.mark.parametrize("k", range(1, 11))
def test_pentagon_and_hexagon(k):
    d = quantum_data(k)
    assert pentagon_residual(d) < 1e-10
    assert hexagon_residual(d, 1) < 1e-10
    assert hexagon_residual(d, -1) < 1e-10


@pytest.mark.parametrize("k", [2, 5])
def test_fusion_rules_are_truncated_clebsch_gordan(k):
    d = quantum_data(k)
    for a in d.labels:
        for b in d.labels:
            allowed = {c for c in range(abs(a - b), min(a + b, 2 * k - a - b) + 1, 2)}
            assert {c for c in d.labels if d.N[a, b, c]} == allowed


def test_quantum_dimensions():
    k = 4
    d = quantum_data(k)
    q = cmath.pi / (k + 2)
    for a in d.labels:
        assert d.qdim[a] == pytest.approx(np.sin((a + 1) * q) / np.sin(q))


@pytest.mark.parametrize("k,lam,mu", [(2, 1, 1), (3, 2, 1), (4, 1, 2), (5, 3, 2)])
def test_w1_is_biunitary(k, lam, mu):
    assert verify_biunitarity(build_w1(quantum_data(k), lam, mu))["pass"]


@pytest.mark.parametrize("k", range(1, 7))
def test_w1_fusion_table_matches_fusion_rules(k):
    d = quantum_data(k)
    assert np.array_equal(w1_fusion_table(d).N, d.N)


@pytest.mark.parametrize("sign", [1, -1])
def test_braiding_gauge_exchanges_factors(sign):
    braiding_gauge(quantum_data(4), 1, 2, 1, sign)
