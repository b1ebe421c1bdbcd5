import math

import numpy as np
import pytest

from biunitary.graphs import (BipartiteGraph, GraphError, connectivity, disjoint_union, graph_isomorphic,
                              path_graph, pf_data, pf_residual)


@pytest.mark.parametrize("n", range(2, 10))
def test_path_graph_pf_eigenvalue(n):
    g = path_graph(n)
    pf = pf_data(g)
    assert pf.beta == pytest.approx(2 * math.cos(math.pi / (n + 1)), abs=1e-12)
    assert pf_residual(g, pf) < 1e-12
    assert all(w > 0 for w in pf.mu.values())
    assert max(pf.mu.values()) == pytest.approx(1.0)


def test_basepoint_normalization():
    g = path_graph(5)
    pf = pf_data(g, basepoint=("even", g.even[0]))
    assert pf.normalization == "basepoint"
    assert pf.mu[("even", g.even[0])] == pytest.approx(1.0)


def test_multiplicities_enter_adjacency():
    g = BipartiteGraph.from_edges(["a"], ["b"], [("a", "b", 2)])
    assert pf_data(g).beta == pytest.approx(2.0)


def test_disconnected_graph_rejected():
    g = disjoint_union(path_graph(3), path_graph(3))
    assert not connectivity(g)["connected"]
    with pytest.raises(GraphError):
        pf_data(g)


def test_empty_graph_rejected():
    with pytest.raises(GraphError):
        pf_data(BipartiteGraph.from_edges(["a"], ["b"], []))


def test_doc_round_trip():
    g = BipartiteGraph.from_edges([0, 2], [1], [(0, 1), (2, 1, 3)])
    h = BipartiteGraph.from_doc(g.to_doc())
    assert h.to_doc() == g.to_doc()
    assert np.array_equal(h.mult, g.mult)


def test_isomorphism_respects_parity():
    g1 = BipartiteGraph.from_edges(["x", "y"], ["u"], [("x", "u"), ("y", "u")])
    g2 = BipartiteGraph.from_edges([1, 2], [0], [(2, 0), (1, 0)])
    assert graph_isomorphic(g1, g2) is not None
    assert graph_isomorphic(g1, g1.transpose()) is None


def test_dot_lists_every_edge():
    g = path_graph(4)
    dot = g.to_dot("P")
    assert dot.count("--") == g.n_edges
