import itertools

import numpy as np
import pytest

from biunitary import flatness
from biunitary.connections import ConnectionError_, conjugate, dual
from biunitary.flatness import flat_part, is_flat, partition_function, tiling, transpose
from biunitary.graphs import graph_isomorphic
from biunitary.strings import perturb_connection
from conftest import conn, diagram


def brute_force_Z(W, top, left, bottom, right):
    """Sum over interior labels of the tiled grid; simple graphs only.

    ``top``/``bottom`` are the vertex rows and ``left``/``right`` the vertex
    columns of the boundary.
    """
    cells = ((W, conjugate(W)), (dual(W), conjugate(dual(W))))
    m, n = len(left) - 1, len(top) - 1
    verts = list(dict.fromkeys(W.shape.V0 + W.shape.V1 + W.shape.V2 + W.shape.V3))
    interior = [(i, j) for i in range(1, m) for j in range(1, n)]
    total = 0j
    for labels in itertools.product(verts, repeat=len(interior)):
        p = [[None] * (n + 1) for _ in range(m + 1)]
        p[0], p[m] = list(top), list(bottom)
        for i in range(m + 1):
            p[i][0], p[i][n] = left[i], right[i]
        for (i, j), v in zip(interior, labels):
            p[i][j] = v
        prod = 1 + 0j
        for i in range(m):
            for j in range(n):
                blk = cells[i % 2][j % 2].blocks.get((p[i][j], p[i + 1][j], p[i + 1][j + 1], p[i][j + 1]))
                if blk is None or blk.size == 0:
                    prod = 0
                    break
                prod *= blk[0, 0, 0, 0]
            if prod == 0:
                break
        total += prod
    return total


@pytest.mark.parametrize("name,perturb", [("D_5", False), ("E7", False), ("D_5", True)])
@pytest.mark.parametrize("m,n", [(2, 2), (2, 4), (4, 2)])
def test_partition_function_matches_brute_force(name, perturb, m, n):
    d = diagram(name)
    W = conn(name)
    if perturb:
        W = perturb_connection(W, 0.7, seed=1)
    T = tiling(W)
    bp = d.basepoint
    rng = np.random.default_rng(0)
    sigmas = flatness.horizontal_strings(T, bp, n)
    rhos = flatness.vertical_strings(T, bp, m)
    checked = 0
    for _ in range(40):
        s = sigmas[rng.integers(len(sigmas))]
        r = rhos[rng.integers(len(rhos))]
        s2s = flatness.horizontal_strings(T, r[-1], n, row=m)
        r2s = flatness.vertical_strings(T, s[-1], m, col=n)
        pairs = [(a, b) for a in s2s for b in r2s if a[-1] == b[-1]]
        if not pairs:
            continue
        s2, r2 = pairs[rng.integers(len(pairs))]
        z = partition_function(W, bp, s, r, s2, r2, T)
        ref = brute_force_Z(W, s[::2], r[::2], s2[::2], r2[::2])
        assert abs(z - ref) < 1e-12
        checked += 1
    assert checked > 10


@pytest.mark.parametrize("name", ["A_4", "A_7", "D_4", "D_6", "E6"])
def test_flat_connections(name):
    r = is_flat(conn(name), diagram(name).basepoint, (3, 3))
    assert r.flat and r.witness is None
    assert r.max_defect < 1e-10


@pytest.mark.parametrize("name", ["D_5", "E7"])
def test_violated_connections_give_witness(name):
    r = is_flat(conn(name), diagram(name).basepoint, (4, 4))
    assert r.verdict == "violated"
    w = r.witness
    assert abs(w["Z"] - 1) > 0.1
    z = partition_function(conn(name), diagram(name).basepoint, w["sigma"], w["rho"], w["sigma"], w["rho"])
    assert z == pytest.approx(w["Z"], abs=1e-10)


def test_probe_agrees_with_exact():
    W, bp = conn("E7"), diagram("E7").basepoint
    a = is_flat(W, bp, (4, 4), mode="exact")
    b = is_flat(W, bp, (4, 4), mode="probe")
    assert a.verdict == b.verdict
    assert a.first_violation() == b.first_violation()
    assert b.max_defect <= a.max_defect + 1e-12


def test_stop_early_truncates():
    r = is_flat(conn("D_5"), diagram("D_5").basepoint, (4, 4), stop_early=True)
    assert r.sizes[-1] == r.first_violation()


def test_transpose_preserves_verdicts():
    W, bp = conn("D_5"), diagram("D_5").basepoint
    a = is_flat(W, bp, (3, 3), mode="exact")
    b = is_flat(transpose(W), bp, (3, 3), mode="exact")
    da = dict(zip(map(tuple, a.sizes), a.defect))
    db = dict(zip(map(tuple, b.sizes), b.defect))
    for (l, k), d in da.items():
        assert db[(k, l)] == pytest.approx(d, abs=1e-10)


@pytest.mark.skipif(flatness._compiled_step is None, reason="compiled kernel not built")
def test_backends_agree():
    W, bp = conn("E7"), diagram("E7").basepoint
    old = flatness.set_backend("python")
    try:
        a = is_flat(W, bp, (3, 3), mode="exact")
        flatness.set_backend("compiled")
        b = is_flat(W, bp, (3, 3), mode="exact")
    finally:
        flatness.set_backend(old)
    assert np.allclose(a.defect, b.defect, atol=1e-13)


def test_bad_arguments():
    with pytest.raises(ConnectionError_):
        is_flat(conn("A_3"), "nowhere")
    with pytest.raises(ValueError):
        is_flat(conn("A_3"), 0, mode="guess")
    with pytest.raises(ValueError):
        flatness.set_backend("gpu")


# Principal graphs of the subfactors: A_n and D_even, E6, E8 give their own
# diagram; D_odd gives A_{2n-3} and E7 gives D_10.
@pytest.mark.parametrize("name,expected", [("A_4", "A_4"), ("D_5", "A_7"), ("D_6", "D_6"), ("E6", "E6"),
                                           ("E7", "D_10")])
def test_flat_part_principal_graph(name, expected):
    fp = flat_part(conn(name), depth=12)
    assert fp.stabilized
    assert graph_isomorphic(fp.principal_graph, diagram(expected).graph) is not None


def test_flat_part_reports_unstabilized_depth():
    fp = flat_part(conn("E7"), depth=3)
    assert not fp.stabilized
    assert fp.depth == 3


def test_d7_needs_larger_diagrams():
    # D_7 is flat on every diagram up to (4, 4); the first violation is at (5, 5).
    W, bp = conn("D_7"), diagram("D_7").basepoint
    assert is_flat(W, bp, (4, 4)).flat
    r = is_flat(W, bp, (5, 5), stop_early=True)
    assert r.first_violation() == (5, 5)
    assert abs(r.witness["Z"] - 1) > 0.1
