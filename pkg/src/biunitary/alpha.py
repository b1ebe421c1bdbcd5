"""Alpha-induction connections W2, W3, W4 and the identities relating them.

All cells are evaluated in the Temperley-Lieb path model of the diagram.
Vectors in ``Hom(a X_n, b)`` are spans of paths, trivalent vertices are
Jones-Wenzl projections followed by caps, and the braiding is the Kauffman
crossing.  In particular W4 is obtained from a single braiding of the
``mu`` block past the ``lambda`` block, so no alpha-induced endomorphism is
ever evaluated.

Chirality ``+`` braids W4 positively and W3 negatively; chirality ``-``
reverses both.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ade import ModuleData, ModuleTooLarge, dynkin, ghj_module, module_feasible
from .catops import DEFAULT_TOL, FusionTable, ShapeMismatch, fusion_table
from .connections import (
    Connection, ConnectionError_, cell_components, identity_connection, make_shape,
    restrict_connection,
)
from .graphs import connectivity
from .pathmodel import a_model, admissible, qint


def _sign(chirality: str) -> int:
    if chirality == "+":
        return 1
    if chirality == "-":
        return -1
    raise ValueError(f"chirality must be '+' or '-', got {chirality!r}")


def _module(m) -> ModuleData:
    if isinstance(m, ModuleData):
        return m
    return ghj_module(m, build_cells=False)


def _labels(k):
    return list(range(k + 1))


def _label_weights(k):
    return {v: qint(v + 1, k + 2) for v in _labels(k)}


def _check_label(k, *labels):
    for x in labels:
        if not 0 <= x <= k:
            raise ValueError(f"label {x} outside 0..{k}")


# -- W1 in the A-model ----------------------------------------------------------

def build_w1_model(k: int, lam: int, mu: int) -> Connection:
    """``W1(lam, mu)`` evaluated in the ``A_{k+1}`` path model from vertex ``0``.

    Same shape as :func:`biunitary.su2k.build_w1`; this is the gauge used by
    :func:`check_iybe`, since the identity there compares cell values directly.
    """
    _check_label(k, lam, mu)
    M = a_model(k)
    L = _labels(k)
    d = _label_weights(k)

    def N(a, b, c):
        return int(admissible(a, b, c, k))

    shape = make_shape(L, L, L, L,
                       top=lambda n1, n2: N(n1, mu, n2), left=lambda n1, n3: N(lam, n1, n3),
                       bot=lambda n3, n4: N(n3, mu, n4), right=lambda n2, n4: N(lam, n2, n4),
                       weights={x: d for x in ("V0", "V1", "V2", "V3")})
    blocks = {}
    p = np.ones(1)
    for key in shape.corners():
        n1, n3, n4, n2 = key
        y = M.tri_adjoint(p, n4, 0, n4, 0, lam, n2, n4)
        y = M.tri_adjoint(y, lam + n2, 0, n4, lam, n1, mu, n2)
        x = M.tri_adjoint(p, n4, 0, n4, 0, n3, mu, n4)
        x = M.tri_adjoint(x, n3 + mu, 0, n4, 0, lam, n1, n3)
        blocks[key] = np.full((1, 1, 1, 1), np.vdot(x, y))
    return Connection(shape, blocks)


# -- W2 and W3 ---------------------------------------------------------------------

def _w23(m: ModuleData, x: int, lam_braid: bool, sign: int) -> Connection:
    d = m.diagram
    if not module_feasible(d):
        raise ModuleTooLarge(f"{d.name}: module cells exceed the path budget")
    M = d.path_model()
    G, s, k = d.vertices, d.basepoint, m.k
    L = _labels(k)

    def N(a, b, c):
        return int(admissible(a, b, c, k))

    if lam_braid:
        def top(n1, n2):
            return N(x, n1, n2)
    else:
        def top(n1, n2):
            return N(n1, x, n2)
    shape = make_shape(L, G, G, L, top=top,
                       left=lambda n1, a1: M.hom_dim(s, a1, n1), bot=lambda a1, a2: M.hom_dim(a1, a2, x),
                       right=lambda n2, a2: M.hom_dim(s, a2, n2),
                       weights={"V0": _label_weights(k), "V3": _label_weights(k),
                                "V1": dict(d.weight), "V2": dict(d.weight)})
    blocks = {}
    for key in shape.corners():
        n1, a1, a2, n2 = key
        bs = shape.block_shape(*key)
        blk = np.zeros(bs, complex)
        right = M.hom_basis(s, a2, n2)
        for ir in range(bs[3]):
            if lam_braid:
                v = M.tri_adjoint(right[:, ir], n2, s, a2, 0, x, n1, n2, project=False)
                v = M.braid(v, x + n1, s, a2, 0, x, n1, sign)
            else:
                v = M.tri_adjoint(right[:, ir], n2, s, a2, 0, n1, x, n2, project=False)
            for il in range(bs[0]):
                for ib in range(bs[1]):
                    u = M.vectors([(s, a1, n1, il), (a1, a2, x, ib)])
                    blk[il, ib, 0, ir] = np.vdot(u, v)
        blocks[key] = blk
    return Connection(shape, blocks)


def build_w2(m, mu: int) -> Connection:
    """``W2(mu)``: labels on top (fusion with ``mu``), sectors at the bottom.

    Vertical edges ``nu -> a`` are a basis of ``Hom(iota nu, a)``; the cell
    value is ``<w3 (x) w4 | T(nu1, mu -> nu2)^* w2>``.

    Parameters
    ----------
    m : ModuleData or str
        Module (a Dynkin name is accepted).
    mu : int
        Label in ``0..k``.
    """
    m = _module(m)
    _check_label(m.k, mu)
    if mu in m.w2_cells:
        return m.w2_cells[mu]
    return _w23(m, mu, False, 1)


def build_w3(m, lam: int, chirality: str = "+") -> Connection:
    """``W3(lam)``: like ``W2`` but with the ``lam`` strand braided past the ``nu`` strands."""
    m = _module(m)
    _check_label(m.k, lam)
    return _w23(m, lam, True, -_sign(chirality))


def build_w4(m, lam: int, mu: int, chirality: str = "+") -> Connection:
    """``W4(alpha_lam, mu)`` on the sectors.

    The cell with top ``u1 in Hom(a1 mu, a2)``, right ``u2 in Hom(a2 lam, a4)``,
    left ``u3 in Hom(a1 lam, a3)`` and bottom ``u4 in Hom(a3 mu, a4)`` is
    ``<u3 (x) u4 | c | u1 (x) u2>`` where ``c`` braids the ``mu`` block past
    the ``lam`` block.
    """
    m = _module(m)
    _check_label(m.k, lam, mu)
    sign = _sign(chirality)
    d = m.diagram
    M = d.path_model()
    V = d.vertices
    hd = M.hom_dim
    w = dict(d.weight)
    shape = make_shape(V, V, V, V,
                       top=lambda a1, a2: hd(a1, a2, mu), left=lambda a1, a3: hd(a1, a3, lam),
                       bot=lambda a3, a4: hd(a3, a4, mu), right=lambda a2, a4: hd(a2, a4, lam),
                       weights={x: w for x in ("V0", "V1", "V2", "V3")})
    blocks = {}
    for key in shape.corners():
        a1, a3, a4, a2 = key
        bs = shape.block_shape(*key)
        blk = np.zeros(bs, complex)
        lower = [[M.vectors([(a1, a3, lam, il), (a3, a4, mu, ib)]) for ib in range(bs[1])]
                 for il in range(bs[0])]
        for it in range(bs[2]):
            for ir in range(bs[3]):
                y = M.braid(M.vectors([(a1, a2, mu, it), (a2, a4, lam, ir)]), mu + lam, a1, a4, 0, mu, lam, sign)
                for il in range(bs[0]):
                    for ib in range(bs[1]):
                        blk[il, ib, it, ir] = np.vdot(lower[il][ib], y)
        blocks[key] = blk
    return Connection(shape, blocks)


# -- intertwining Yang-Baxter equation ----------------------------------------------

def _transition(F: Connection, paths: dict, pos: int) -> dict:
    """Apply ``F`` as the map (top, right) -> (left, bottom) at steps ``pos, pos+1``.

    A path is ``(v0, e1, v1, e2, v2, e3, v3)`` with edges given by
    multiplicity indices.
    """
    out: dict = {}
    V1 = F.shape.V1
    for path, c in paths.items():
        v = list(path)
        x0, x3, x2 = v[2 * pos], v[2 * pos + 2], v[2 * pos + 4]
        t, r = v[2 * pos + 1], v[2 * pos + 3]
        for x1 in V1:
            blk = F.blocks.get((x0, x1, x2, x3))
            if blk is None:
                continue
            col = blk[:, :, t, r]
            for l, b in zip(*np.nonzero(col)):
                nv = v[:]
                nv[2 * pos + 1], nv[2 * pos + 2], nv[2 * pos + 3] = int(l), x1, int(b)
                key = tuple(nv)
                out[key] = out.get(key, 0) + c * col[l, b]
    return out


def _require(cond, msg):
    if not cond:
        raise ShapeMismatch(msg)


def check_iybe(w1: Connection, w2: Connection, w3a: Connection, w3b: Connection, w4: Connection) -> float:
    """Residual of the intertwining Yang-Baxter equation.

    Boundary words are ``nu1 -mu-> nu2 -lam-> nu4 -iota-> a4``.  One side
    applies ``w3b`` to the last two steps, then ``w2`` to the first two, then
    ``w4`` to the last two; the other side applies ``w1``, ``w2`` and ``w3a``
    in the mirrored positions.  The residual is the largest coefficient
    difference over all boundary words.
    """
    s1, s2, s3a, s3b, s4 = (x.shape for x in (w1, w2, w3a, w3b, w4))
    _require(set(s1.V3) <= set(s3b.V0) and set(s1.V2) <= set(s3b.V3),
             "W1 right graph must feed the second W3")
    _require(set(s3b.V1) <= set(s2.V2) and set(s2.V1) <= set(s4.V0) and set(s3b.V2) <= set(s4.V2),
             "W3 / W2 / W4 vertex sets do not chain")
    _require(set(s1.V0) <= set(s3a.V0) and set(s1.V1) <= set(s2.V0),
             "W1 / W2 / W3 vertex sets do not chain")
    res = 0.0
    for n1 in s1.V0:
        for n2 in s1.V3:
            for t in range(s1.g_top.m(n1, n2)):
                for n4 in s1.V2:
                    for r in range(s1.h_right.m(n4, n2)):
                        for a4 in s3b.V2:
                            for i in range(s3b.h_right.m(a4, n4)):
                                start = {(n1, t, n2, r, n4, i, a4): 1.0}
                                r1 = _transition(w4, _transition(w2, _transition(w3b, start, 1), 0), 1)
                                r2 = _transition(w3a, _transition(w2, _transition(w1, start, 0), 1), 0)
                                for key in set(r1) | set(r2):
                                    res = max(res, abs(r1.get(key, 0) - r2.get(key, 0)))
    return float(res)


def iybe_quadruple(m, lam: int, mu: int, chirality: str = "+"):
    """The five connections ``(W1, W2, W3, W3, W4)`` fed to :func:`check_iybe`."""
    m = _module(m)
    w3 = build_w3(m, lam, chirality)
    return (build_w1_model(m.k, lam, mu), build_w2(m, mu), w3, w3, build_w4(m, lam, mu, chirality))


# -- conjugation and opposite braiding -------------------------------------------------

def check_conj(m, lam: int, mu: int) -> float:
    """Largest deviation between ``conj W4(+, lam, mu)`` and the transposed ``W4(-, mu, lam)``.

    The transposition exchanges the two vertical corners and swaps the roles
    of (left, bottom) with (top, right)::

        conj W+(lam, mu)[a1, a3, a4, a2][l, b, t, r] = W-(mu, lam)[a1, a2, a4, a3][t, r, l, b]
    """
    m = _module(m)
    wp = build_w4(m, lam, mu, "+")
    wm = build_w4(m, mu, lam, "-")
    res = 0.0
    seen = set()
    for key, blk in wp.blocks.items():
        x0, x1, x2, x3 = key
        other = wm.blocks.get((x0, x3, x2, x1))
        seen.add((x0, x3, x2, x1))
        if other is None:
            res = max(res, float(np.abs(blk).max()) if blk.size else 0.0)
            continue
        res = max(res, float(np.abs(np.conj(blk) - other.transpose(2, 3, 0, 1)).max()))
    for key, blk in wm.blocks.items():
        if key not in seen and blk.size:
            res = max(res, float(np.abs(blk).max()))
    return res


# -- graded splitting -------------------------------------------------------------

def split_graded(w: Connection) -> list:
    """Split ``w`` into its connected cell components.

    Each returned connection has connected horizontal graphs.  Raises
    :class:`ConnectionError_` if a component lacks one of the four vertex
    sets (its horizontal graphs cannot be paired).
    """
    out = []
    for comp in cell_components(w):
        if not all(comp):
            raise ConnectionError_("component without vertices on every side; not parity-matchable")
        sub = restrict_connection(w, *comp)
        for g in (sub.shape.g_top, sub.shape.g_bot):
            if not connectivity(g)["connected"]:
                raise ConnectionError_("component with disconnected horizontal graph")
        out.append(sub)
    return out


# -- alpha-induced systems ------------------------------------------------------------

@dataclass
class AlphaSystem:
    module: ModuleData
    chirality: str
    irreducibles: list
    table: FusionTable

    def to_doc(self) -> dict:
        return {"diagram": self.module.diagram.name, "chirality": self.chirality,
                "size": len(self.irreducibles), "table": self.table.to_doc()}


def alpha_identity(m) -> Connection:
    """Identity connection on the basepoint grading of the diagram."""
    m = _module(m)
    d = m.diagram
    w = d.weight
    return identity_connection(d.graph, {v: w[v] for v in d.graph.even}, {v: w[v] for v in d.graph.odd})


def alpha_system(m, chirality: str = "+", cap: int = 64, lambdas=(1,), tol: float = DEFAULT_TOL,
                 seed: int = 0) -> AlphaSystem:
    """Fusion closure of the basepoint components of ``W4(alpha_lam, 1)``.

    Generators are taken for ``lam`` in ``lambdas``; ``lam = 1`` already
    generates the whole system.  Raises :class:`~biunitary.catops.ClosureCapExceeded`
    past ``cap`` irreducibles.
    """
    m = _module(m)
    gens = [build_w4(m, lam, 1, chirality) for lam in lambdas]
    labels = ["0"] + [f"a{lam}" for lam in lambdas]
    table = fusion_table(gens, alpha_identity(m), closure_cap=cap, tol=tol, labels=labels, seed=seed)
    return AlphaSystem(m, chirality, table.objects, table)


__all__ = [
    "AlphaSystem", "alpha_identity", "alpha_system", "build_w1_model", "build_w2", "build_w3", "build_w4",
    "check_conj", "check_iybe", "iybe_quadruple", "split_graded", "dynkin",
]
