"""Connections on four bipartite graphs and their bi-unitarity.

A cell is a closed square of four edges::

        x0 --top--> x3
        |            |
       left        right
        v            v
        x1 --bot--> x2

with ``top`` in ``g_top`` (even ``V0``, odd ``V3``), ``left`` in ``h_left``
(even ``V0``, odd ``V1``), ``bot`` in ``g_bot`` (even ``V2``, odd ``V1``) and
``right`` in ``h_right`` (even ``V2``, odd ``V3``).  Values are stored per
corner quadruple ``(x0, x1, x2, x3)`` as an array of shape
``(m_left, m_bot, m_top, m_right)``.

For fixed ``(x0, x2)`` the matrix ``U[(x1, l, b), (x3, t, r)] = W`` is the
unitarity matrix; for fixed ``(x1, x3)`` the matrix
``V[(x0, l, t), (x2, b, r)] = sqrt(mu0 mu2 / (mu1 mu3)) conj(W)`` is the
crossing-symmetry matrix.  Bi-unitarity means both are unitary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .graphs import BipartiteGraph

DEFAULT_TOL = 1e-9


class ConnectionError_(ValueError):
    """Malformed connection input (missing/duplicate/dangling cells, shape mismatch)."""


@dataclass(frozen=True)
class ConnectionShape:
    V0: tuple
    V1: tuple
    V2: tuple
    V3: tuple
    g_top: BipartiteGraph   # V0 x V3
    h_left: BipartiteGraph  # V0 x V1
    g_bot: BipartiteGraph   # V2 x V1
    h_right: BipartiteGraph  # V2 x V3
    weights: Mapping = field(repr=False)  # {"V0": {v: w}, ...}

    def __post_init__(self):
        checks = [
            (self.g_top, self.V0, self.V3, "g_top"),
            (self.h_left, self.V0, self.V1, "h_left"),
            (self.g_bot, self.V2, self.V1, "g_bot"),
            (self.h_right, self.V2, self.V3, "h_right"),
        ]
        for g, ev, od, name in checks:
            if set(g.even) != set(ev) or set(g.odd) != set(od):
                raise ConnectionError_(f"{name} vertex sets do not match the shape")
        for key, vs in (("V0", self.V0), ("V1", self.V1), ("V2", self.V2), ("V3", self.V3)):
            w = self.weights.get(key, {})
            for v in vs:
                if not w.get(v, 0) > 0:
                    raise ConnectionError_(f"weight for {key}:{v!r} missing or not positive")

    def w(self, key, v) -> float:
        return self.weights[key][v]

    def corners(self):
        """Corner quadruples carrying at least one cell, in canonical order."""
        out = []
        for x0 in self.V0:
            for x1 in self.V1:
                ml = self.h_left.m(x0, x1)
                if not ml:
                    continue
                for x2 in self.V2:
                    mb = self.g_bot.m(x2, x1)
                    if not mb:
                        continue
                    for x3 in self.V3:
                        if self.g_top.m(x0, x3) and self.h_right.m(x2, x3):
                            out.append((x0, x1, x2, x3))
        return out

    def block_shape(self, x0, x1, x2, x3):
        return (self.h_left.m(x0, x1), self.g_bot.m(x2, x1),
                self.g_top.m(x0, x3), self.h_right.m(x2, x3))

    def same_horizontal(self, other: "ConnectionShape") -> bool:
        return self.g_top.same_as(other.g_top) and self.g_bot.same_as(other.g_bot)

    def to_doc(self) -> dict:
        return {
            "V0": [str(v) for v in self.V0], "V1": [str(v) for v in self.V1],
            "V2": [str(v) for v in self.V2], "V3": [str(v) for v in self.V3],
            "g_top": self.g_top.to_doc(), "h_left": self.h_left.to_doc(),
            "g_bot": self.g_bot.to_doc(), "h_right": self.h_right.to_doc(),
            "weights": {k: {str(v): float(x) for v, x in self.weights[k].items()}
                        for k in ("V0", "V1", "V2", "V3")},
        }


def make_shape(V0, V1, V2, V3, top, left, bot, right, weights) -> ConnectionShape:
    """Build a shape from multiplicity callables/dicts ``f(x, y) -> int``.

    ``top(x0, x3)``, ``left(x0, x1)``, ``bot(x1, x2)`` and ``right(x3, x2)``
    follow the downward/rightward reading of a cell.
    """
    def mat(ev, od, f):
        return np.array([[int(f(a, b)) for b in od] for a in ev], dtype=np.int64).reshape(len(ev), len(od))

    V0, V1, V2, V3 = map(tuple, (V0, V1, V2, V3))
    return ConnectionShape(
        V0, V1, V2, V3,
        BipartiteGraph(V0, V3, mat(V0, V3, top)),
        BipartiteGraph(V0, V1, mat(V0, V1, left)),
        BipartiteGraph(V2, V1, mat(V2, V1, lambda x2, x1: bot(x1, x2))),
        BipartiteGraph(V2, V3, mat(V2, V3, lambda x2, x3: right(x3, x2))),
        {k: dict(v) for k, v in weights.items()},
    )


class Connection:
    """Complex values on the cells of a :class:`ConnectionShape`."""

    def __init__(self, shape: ConnectionShape, blocks: Mapping):
        self.shape = shape
        corners = shape.corners()
        cs = set(corners)
        for key in blocks:
            if key not in cs:
                raise ConnectionError_(f"dangling cell corner {key!r}")
        self.blocks = {}
        for key in corners:
            if key not in blocks:
                raise ConnectionError_(f"missing cell at corners {key!r}")
            b = np.asarray(blocks[key], dtype=complex)
            if b.shape != shape.block_shape(*key):
                raise ConnectionError_(f"block {key!r} has shape {b.shape}, expected {shape.block_shape(*key)}")
            b.setflags(write=False)
            self.blocks[key] = b

    def __repr__(self):
        s = self.shape
        return (f"Connection(|V|=({len(s.V0)},{len(s.V1)},{len(s.V2)},{len(s.V3)}), "
                f"corners={len(self.blocks)})")

    def value(self, top, left, bot, right) -> complex:
        x0, x3, it = top
        _, x1, il = left
        x2, _, ib = bot
        _, _, ir = right
        return complex(self.blocks[(x0, x1, x2, x3)][il, ib, it, ir])

    def cells(self):
        """Iterate ``(top, left, bot, right, value)`` in canonical order."""
        for (x0, x1, x2, x3), b in self.blocks.items():
            for il, ib, it, ir in np.ndindex(b.shape):
                yield ((x0, x3, it), (x0, x1, il), (x2, x1, ib), (x2, x3, ir), complex(b[il, ib, it, ir]))

    @property
    def n_cells(self) -> int:
        return sum(b.size for b in self.blocks.values())

    # -- matrix views ----------------------------------------------------------
    def unitarity_matrix(self, x0, x2):
        s = self.shape
        rows = [(x1, l, b) for x1 in s.V1 for l in range(s.h_left.m(x0, x1)) for b in range(s.g_bot.m(x2, x1))]
        cols = [(x3, t, r) for x3 in s.V3 for t in range(s.g_top.m(x0, x3)) for r in range(s.h_right.m(x2, x3))]
        u = np.zeros((len(rows), len(cols)), dtype=complex)
        ri = {k: i for i, k in enumerate(rows)}
        ci = {k: i for i, k in enumerate(cols)}
        for x1 in s.V1:
            for x3 in s.V3:
                blk = self.blocks.get((x0, x1, x2, x3))
                if blk is None:
                    continue
                for l, b, t, r in np.ndindex(blk.shape):
                    u[ri[(x1, l, b)], ci[(x3, t, r)]] = blk[l, b, t, r]
        return u, rows, cols

    def crossing_matrix(self, x1, x3):
        s = self.shape
        rows = [(x0, l, t) for x0 in s.V0 for l in range(s.h_left.m(x0, x1)) for t in range(s.g_top.m(x0, x3))]
        cols = [(x2, b, r) for x2 in s.V2 for b in range(s.g_bot.m(x2, x1)) for r in range(s.h_right.m(x2, x3))]
        v = np.zeros((len(rows), len(cols)), dtype=complex)
        ri = {k: i for i, k in enumerate(rows)}
        ci = {k: i for i, k in enumerate(cols)}
        for x0 in s.V0:
            for x2 in s.V2:
                blk = self.blocks.get((x0, x1, x2, x3))
                if blk is None:
                    continue
                f = np.sqrt(s.w("V0", x0) * s.w("V2", x2) / (s.w("V1", x1) * s.w("V3", x3)))
                for l, b, t, r in np.ndindex(blk.shape):
                    v[ri[(x0, l, t)], ci[(x2, b, r)]] = f * np.conj(blk[l, b, t, r])
        return v, rows, cols

    def to_doc(self) -> dict:
        cells = []
        for top, left, bot, right, val in self.cells():
            cells.append({
                "top": [str(top[0]), str(top[1]), top[2]],
                "left": [str(left[0]), str(left[1]), left[2]],
                "bot": [str(bot[0]), str(bot[1]), bot[2]],
                "right": [str(right[0]), str(right[1]), right[2]],
                "re": float(val.real), "im": float(val.imag),
            })
        return {"shape": self.shape.to_doc(), "cells": cells}


def make_connection(shape: ConnectionShape, values) -> Connection:
    """Build a connection from ``(top, left, bot, right, value)`` cell entries."""
    blocks = {}
    seen = set()
    for top, left, bot, right, val in values:
        x0, x3, it = top
        x0b, x1, il = left
        x2, x1b, ib = bot
        x2b, x3b, ir = right
        if x0 != x0b or x1 != x1b or x2 != x2b or x3 != x3b:
            raise ConnectionError_(f"edges do not close a square: {top}, {left}, {bot}, {right}")
        key = (x0, x1, x2, x3)
        bs = shape.block_shape(*key)
        if not (0 <= il < bs[0] and 0 <= ib < bs[1] and 0 <= it < bs[2] and 0 <= ir < bs[3]):
            raise ConnectionError_(f"dangling edge reference in cell {key!r}")
        cid = (key, il, ib, it, ir)
        if cid in seen:
            raise ConnectionError_(f"duplicate cell {cid!r}")
        seen.add(cid)
        blocks.setdefault(key, np.zeros(bs, dtype=complex))[il, ib, it, ir] = val
    total = sum(int(np.prod(shape.block_shape(*c))) for c in shape.corners())
    if len(seen) != total:
        raise ConnectionError_(f"missing cell: {total - len(seen)} of {total} cells not given")
    return Connection(shape, blocks)


def _unitary_defect(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0 if m.shape[0] == m.shape[1] else float("inf")
    if m.shape[0] != m.shape[1]:
        return float("inf")
    eye = np.eye(m.shape[0])
    return float(max(np.abs(m.conj().T @ m - eye).max(), np.abs(m @ m.conj().T - eye).max()))


def verify_biunitarity(W: Connection, tol: float = DEFAULT_TOL) -> dict:
    """Residuals of unitarity and of renormalized crossing symmetry."""
    s = W.shape
    u_res = 0.0
    pairs0 = {(c[0], c[2]) for c in W.blocks}
    for x0, x2 in sorted(pairs0, key=repr):
        u, _, _ = W.unitarity_matrix(x0, x2)
        u_res = max(u_res, _unitary_defect(u))
    c_res = 0.0
    pairs1 = {(c[1], c[3]) for c in W.blocks}
    for x1, x3 in sorted(pairs1, key=repr):
        v, _, _ = W.crossing_matrix(x1, x3)
        c_res = max(c_res, _unitary_defect(v))
    return {"unitarity_residual": u_res, "crossing_residual": c_res,
            "pass": bool(u_res < tol and c_res < tol)}


def _reweight(weights, mapping):
    return {new: dict(weights[old]) for new, old in mapping.items()}


def conjugate(W: Connection) -> Connection:
    """Horizontal reflection: ``V0<->V3``, ``V1<->V2``, renormalized conjugate values.

    The reflected cell has top ``x3 -> x0``, left ``x3 -> x2``, bottom
    ``x2 -> x1`` and right ``x1 -> x0``.
    """
    s = W.shape
    shape = ConnectionShape(
        s.V3, s.V2, s.V1, s.V0,
        s.g_top.transpose(), s.h_right.transpose(), s.g_bot.transpose(), s.h_left.transpose(),
        _reweight(s.weights, {"V0": "V3", "V1": "V2", "V2": "V1", "V3": "V0"}),
    )
    blocks = {}
    for (x0, x1, x2, x3), b in W.blocks.items():
        f = np.sqrt(s.w("V0", x0) * s.w("V2", x2) / (s.w("V1", x1) * s.w("V3", x3)))
        # new block axes: (left=old right, bot=old bot, top=old top, right=old left)
        blocks[(x3, x2, x1, x0)] = f * np.conj(b).transpose(3, 1, 2, 0)
    return Connection(shape, blocks)


def dual(W: Connection) -> Connection:
    """Vertical reflection: ``V0<->V1``, ``V3<->V2``, renormalized conjugate values.

    This is the inverse for vertical composition: ``compose(W, dual(W))``
    contains the identity connection.
    """
    s = W.shape
    shape = ConnectionShape(
        s.V1, s.V0, s.V3, s.V2,
        s.g_bot.transpose(), s.h_left.transpose(), s.g_top.transpose(), s.h_right.transpose(),
        _reweight(s.weights, {"V0": "V1", "V1": "V0", "V2": "V3", "V3": "V2"}),
    )
    blocks = {}
    for (x0, x1, x2, x3), b in W.blocks.items():
        f = np.sqrt(s.w("V0", x0) * s.w("V2", x2) / (s.w("V1", x1) * s.w("V3", x3)))
        # left and right edges reversed, top and bottom exchanged
        blocks[(x1, x0, x3, x2)] = f * np.conj(b).transpose(0, 2, 1, 3)
    return Connection(shape, blocks)


def complex_conjugate(W: Connection) -> Connection:
    """Entrywise complex conjugate on the same shape (opposite chirality for Dynkin cells)."""
    return Connection(W.shape, {k: np.conj(b) for k, b in W.blocks.items()})


@dataclass
class GaugeFamily:
    """Matrices on vertical multiplicity spaces.

    ``left[(x0, x1)]`` maps left-edge multiplicities of the source connection
    to those of the target (shape ``m' x m``); ``right[(x2, x3)]`` likewise.
    """

    left: dict
    right: dict

    def adjoint(self) -> "GaugeFamily":
        return GaugeFamily({k: v.conj().T for k, v in self.left.items()},
                           {k: v.conj().T for k, v in self.right.items()})

    def scaled(self, c: complex) -> "GaugeFamily":
        return GaugeFamily({k: c * v for k, v in self.left.items()},
                           {k: c * v for k, v in self.right.items()})

    def is_unitary(self, tol: float = 1e-9) -> bool:
        return all(_unitary_defect(np.asarray(m)) < tol
                   for m in list(self.left.values()) + list(self.right.values()) if np.size(m))


def identity_gauge(W: Connection) -> GaugeFamily:
    s = W.shape
    return GaugeFamily(
        {(x0, x1): np.eye(s.h_left.m(x0, x1)) for x0 in s.V0 for x1 in s.V1 if s.h_left.m(x0, x1)},
        {(x2, x3): np.eye(s.h_right.m(x2, x3)) for x2 in s.V2 for x3 in s.V3 if s.h_right.m(x2, x3)},
    )


def random_unitary_gauge(W: Connection, seed: int = 0) -> GaugeFamily:
    """Seeded Haar-like unitary gauge (QR of a complex Gaussian)."""
    rng = np.random.default_rng(seed)

    def ru(n):
        z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        q, r = np.linalg.qr(z)
        return q * (np.diag(r) / np.abs(np.diag(r)))

    g = identity_gauge(W)
    return GaugeFamily({k: ru(v.shape[0]) for k, v in g.left.items()},
                       {k: ru(v.shape[0]) for k, v in g.right.items()})


def apply_intertwiner(W: Connection, left: dict, right: dict, target_shape: ConnectionShape) -> Connection:
    """Values ``(Y_L x 1) U (1 x Y_R)^*`` on ``target_shape``."""
    blocks = {}
    for key in target_shape.corners():
        x0, x1, x2, x3 = key
        src = W.blocks.get(key)
        out_shape = target_shape.block_shape(*key)
        if src is None:
            blocks[key] = np.zeros(out_shape, dtype=complex)
            continue
        yl = left.get((x0, x1))
        yr = right.get((x2, x3))
        blocks[key] = np.einsum("Ll,lbtr,Rr->LbtR", yl, src, np.conj(yr))
    return Connection(target_shape, blocks)


def gauge_transform(W: Connection, g: GaugeFamily, strict: bool = False, tol: float = 1e-9) -> Connection:
    """Apply a vertical gauge; blocks must match ``W``'s multiplicities."""
    s = W.shape
    for (x0, x1), m in g.left.items():
        n = s.h_left.m(x0, x1)
        if np.shape(m) != (n, n):
            raise ConnectionError_(f"gauge block {(x0, x1)!r} has shape {np.shape(m)}, expected {(n, n)}")
    for (x2, x3), m in g.right.items():
        n = s.h_right.m(x2, x3)
        if np.shape(m) != (n, n):
            raise ConnectionError_(f"gauge block {(x2, x3)!r} has shape {np.shape(m)}, expected {(n, n)}")
    if strict and not g.is_unitary(tol):
        raise ConnectionError_("gauge family is not unitary")
    full = identity_gauge(W)
    full.left.update(g.left)
    full.right.update(g.right)
    return apply_intertwiner(W, full.left, full.right, s)


def direct_sum(W1: Connection, W2: Connection) -> Connection:
    """Block-diagonal sum over vertical multiplicity spaces."""
    s1, s2 = W1.shape, W2.shape
    if not s1.same_horizontal(s2) or set(s1.V1) != set(s2.V1) or set(s1.V3) != set(s2.V3):
        raise ConnectionError_("direct_sum needs identical horizontal graphs")
    left = lambda a, b: s1.h_left.m(a, b) + s2.h_left.m(a, b)  # noqa: E731
    right = lambda a, b: s1.h_right.m(b, a) + s2.h_right.m(b, a)  # noqa: E731
    shape = make_shape(s1.V0, s1.V1, s1.V2, s1.V3,
                       s1.g_top.m, left, lambda x1, x2: s1.g_bot.m(x2, x1), right, s1.weights)
    blocks = {}
    for key in shape.corners():
        x0, x1, x2, x3 = key
        blk = np.zeros(shape.block_shape(*key), dtype=complex)
        l1, r1 = s1.h_left.m(x0, x1), s1.h_right.m(x2, x3)
        if key in W1.blocks:
            blk[:l1, :, :, :r1] = W1.blocks[key]
        if key in W2.blocks:
            blk[l1:, :, :, r1:] = W2.blocks[key]
        blocks[key] = blk
    return Connection(shape, blocks)


def identity_connection(graph: BipartiteGraph, weights_even: Mapping, weights_odd: Mapping) -> Connection:
    """Trivial connection: identity vertical matchings, value 1 when top = bottom."""
    V0, V3 = graph.even, graph.odd
    shape = make_shape(V0, V0, V3, V3, graph.m,
                       lambda a, b: int(a == b), lambda x1, x2: graph.m(x1, x2),
                       lambda a, b: int(a == b),
                       {"V0": weights_even, "V1": weights_even, "V2": weights_odd, "V3": weights_odd})
    blocks = {}
    for key in shape.corners():
        x0, x1, x2, x3 = key
        n = graph.m(x0, x3)
        blk = np.zeros((1, n, n, 1), dtype=complex)
        blk[0, :, :, 0] = np.eye(n)
        blocks[key] = blk
    return Connection(shape, blocks)


def max_difference(W1: Connection, W2: Connection) -> float:
    """Largest cell difference between connections on the same shape."""
    keys = set(W1.blocks) | set(W2.blocks)
    out = 0.0
    for k in keys:
        a, b = W1.blocks.get(k), W2.blocks.get(k)
        if a is None or b is None or a.shape != b.shape:
            return float("inf")
        out = max(out, float(np.abs(a - b).max()) if a.size else 0.0)
    return out


def restrict_connection(W: Connection, V0, V1, V2, V3) -> Connection:
    """Sub-connection on the given vertex subsets (must be a union of cell-complex components)."""
    s = W.shape
    V0, V1, V2, V3 = (tuple(v for v in full if v in set(sub))
                      for full, sub in ((s.V0, V0), (s.V1, V1), (s.V2, V2), (s.V3, V3)))
    keep = (set(V0), set(V1), set(V2), set(V3))
    # Every vertical or horizontal edge touching a kept vertex must stay inside.
    for g, a, b, name in ((s.g_top, 0, 3, "g_top"), (s.h_left, 0, 1, "h_left"),
                          (s.g_bot, 2, 1, "g_bot"), (s.h_right, 2, 3, "h_right")):
        for v, w, _ in g.edges():
            if (v in keep[a]) != (w in keep[b]):
                raise ConnectionError_(f"restriction cuts an edge of {name}: ({v!r}, {w!r})")
    shape = ConnectionShape(
        V0, V1, V2, V3,
        s.g_top.restrict(V0, V3), s.h_left.restrict(V0, V1),
        s.g_bot.restrict(V2, V1), s.h_right.restrict(V2, V3),
        {k: {v: s.weights[k][v] for v in vs} for k, vs in (("V0", V0), ("V1", V1), ("V2", V2), ("V3", V3))},
    )
    return Connection(shape, {k: b for k, b in W.blocks.items()
                              if k[0] in keep[0] and k[1] in keep[1] and k[2] in keep[2] and k[3] in keep[3]})


def cell_components(W: Connection):
    """Vertex sets ``(V0, V1, V2, V3)`` of the connected components of the four-graph complex.

    Vertices without any edge are dropped.  Components are ordered by the
    position of their first ``V0`` vertex.
    """
    s = W.shape
    parent: dict = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        parent.setdefault(x, x)
        parent.setdefault(y, y)
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[ry] = rx

    for g, a, b in ((s.g_top, 0, 3), (s.h_left, 0, 1), (s.g_bot, 2, 1), (s.h_right, 2, 3)):
        for v, w, _ in g.edges():
            union((a, v), (b, w))
    groups: dict = {}
    for x in parent:
        groups.setdefault(find(x), set()).add(x)
    out = []
    for comp in groups.values():
        sets = tuple(tuple(v for v in full if (i, v) in comp)
                     for i, full in enumerate((s.V0, s.V1, s.V2, s.V3)))
        out.append(sets)
    order = {v: i for i, v in enumerate(s.V0)}
    out.sort(key=lambda c: (min((order[v] for v in c[0]), default=len(order)), repr(c)))
    return out


def connection_from_doc(doc) -> Connection:
    """Inverse of :meth:`Connection.to_doc`; vertex ids stay strings."""
    try:
        sd = doc["shape"]
        shape = ConnectionShape(
            tuple(sd["V0"]), tuple(sd["V1"]), tuple(sd["V2"]), tuple(sd["V3"]),
            BipartiteGraph.from_doc(sd["g_top"]), BipartiteGraph.from_doc(sd["h_left"]),
            BipartiteGraph.from_doc(sd["g_bot"]), BipartiteGraph.from_doc(sd["h_right"]),
            {k: {str(v): float(x) for v, x in sd["weights"][k].items()} for k in ("V0", "V1", "V2", "V3")},
        )
        cells = [((c["top"][0], c["top"][1], int(c["top"][2])),
                  (c["left"][0], c["left"][1], int(c["left"][2])),
                  (c["bot"][0], c["bot"][1], int(c["bot"][2])),
                  (c["right"][0], c["right"][1], int(c["right"][2])),
                  complex(float(c["re"]), float(c["im"]))) for c in doc["cells"]]
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConnectionError_(f"malformed connection document: {exc}") from exc
    return make_connection(shape, cells)


def relabel_strings(W: Connection) -> Connection:
    """Same connection with every vertex id replaced by ``str(id)`` (JSON form)."""
    return connection_from_doc(W.to_doc())
