"""Category operations on connections: composition, Hom spaces, decomposition.

Connections are 1-morphisms between their horizontal graphs and compose
vertically.  Morphisms between two connections with the same horizontal
graphs are pairs of matrix families on the vertical multiplicity spaces
(intertwiners).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .connections import (
    Connection, ConnectionError_, ConnectionShape, GaugeFamily, apply_intertwiner,
    cell_components, conjugate, make_shape, restrict_connection, verify_biunitarity,
)

DEFAULT_TOL = 1e-9


class ShapeMismatch(ConnectionError_):
    """Raised when two connections do not have compatible graphs."""


# -- composition -----------------------------------------------------------------

def _middle_matches(up: Connection, down: Connection) -> bool:
    a, b = up.shape, down.shape
    if set(b.V0) != set(a.V1) or set(b.V3) != set(a.V2):
        return False
    return all(a.g_bot.m(x2, x1) == b.g_top.m(x1, x2) for x1 in a.V1 for x2 in a.V2)


def _match_down(up: Connection, down: Connection):
    """``down`` itself or its restriction to the component block meeting ``up``'s bottom."""
    if _middle_matches(up, down):
        return down
    a = up.shape
    want0, want3 = set(a.V1), set(a.V2)
    picked = [c for c in cell_components(down) if set(c[0]) & want0 or set(c[3]) & want3]
    if not picked:
        return None
    sets = [tuple(v for c in picked for v in c[i]) for i in range(4)]
    try:
        sub = restrict_connection(down, *sets)
    except ConnectionError_:
        return None
    return sub if _middle_matches(up, sub) else None


def compose(W_up: Connection, W_down: Connection) -> Connection:
    """Vertical product: ``W_up`` stacked on ``W_down``.

    The bottom graph of ``W_up`` must coincide with the top graph of
    ``W_down``.  When ``W_down`` has several cell components, the unique
    union of components meeting ``W_up``'s bottom vertices is used.

    Composite vertical edges are pairs of edges ``(y, l_up, l_down)``; the
    composite value sums over the shared middle horizontal edge.
    """
    down = _match_down(W_up, W_down)
    if down is None:
        raise ShapeMismatch("middle-graph mismatch")
    a, b = W_up.shape, down.shape
    left_edges: dict = {}
    for x0 in a.V0:
        for x1 in b.V1:
            lst = [(y, i, j) for y in a.V1 for i in range(a.h_left.m(x0, y)) for j in range(b.h_left.m(y, x1))]
            if lst:
                left_edges[(x0, x1)] = lst
    right_edges: dict = {}
    for x2 in b.V2:
        for x3 in a.V3:
            lst = [(z, i, j) for z in a.V2 for i in range(a.h_right.m(z, x3)) for j in range(b.h_right.m(x2, z))]
            if lst:
                right_edges[(x2, x3)] = lst
    shape = make_shape(
        a.V0, b.V1, b.V2, a.V3,
        top=a.g_top.m,
        left=lambda x0, x1: len(left_edges.get((x0, x1), ())),
        bot=lambda x1, x2: b.g_bot.m(x2, x1),
        right=lambda x3, x2: len(right_edges.get((x2, x3), ())),
        weights={"V0": a.weights["V0"], "V1": b.weights["V1"], "V2": b.weights["V2"], "V3": a.weights["V3"]},
    )
    blocks = {}
    for key in shape.corners():
        x0, x1, x2, x3 = key
        blk = np.zeros(shape.block_shape(*key), dtype=complex)
        for li, (y, l1, l2) in enumerate(left_edges[(x0, x1)]):
            for ri, (z, r1, r2) in enumerate(right_edges[(x2, x3)]):
                bu = W_up.blocks.get((x0, y, z, x3))
                bd = down.blocks.get((y, x1, x2, z))
                if bu is None or bd is None:
                    continue
                # bu[l1, m, t, r1] * bd[l2, b, m, r2] summed over the middle edge m
                blk[li, :, :, ri] = np.einsum("mt,bm->bt", bu[l1, :, :, r1], bd[l2, :, :, r2])
        blocks[key] = blk
    return Connection(shape, blocks)


def compose_graded(W_up: Connection, W_down: Connection) -> Connection:
    """Compose graded components: use ``W_down`` or, failing that, its partner ``conjugate(W_down)``."""
    try:
        return compose(W_up, W_down)
    except ShapeMismatch:
        return compose(W_up, conjugate(W_down))


# -- intertwiners ----------------------------------------------------------------

@dataclass
class Intertwiner:
    """Matrix families ``left[(x0, x1)]`` (``m2 x m``) and ``right[(x2, x3)]``."""

    left: dict
    right: dict

    def vector(self, layout) -> np.ndarray:
        return np.concatenate([self.left[k].ravel() for k in layout[0]] +
                              [self.right[k].ravel() for k in layout[1]] + [np.zeros(0)])

    def adjoint(self) -> "Intertwiner":
        return Intertwiner({k: v.conj().T for k, v in self.left.items()},
                           {k: v.conj().T for k, v in self.right.items()})

    def __matmul__(self, other: "Intertwiner") -> "Intertwiner":
        return Intertwiner({k: self.left[k] @ other.left[k] for k in self.left},
                           {k: self.right[k] @ other.right[k] for k in self.right})

    def __add__(self, other):
        return Intertwiner({k: self.left[k] + other.left[k] for k in self.left},
                           {k: self.right[k] + other.right[k] for k in self.right})

    def scale(self, c):
        return Intertwiner({k: c * v for k, v in self.left.items()},
                           {k: c * v for k, v in self.right.items()})

    def as_gauge(self) -> GaugeFamily:
        return GaugeFamily(dict(self.left), dict(self.right))


def align(W: Connection, W2: Connection):
    """Bring two connections onto common vertex sets by restricting graded components."""
    s, t = W.shape, W2.shape
    same = lambda: all(set(getattr(s, v)) == set(getattr(t, v)) for v in ("V0", "V1", "V2", "V3"))  # noqa: E731
    if not same():
        for big, small, flip in ((W, W2, False), (W2, W, True)):
            bs, ss = big.shape, small.shape
            if all(set(getattr(ss, v)) <= set(getattr(bs, v)) for v in ("V0", "V1", "V2", "V3")):
                try:
                    sub = restrict_connection(big, ss.V0, ss.V1, ss.V2, ss.V3)
                except ConnectionError_:
                    continue
                W, W2 = (small, sub) if flip else (sub, small)
                s, t = W.shape, W2.shape
                break
    if not same() or not s.same_horizontal(t):
        raise ShapeMismatch("connections do not share horizontal graphs")
    return W, W2


def _layout(W: Connection, W2: Connection):
    s, t = W.shape, W2.shape
    lk = [(x0, x1) for x0 in s.V0 for x1 in s.V1 if s.h_left.m(x0, x1) and t.h_left.m(x0, x1)]
    rk = [(x2, x3) for x2 in s.V2 for x3 in s.V3 if s.h_right.m(x2, x3) and t.h_right.m(x2, x3)]
    return lk, rk


def _hom_system(W: Connection, W2: Connection):
    s, t = W.shape, W2.shape
    lk, rk = _layout(W, W2)
    off, pos = {}, 0
    for k in lk:
        off[("L", k)] = pos
        pos += t.h_left.m(*k) * s.h_left.m(*k)
    for k in rk:
        off[("R", k)] = pos
        pos += t.h_right.m(*k) * s.h_right.m(*k)
    n_unknown = pos
    rows, cols, vals = [], [], []
    eq = 0
    corners = sorted(set(W.blocks) | set(W2.blocks), key=repr)
    for key in corners:
        x0, x1, x2, x3 = key
        mL, mR = s.h_left.m(x0, x1), s.h_right.m(x2, x3)
        nL, nR = t.h_left.m(x0, x1), t.h_right.m(x2, x3)
        if nL == 0 or mR == 0:
            continue
        mb, mt = s.g_bot.m(x2, x1), s.g_top.m(x0, x3)
        B1, B2 = W.blocks.get(key), W2.blocks.get(key)
        for b in range(mb):
            for tt in range(mt):
                for lp in range(nL):
                    for r in range(mR):
                        # sum_l YL[lp, l] W[l, b, t, r] - sum_rp W2[lp, b, t, rp] YR[rp, r] = 0
                        if B1 is not None and ("L", (x0, x1)) in off:
                            o = off[("L", (x0, x1))]
                            for l in range(mL):
                                v = B1[l, b, tt, r]
                                if v != 0:
                                    rows.append(eq)
                                    cols.append(o + lp * mL + l)
                                    vals.append(v)
                        if B2 is not None and ("R", (x2, x3)) in off:
                            o = off[("R", (x2, x3))]
                            for rp in range(nR):
                                v = B2[lp, b, tt, rp]
                                if v != 0:
                                    rows.append(eq)
                                    cols.append(o + rp * mR + r)
                                    vals.append(-v)
                        eq += 1
    a = np.zeros((eq, n_unknown), dtype=complex)
    np.add.at(a, (np.array(rows, dtype=np.intp), np.array(cols, dtype=np.intp)), np.array(vals, dtype=complex))
    return a, (lk, rk), off


def _unpack(vec, W, W2, layout, off) -> Intertwiner:
    s, t = W.shape, W2.shape
    left = {}
    for k in layout[0]:
        o = off[("L", k)]
        n, m = t.h_left.m(*k), s.h_left.m(*k)
        left[k] = vec[o:o + n * m].reshape(n, m)
    right = {}
    for k in layout[1]:
        o = off[("R", k)]
        n, m = t.h_right.m(*k), s.h_right.m(*k)
        right[k] = vec[o:o + n * m].reshape(n, m)
    return Intertwiner(left, right)


def _nullspace(a: np.ndarray, tol: float) -> np.ndarray:
    n = a.shape[1]
    if n == 0:
        return np.zeros((0, 0))
    if a.shape[0] == 0:
        return np.eye(n, dtype=complex)
    if a.shape[0] > n:
        a = sla.qr(a, mode="r")[0][:n]
    _, sv, vh = np.linalg.svd(a, full_matrices=True)
    scale = max(1.0, float(sv.max(initial=0.0)))
    rank = int(np.sum(sv > max(tol, 1e-12) * 10 * scale))
    return vh[rank:].conj().T


def hom_space(W: Connection, W2: Connection, tol: float = DEFAULT_TOL) -> list:
    """Orthonormal basis of intertwiners ``Y`` with ``(Y_L (x) 1) U_W = U_W2 (1 (x) Y_R)``."""
    W, W2 = align(W, W2)
    a, layout, off = _hom_system(W, W2)
    ns = _nullspace(a, tol)
    return [_unpack(ns[:, j], W, W2, layout, off) for j in range(ns.shape[1])]


def hom_dim(W: Connection, W2: Connection, tol: float = DEFAULT_TOL) -> int:
    return len(hom_space(W, W2, tol))


def _blocks_square(Y: Intertwiner) -> bool:
    return all(m.shape[0] == m.shape[1] for m in list(Y.left.values()) + list(Y.right.values()))


def _polar(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def equivalent(W: Connection, W2: Connection, tol: float = DEFAULT_TOL, seed: int = 0):
    """Unitary gauge family carrying ``W`` to ``W2``, or ``None``.

    The polar part of a seeded random element of ``Hom(W, W2)`` is tested.
    The returned family has a ``residual`` attribute (largest cell error).
    """
    try:
        Wa, W2a = align(W, W2)
    except ShapeMismatch:
        return None
    s, t = Wa.shape, W2a.shape
    if not (s.h_left.same_as(t.h_left) and s.h_right.same_as(t.h_right)):
        return None
    basis = hom_space(Wa, W2a, tol)
    if not basis:
        return None
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    Y = basis[0].scale(coef[0])
    for c, B in zip(coef[1:], basis[1:]):
        Y = Y + B.scale(c)
    if not _blocks_square(Y):
        return None
    U = Intertwiner({k: _polar(v) for k, v in Y.left.items()}, {k: _polar(v) for k, v in Y.right.items()})
    # Complete blocks that have no equations (all present because multiplicities agree).
    for (x0, x1) in [(a, b) for a in s.V0 for b in s.V1 if s.h_left.m(a, b)]:
        U.left.setdefault((x0, x1), np.eye(s.h_left.m(x0, x1)))
    for (x2, x3) in [(a, b) for a in s.V2 for b in s.V3 if s.h_right.m(a, b)]:
        U.right.setdefault((x2, x3), np.eye(s.h_right.m(x2, x3)))
    moved = apply_intertwiner(Wa, U.left, U.right, t)
    res = 0.0
    for k, blk in W2a.blocks.items():
        if blk.size:
            res = max(res, float(np.abs(moved.blocks[k] - blk).max()))
    if res > max(1e3 * tol, 1e-8):
        return None
    g = U.as_gauge()
    g.residual = res
    return g


# -- decomposition ----------------------------------------------------------------

class DecompositionError(ArithmeticError):
    pass


def _trim(W: Connection) -> Connection:
    s = W.shape
    V0 = [v for v in s.V0 if any(s.h_left.m(v, x) for x in s.V1)]
    V1 = [v for v in s.V1 if any(s.h_left.m(x, v) for x in s.V0)]
    V2 = [v for v in s.V2 if any(s.h_right.m(v, x) for x in s.V3)]
    V3 = [v for v in s.V3 if any(s.h_right.m(x, v) for x in s.V2)]
    if (len(V0), len(V1), len(V2), len(V3)) == (len(s.V0), len(s.V1), len(s.V2), len(s.V3)):
        return W
    shape = ConnectionShape(
        tuple(V0), tuple(V1), tuple(V2), tuple(V3),
        s.g_top.restrict(V0, V3), s.h_left.restrict(V0, V1), s.g_bot.restrict(V2, V1), s.h_right.restrict(V2, V3),
        {k: {v: s.weights[k][v] for v in vs} for k, vs in (("V0", V0), ("V1", V1), ("V2", V2), ("V3", V3))},
    )
    return Connection(shape, {k: b for k, b in W.blocks.items() if k in set(shape.corners())})


def _cut(W: Connection, VL: dict, VR: dict) -> Connection:
    s = W.shape
    shape = make_shape(s.V0, s.V1, s.V2, s.V3, top=s.g_top.m,
                       left=lambda a, b: VL[(a, b)].shape[1] if (a, b) in VL else 0,
                       bot=lambda x1, x2: s.g_bot.m(x2, x1),
                       right=lambda x3, x2: VR[(x2, x3)].shape[1] if (x2, x3) in VR else 0,
                       weights=s.weights)
    left = {k: v.conj().T for k, v in VL.items()}
    right = {k: v.conj().T for k, v in VR.items()}
    return _trim(apply_intertwiner(W, left, right, shape))


def canonical_gauge(W: Connection, tol: float = 1e-12) -> Connection:
    """Deterministic phase gauge: scanning cells in canonical order, the first
    non-negligible value seen for each still-free vertical edge is made real positive."""
    lph: dict = {}
    rph: dict = {}
    for key, blk in W.blocks.items():
        x0, x1, x2, x3 = key
        for l, b, t, r in np.ndindex(blk.shape):
            v = blk[l, b, t, r]
            if abs(v) <= tol:
                continue
            le, re_ = (x0, x1, l), (x2, x3, r)
            cur = v * lph.get(le, 1) * np.conj(rph.get(re_, 1))
            if le not in lph:
                # pin the right edge too, so this cell stays positive
                rph.setdefault(re_, 1)
                lph[le] = abs(cur) / cur
            elif re_ not in rph:
                rph[re_] = np.conj(abs(cur) / cur)
    s = W.shape
    left = {(a, b): np.diag([lph.get((a, b, i), 1) for i in range(s.h_left.m(a, b))])
            for a in s.V0 for b in s.V1 if s.h_left.m(a, b)}
    right = {(a, b): np.diag([rph.get((a, b, i), 1) for i in range(s.h_right.m(a, b))])
             for a in s.V2 for b in s.V3 if s.h_right.m(a, b)}
    return apply_intertwiner(W, left, right, s)


def _signature(W: Connection):
    s = W.shape
    dims = tuple(int(s.h_left.mult.sum()) for _ in (0,)) + (int(s.h_right.mult.sum()),)
    vals = tuple(np.round(np.concatenate([b.ravel() for b in W.blocks.values()] + [np.zeros(0)]), 9).tolist())
    return (repr((s.V0, s.V1, s.V2, s.V3)), dims, tuple((round(v.real, 9), round(v.imag, 9)) for v in vals))


def decompose(W: Connection, seed: int = 0, tol: float = DEFAULT_TOL) -> list:
    """Irreducible components with multiplicities, ``[(component, multiplicity), ...]``.

    A seeded random self-adjoint element of ``End(W)`` is diagonalized
    blockwise; each eigenvalue cluster is a minimal projection, whose range
    cuts out a component by isometries.  Equivalent components are grouped.
    """
    basis = hom_space(W, W, tol)
    if not basis:
        raise DecompositionError("End(W) is zero")
    _check_algebra(W, basis, tol)
    if len(basis) == 1:
        return [(canonical_gauge(_trim(W)), 1)]
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=len(basis))
    Z = basis[0].scale(coef[0])
    for c, B in zip(coef[1:], basis[1:]):
        Z = Z + B.scale(c)
    H = Z + Z.adjoint()
    s = W.shape
    eig: dict = {}
    allvals = []
    for side, blocks in (("L", H.left), ("R", H.right)):
        for k, m in blocks.items():
            w, v = np.linalg.eigh((m + m.conj().T) / 2)
            eig[(side, k)] = (w, v)
            allvals.extend(w.tolist())
    allvals.sort()
    clusters = []
    gap = max(1e-6, 1e3 * tol)
    for x in allvals:
        if clusters and x - clusters[-1][-1] < gap:
            clusters[-1].append(x)
        else:
            clusters.append([x])
    comps = []
    for cl in clusters:
        lo, hi = cl[0] - gap / 2, cl[-1] + gap / 2
        VL, VR = {}, {}
        for (side, k), (w, v) in eig.items():
            sel = (w >= lo) & (w <= hi)
            if sel.any():
                (VL if side == "L" else VR)[k] = v[:, sel]
        # blocks without equations are untouched by End(W): keep them whole
        comp = _cut(W, VL, VR)
        if comp.n_cells == 0:
            continue
        if hom_dim(comp, comp, tol) != 1:
            comps.extend(c for c, m in decompose(comp, seed + 1, tol) for _ in range(m))
        else:
            comps.append(comp)
    del s
    groups: list = []
    for c in comps:
        for g in groups:
            if equivalent(g[0], c, tol) is not None:
                g[1] += 1
                break
        else:
            groups.append([c, 1])
    out = [(canonical_gauge(c), m) for c, m in groups]
    out.sort(key=lambda cm: _signature(cm[0]))
    return out


def _check_algebra(W, basis, tol):
    if len(basis) < 2:
        return
    lk = sorted(basis[0].left, key=repr)
    rk = sorted(basis[0].right, key=repr)
    mat = np.stack([b.vector((lk, rk)) for b in basis], axis=1)
    q, _ = np.linalg.qr(mat)
    prod = (basis[0] @ basis[-1]).vector((lk, rk))
    res = np.linalg.norm(prod - q @ (q.conj().T @ prod))
    if res > max(1e-6, 1e3 * tol):
        raise DecompositionError(f"End(W) not closed under product (residual {res:.3g}); input not bi-unitary?")


# -- fusion tables ----------------------------------------------------------------

@dataclass
class FusionTable:
    labels: list
    N: np.ndarray  # N[i, j, k] = multiplicity of k in compose(i, j)
    objects: list

    def to_doc(self) -> dict:
        return {"labels": [str(x) for x in self.labels], "N": self.N.astype(int).tolist()}

    def to_dot(self, generator: int) -> str:
        lines = [f"digraph fusion_{generator} {{"]
        n = len(self.labels)
        for i in range(n):
            for k in range(n):
                for _ in range(int(self.N[i, generator, k])):
                    lines.append(f'  "{self.labels[i]}" -> "{self.labels[k]}";')
        lines.append("}")
        return "\n".join(lines)


class ClosureCapExceeded(RuntimeError):
    pass


def _find(objs, W, tol):
    for i, o in enumerate(objs):
        if equivalent(o, W, tol) is not None:
            return i
    return None


def fusion_table(gens, identity: Connection, closure_cap: int = 64, tol: float = DEFAULT_TOL,
                 labels=None, seed: int = 0) -> FusionTable:
    """Close ``gens`` under graded composition and decomposition; tabulate multiplicities.

    Objects are connections on the component of ``identity``'s vertices;
    ``N[i][j][k] = dim Hom(compose(i, j), k)``.  Labels default to
    ``0`` for the identity, then the generators in order, then new objects as
    ``x<n>``.
    """
    objs = [identity]
    names = ["0" if labels is None else str(labels[0])]

    def add(W, name):
        i = _find(objs, W, tol)
        if i is None:
            if len(objs) >= closure_cap:
                raise ClosureCapExceeded(f"closure cap {closure_cap} exceeded")
            objs.append(W)
            names.append(name)
            return len(objs) - 1
        return i

    gen_idx = []
    for gi, g in enumerate(gens):
        g = _restrict_like(g, identity)
        parts = decompose(g, seed, tol)
        if len(parts) != 1 or parts[0][1] != 1:
            raise DecompositionError(f"generator {gi} is not irreducible")
        name = str(gi + 1) if labels is None else str(labels[gi + 1])
        gen_idx.append(add(parts[0][0], name))
    todo = list(range(len(objs)))
    while todo:
        i = todo.pop(0)
        for j in gen_idx:
            for comp, _ in decompose(compose_graded(objs[i], objs[j]), seed, tol):
                before = len(objs)
                add(comp, f"x{len(objs)}")
                if len(objs) > before:
                    todo.append(len(objs) - 1)
    n = len(objs)
    N = np.zeros((n, n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            prod = compose_graded(objs[i], objs[j])
            for k in range(n):
                try:
                    N[i, j, k] = hom_dim(prod, objs[k], tol)
                except ShapeMismatch:
                    N[i, j, k] = 0
    return FusionTable(names, N, objs)


def _restrict_like(W: Connection, ref: Connection) -> Connection:
    """Restrict a graded connection to the components whose ``V0`` lies in ``ref``'s ``V0``."""
    want = set(ref.shape.V0)
    comps = [c for c in cell_components(W) if set(c[0]) & want]
    if len(comps) == len(cell_components(W)):
        return W
    sets = [tuple(v for c in comps for v in c[i]) for i in range(4)]
    return restrict_connection(W, *sets)


def is_biunitary(W: Connection, tol: float = DEFAULT_TOL) -> bool:
    return verify_biunitarity(W, tol)["pass"]
