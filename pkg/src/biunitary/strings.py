"""String algebras, commuting squares, the triple tower and an independent W4 extraction.

A path algebra is the algebra of pairs of paths with a common endpoint over
a sequence of steps, each step walking one bipartite graph forwards (even to
odd) or backwards.  Elements are stored blockwise, one square matrix per end
vertex.

Inclusions append one step and then move the new step to its place with
connection cells.  A cell with top edge ``t`` followed by right edge ``r``
is rewritten as left edge ``l`` followed by bottom edge ``b`` with
coefficient ``W[x0, x1, x2, x3][l, b, t, r]``; the resulting map on path
spaces is unitary and the inclusion is ``x -> U (x (x) 1) U*``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Mapping

import numpy as np

from .catops import equivalent
from .connections import Connection, ConnectionError_, ConnectionShape, conjugate, dual, make_shape

DEFAULT_TOL = 1e-9


class InclusionError(ValueError):
    """A map given as an inclusion is not a unital *-homomorphism."""


class TowerError(RuntimeError):
    """The triple tower cannot be built consistently."""


class ContainmentError(ArithmeticError):
    """The transported algebra does not land in the expected subalgebra."""


# -- path algebras ----------------------------------------------------------------

@dataclass(frozen=True)
class Step:
    """One step of a path: walk ``graph`` forwards (even to odd) or backwards."""

    graph: object
    reverse: bool
    weights: Mapping = field(compare=False, hash=False)
    label: str = ""

    def moves(self, v):
        g = self.graph
        if self.reverse:
            return [(w, g.m(w, v)) for w in g.even if g.m(w, v)]
        return [(w, g.m(v, w)) for w in g.odd if g.m(v, w)]


def _extend(paths, step: Step):
    out = []
    for p in paths:
        for w, n in step.moves(p[-1]):
            for e in range(n):
                out.append(p + (e, w))
    return out


class PathAlgebra:
    """Algebra of path pairs ``(p, q)`` with ``end(p) = end(q)`` from a fixed start vertex.

    The normalized trace gives the matrix unit ``e_pp`` the weight of the end
    vertex of ``p`` divided by the total weight of all paths.
    """

    def __init__(self, start, steps):
        self.start = start
        self.steps = tuple(steps)
        paths = [(start,)]
        for s in self.steps:
            paths = _extend(paths, s)
        ends: dict = {}
        for p in paths:
            ends.setdefault(p[-1], []).append(p)
        self.ends = tuple(sorted(ends, key=repr))
        self.blocks = {v: tuple(ends[v]) for v in self.ends}
        self.index = {v: {p: i for i, p in enumerate(self.blocks[v])} for v in self.ends}
        wts = self.steps[-1].weights if self.steps else {start: 1.0}
        total = sum(wts[v] * len(self.blocks[v]) for v in self.ends)
        self.weight = {v: wts[v] / total for v in self.ends}

    def __repr__(self):
        return f"PathAlgebra(len={len(self.steps)}, dims={self.dims})"

    @property
    def dims(self) -> dict:
        return {v: len(b) for v, b in self.blocks.items()}

    @property
    def dim(self) -> int:
        return sum(n * n for n in self.dims.values())

    @property
    def paths(self) -> list:
        return [p for v in self.ends for p in self.blocks[v]]

    def zero(self) -> dict:
        return {v: np.zeros((n, n), dtype=complex) for v, n in self.dims.items()}

    def one(self) -> dict:
        return {v: np.eye(n, dtype=complex) for v, n in self.dims.items()}

    def unit(self, p, q) -> dict:
        if p[-1] != q[-1]:
            raise ValueError("matrix unit paths must share their endpoint")
        x = self.zero()
        x[p[-1]][self.index[p[-1]][p], self.index[q[-1]][q]] = 1.0
        return x

    def matrix_units(self):
        for v in self.ends:
            for p in self.blocks[v]:
                for q in self.blocks[v]:
                    yield p, q

    def random(self, rng) -> dict:
        return {v: rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for v, n in self.dims.items()}

    def trace(self, x) -> complex:
        return complex(sum(self.weight[v] * np.trace(x[v]) for v in self.ends))

    def vec(self, x) -> np.ndarray:
        """Coordinates in the trace-orthonormal matrix-unit basis."""
        return np.concatenate([np.sqrt(self.weight[v]) * x[v].ravel() for v in self.ends] + [np.zeros(0)])

    @staticmethod
    def mul(x, y) -> dict:
        return {v: x[v] @ y[v] for v in x}

    def extended(self, step: Step) -> "PathAlgebra":
        return PathAlgebra(self.start, self.steps + (step,))


# -- cell moves on path vectors -------------------------------------------------------

def _apply(F: Connection, vec: dict, pos: int, adjoint: bool = False) -> dict:
    """Rewrite steps ``pos, pos + 1`` of every path with the cells of ``F``.

    Forward: (top, right) -> (left, bottom).  ``adjoint`` applies the inverse
    move (left, bottom) -> (top, right) with conjugated coefficients.
    """
    out: dict = {}
    s = F.shape
    for path, c in vec.items():
        v = list(path)
        x0, a, xm, b, x2 = v[2 * pos], v[2 * pos + 1], v[2 * pos + 2], v[2 * pos + 3], v[2 * pos + 4]
        others = s.V3 if adjoint else s.V1
        for y in others:
            key = (x0, xm, x2, y) if adjoint else (x0, y, x2, xm)
            blk = F.blocks.get(key)
            if blk is None:
                continue
            col = np.conj(blk[a, b, :, :]) if adjoint else blk[:, :, a, b]
            for i, j in zip(*np.nonzero(col)):
                nv = v[:]
                nv[2 * pos + 1], nv[2 * pos + 2], nv[2 * pos + 3] = int(i), y, int(j)
                k = tuple(nv)
                out[k] = out.get(k, 0) + c * col[i, j]
    return out


def _run(ops, vec: dict, adjoint: bool = False) -> dict:
    if adjoint:
        for F, pos in reversed(ops):
            vec = _apply(F, vec, pos, adjoint=True)
    else:
        for F, pos in ops:
            vec = _apply(F, vec, pos)
    return vec


def _dense(ops, src: PathAlgebra, dst: PathAlgebra, tol: float = 1e-12) -> dict:
    """Per-endpoint matrices of the path-space map given by ``ops`` (``dst`` rows, ``src`` columns)."""
    out = {}
    for v in src.ends:
        if v not in dst.index:
            raise ConnectionError_(f"endpoint {v!r} missing from the target")
        m = np.zeros((len(dst.blocks[v]), len(src.blocks[v])), dtype=complex)
        for j, p in enumerate(src.blocks[v]):
            for q, c in _run(ops, {p: 1.0}).items():
                i = dst.index[v].get(q)
                if i is None:
                    if abs(c) > tol:
                        raise ConnectionError_(f"move leaves the target path space at {q!r}")
                    continue
                m[i, j] += c
        out[v] = m
    return out


@dataclass
class Inclusion:
    """``x -> U (x (x) 1) U*`` from ``src`` into ``dst``; ``U`` is given by cell moves.

    ``step`` is the appended step and ``ops`` the moves (``(connection,
    position)`` pairs) from ``src + step`` onto ``dst``'s path order.
    """

    src: PathAlgebra
    dst: PathAlgebra
    step: Step
    ops: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self._raw = self.src.extended(self.step)
        self._U = _dense(self.ops, self._raw, self.dst)

    @property
    def unitary(self) -> dict:
        return self._U

    def __call__(self, x) -> dict:
        y = {}
        raw = self._raw
        for v in self.dst.ends:
            X = np.zeros((len(raw.blocks.get(v, ())),) * 2, dtype=complex)
            for i, p in enumerate(raw.blocks.get(v, ())):
                u = p[-3]
                pi = self.src.index[u][p[:-2]]
                for j, q in enumerate(raw.blocks[v]):
                    if q[-3] == u and q[-2] == p[-2]:
                        X[i, j] = x[u][pi, self.src.index[u][q[:-2]]]
            U = self._U.get(v)
            y[v] = U @ X @ U.conj().T if U is not None else np.zeros_like(X)
        return y

    def matrix(self) -> np.ndarray:
        """Matrix of the map in trace-orthonormal matrix-unit coordinates (unnormalized source)."""
        cols = [self.dst.vec(self(self.src.unit(p, q))) for p, q in self.src.matrix_units()]
        return np.stack(cols, axis=1) if cols else np.zeros((self.dst.dim, 0))

    def defect(self, seed: int = 0) -> float:
        """Largest failure of unitality, multiplicativity, *-preservation and unitarity."""
        rng = np.random.default_rng(seed)
        d = 0.0
        for v, U in self._U.items():
            d = max(d, float(np.abs(U.conj().T @ U - np.eye(U.shape[1])).max(initial=0.0)))
        one = self(self.src.one())
        d = max(d, max((float(np.abs(one[v] - np.eye(len(one[v]))).max(initial=0.0)) for v in one), default=0.0))
        x, y = self.src.random(rng), self.src.random(rng)
        fx, fy, fxy = self(x), self(y), self(PathAlgebra.mul(x, y))
        for v in self.dst.ends:
            d = max(d, float(np.abs(fx[v] @ fy[v] - fxy[v]).max(initial=0.0)))
        xs = {v: b.conj().T for v, b in x.items()}
        fxs = self(xs)
        for v in self.dst.ends:
            d = max(d, float(np.abs(fxs[v] - fx[v].conj().T).max(initial=0.0)))
        return d

    def trace_defect(self, seed: int = 0) -> float:
        x = self.src.random(np.random.default_rng(seed))
        return abs(self.dst.trace(self(x)) - self.src.trace(x))


def compose_inclusions(first: Inclusion, second: Inclusion):
    """The map ``second(first(x))`` as a callable."""
    return lambda x: second(first(x))


# -- commuting squares --------------------------------------------------------------

@dataclass
class SquareReport:
    residual: float
    nondegenerate: bool
    commutes: float

    def to_doc(self) -> dict:
        return {"residual": self.residual, "nondegenerate": self.nondegenerate, "commutes": self.commutes}


def _unvec(X: PathAlgebra, v: np.ndarray) -> dict:
    out, o = {}, 0
    for e in X.ends:
        n = len(X.blocks[e])
        out[e] = v[o:o + n * n].reshape(n, n) / np.sqrt(X.weight[e])
        o += n * n
    return out


def _projection(cols: np.ndarray, tol: float) -> np.ndarray:
    if cols.size == 0:
        return np.zeros((cols.shape[0], cols.shape[0]), dtype=complex)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    q = u[:, s > tol * max(1.0, s.max(initial=0.0))]
    return q @ q.conj().T


def verify_commuting_square(A: PathAlgebra, B: PathAlgebra, C: PathAlgebra, D: PathAlgebra,
                            AB, AC, BD, CD, tol: float = DEFAULT_TOL, seed: int = 0) -> SquareReport:
    """Check ``E_B E_C = E_A`` for the square ``A ⊂ B, C ⊂ D``.

    The four maps are inclusions (callables on blockwise elements; instances
    of :class:`Inclusion` are checked to be unital *-homomorphisms).  The
    expectations are trace-orthogonal projections in ``L2(D, tr)``.
    ``commutes`` is the disagreement of the two routes from ``A`` to ``D``;
    ``nondegenerate`` reports whether products ``bc`` span ``D`` (tested on
    seeded generic products).
    """
    for f in (AB, AC, BD, CD):
        if isinstance(f, Inclusion) and f.defect() > max(1e-8, tol):
            raise InclusionError("map is not a unital *-homomorphism")
    units = {X: list(X.matrix_units()) for X in (A, B, C)}
    imB = [BD(B.unit(p, q)) for p, q in units[B]]
    imC = [CD(C.unit(p, q)) for p, q in units[C]]
    imA1 = [BD(AB(A.unit(p, q))) for p, q in units[A]]
    imA2 = [CD(AC(A.unit(p, q))) for p, q in units[A]]
    commutes = max((max(float(np.abs(x[v] - y[v]).max(initial=0.0)) for v in D.ends) for x, y in zip(imA1, imA2)),
                   default=0.0)
    if commutes > max(1e-8, tol):
        raise InclusionError(f"the two routes A -> D disagree by {commutes:.3g}")

    def cols(ims):
        return np.stack([D.vec(x) for x in ims], axis=1) if ims else np.zeros((D.dim, 0))

    PB, PC, PA = _projection(cols(imB), 1e-10), _projection(cols(imC), 1e-10), _projection(cols(imA1), 1e-10)
    residual = float(np.linalg.norm(PB @ PC - PA, 2)) if D.dim else 0.0
    # products of generic elements span the same space as all products bc
    rng = np.random.default_rng(seed)
    prods = []
    for _ in range(D.dim + 8):
        b = sum(rng.normal() * x_ for x_ in cols(imB).T) if imB else np.zeros(D.dim)
        c = sum(rng.normal() * x_ for x_ in cols(imC).T) if imC else np.zeros(D.dim)
        prods.append(D.vec(PathAlgebra.mul(_unvec(D, b), _unvec(D, c))))
    rank = np.linalg.matrix_rank(np.stack(prods, axis=1), tol=1e-8) if prods else 0
    return SquareReport(residual, bool(rank == D.dim), commutes)


def connection_square(W: Connection, basepoint=None, prefix: int = 4):
    """The size-one square of ``W`` after a back-and-forth prefix along the top graph.

    Returns ``(A, B, C, D, AB, AC, BD, CD)``: ``B`` adds a top edge, ``C`` a
    left edge, ``D`` a left edge and a bottom edge, and ``B`` enters ``D``
    through a right edge moved across ``W``.
    """
    s = W.shape
    star = basepoint if basepoint is not None else s.V0[0]
    if star not in s.V0:
        raise ConnectionError_(f"basepoint {star!r} is not a top-left vertex")
    if prefix % 2:
        raise ValueError("prefix must be even")
    w = s.weights
    fwd = Step(s.g_top, False, w["V3"], "top")
    back = Step(s.g_top, True, w["V0"], "top*")
    A = PathAlgebra(star, [fwd, back] * (prefix // 2))
    left = Step(s.h_left, False, w["V1"], "left")
    bot = Step(s.g_bot, True, w["V2"], "bot")
    right = Step(s.h_right, True, w["V2"], "right")
    B = A.extended(fwd)
    C = A.extended(left)
    D = C.extended(bot)
    n = len(A.steps)
    AB = Inclusion(A, B, fwd)
    AC = Inclusion(A, C, left)
    CD = Inclusion(C, D, bot)
    BD = Inclusion(B, D, right, [(W, n)], ["W"])
    return A, B, C, D, AB, AC, BD, CD


def perturb_connection(W: Connection, strength: float = 0.5, seed: int = 0) -> Connection:
    """Multiply each ``(x0, x2)`` unitarity matrix by a random unitary on the (top, right) side.

    The result keeps the first unitarity condition and in general loses the
    renormalized one.
    """
    rng = np.random.default_rng(seed)
    s = W.shape
    blocks = {k: b.copy() for k, b in W.blocks.items()}
    for x0 in s.V0:
        for x2 in s.V2:
            u, rows, cols = W.unitarity_matrix(x0, x2)
            if not cols:
                continue
            h = rng.normal(size=(len(cols),) * 2) + 1j * rng.normal(size=(len(cols),) * 2)
            h = (h + h.conj().T) / 2
            ev, vec = np.linalg.eigh(h)
            g = vec @ np.diag(np.exp(1j * strength * ev)) @ vec.conj().T
            u2 = u @ g
            for i, (x1, l, b) in enumerate(rows):
                for j, (x3, t, r) in enumerate(cols):
                    blocks[(x0, x1, x2, x3)][l, b, t, r] = u2[i, j]
    return Connection(s, blocks)


# -- the triple tower ---------------------------------------------------------------

@dataclass(frozen=True)
class Letter:
    """A step of the tower word: family ``l`` (lambda), ``m`` (mu) or ``i`` (iota).

    ``idx`` counts earlier letters of the same family (odd means the
    conjugate object); ``side`` is ``"D"`` on the sector graph and ``"M"``
    on the module graph (unused for ``i``).
    """

    fam: str
    idx: int
    side: str = "D"


def _variant(cache, name, W, vert_odd: bool, hor_odd: bool):
    key = (name, vert_odd, hor_odd)
    if key not in cache:
        F = W
        if vert_odd:
            F = dual(F)
        if hor_odd:
            F = conjugate(F)
        cache[key] = F
    return cache[key]


class _Alphabet:
    """Steps and crossing cells for the letters of a tower."""

    def __init__(self, w1, w2, w3, w4=None, lam=None, mu=None):
        self.W = {"W1": w1, "W2": w2, "W3": w3}
        if w4 is not None:
            self.W["W4"] = w4
        self.names = {"W1": f"W1({lam},{mu})", "W2": f"W2({mu})", "W3": f"W3({lam})", "W4": f"W4({lam},{mu})"}
        self.cache: dict = {}
        s1, s2, s3 = w1.shape, w2.shape, w3.shape
        self.wD = dict(s1.weights["V0"])
        self.wM = dict(s2.weights["V1"])
        self.graphs = {
            ("m", "D"): (s1.g_top, False), ("l", "D"): (s1.h_left, False), ("i", ""): (s2.h_left, False),
            ("m", "M"): (s2.g_bot, True), ("l", "M"): (s3.g_bot, True),
        }
        if w4 is not None:
            s4 = w4.shape
            for a, b, ys in ((s4.g_top, s2.g_bot, s4.V3), (s4.h_left, s3.g_bot, s4.V1)):
                if any(a.m(x, y) != b.m(y, x) for x in s4.V0 for y in ys):
                    raise TowerError("W4 graphs do not match the module graphs of W2 and W3")

    def step(self, L: Letter) -> Step:
        g, rev = self.graphs[(L.fam, "" if L.fam == "i" else L.side)]
        odd = L.idx % 2 == 1
        if L.fam == "i":
            arrive = self.wD if odd else self.wM
        else:
            arrive = self.wM if L.side == "M" else self.wD
        return Step(g, rev ^ odd, arrive, f"{L.fam}{L.idx}{L.side if L.fam != 'i' else ''}")

    def cell(self, vert: Letter, hor: Letter):
        """Connection moving ``vert`` left across ``hor``, and its label."""
        if vert.fam == "l" and hor.fam == "m":
            name = "W1" if hor.side == "D" else "W4"
        elif vert.fam == "i" and hor.fam == "m":
            name = "W2"
        elif vert.fam == "i" and hor.fam == "l":
            name = "W3"
        else:
            raise TowerError(f"no cell moves {vert.fam} across {hor.fam}")
        if name not in self.W:
            raise TowerError(f"{name} is required here but was not supplied")
        F = _variant(self.cache, name, self.W[name], vert.idx % 2 == 1, hor.idx % 2 == 1)
        tag = self.names[name] + ("*" if vert.idx % 2 else "") + ("'" if hor.idx % 2 else "")
        return F, tag


def canonical_word(J: int, K: int, L: int) -> list:
    side = "M" if L % 2 else "D"
    return ([Letter("i", i) for i in range(L)] + [Letter("l", j, side) for j in range(J)]
            + [Letter("m", k, side) for k in range(K)])


def _push(word: list, new: Letter, alpha: _Alphabet):
    """Moves that carry ``new`` (appended to ``word``) to its canonical place."""
    word = list(word) + [new]
    ops, tags = [], []
    pos = len(word) - 1
    order = {"i": 0, "l": 1, "m": 2}
    while pos > 0 and order[word[pos - 1].fam] > order[new.fam]:
        hor = word[pos - 1]
        F, tag = alpha.cell(new, hor)
        ops.append((F, pos - 1))
        tags.append(tag)
        if new.fam == "i":
            hor = Letter(hor.fam, hor.idx, "M" if hor.side == "D" else "D")
        word[pos - 1], word[pos] = new, hor
        pos -= 1
    return word, ops, tags


@dataclass
class TowerCell:
    """Cell ``(j, k, l)``: ``j`` lambda letters, ``k`` mu letters, ``l`` iota letters."""

    indices: tuple
    word: list
    algebra: PathAlgebra
    embeddings: dict = field(default_factory=dict)  # axis -> Inclusion

    def to_doc(self) -> dict:
        return {
            "indices": list(self.indices),
            "dims": {str(v): n for v, n in self.algebra.dims.items()},
            "embeddings": {a: inc.labels for a, inc in self.embeddings.items()},
        }


@dataclass
class Tower:
    cells: dict
    cube_residuals: dict
    embedding_residual: float
    trace_residual: float

    @property
    def max_cube_residual(self) -> float:
        return max(self.cube_residuals.values(), default=0.0)

    def to_doc(self) -> dict:
        return {
            "cells": [c.to_doc() for _, c in sorted(self.cells.items())],
            "cube_residuals": [{"cell": list(k[0]), "axes": k[1], "residual": v}
                               for k, v in sorted(self.cube_residuals.items())],
            "embedding_residual": self.embedding_residual,
            "trace_residual": self.trace_residual,
        }


_AXES = {"j": (1, 0, 0), "k": (0, 1, 0), "l": (0, 0, 1)}
_FAM = {"j": "l", "k": "m", "l": "i"}


def _new_letter(idx: tuple, axis: str) -> Letter:
    J, K, L = idx
    if axis == "j":
        return Letter("l", J, "M" if L % 2 else "D")
    if axis == "k":
        return Letter("m", K, "M" if L % 2 else "D")
    return Letter("i", L)


def _route(idx, axes, alpha: _Alphabet):
    """Raw word and moves for appending letters along ``axes`` one after another."""
    word = canonical_word(*idx)
    raw = list(word)
    ops: list = []
    cur = tuple(idx)
    for a in axes:
        new = _new_letter(cur, a)
        raw.append(new)
        word, o, _ = _push(word, new, alpha)
        ops.extend(o)
        cur = tuple(x + y for x, y in zip(cur, _AXES[a]))
    return raw, word, ops


def _locality(M: dict, src: PathAlgebra, dst: PathAlgebra, cut: int) -> float:
    """Distance of ``M`` from ``1 (x) Y``: zero across different prefixes, prefix-independent."""
    res = 0.0
    for v, m in M.items():
        rows, cols = dst.blocks[v], src.blocks[v]
        ref: dict = {}
        for j, q in enumerate(cols):
            pre_q, suf_q = q[:cut], q[cut - 1:]
            for i, p in enumerate(rows):
                val = m[i, j]
                if p[:cut] != pre_q:
                    res = max(res, abs(val))
                    continue
                key = (suf_q, p[cut - 1:])
                if key in ref:
                    res = max(res, abs(val - ref[key]))
                else:
                    ref[key] = val
    return float(res)


def _algebra(word, alpha: _Alphabet, start):
    return PathAlgebra(start, [alpha.step(L) for L in word])


def _alphabet(m, lam: int, mu: int, chirality: str = "+", with_w4: bool = True):
    from .alpha import _module, build_w1_model, build_w2, build_w3, build_w4

    m = _module(m)
    w1 = build_w1_model(m.k, lam, mu)
    w2 = build_w2(m, mu)
    w3 = build_w3(m, lam, chirality)
    w4 = build_w4(m, lam, mu, chirality) if with_w4 else None
    return m, _Alphabet(w1, w2, w3, w4, lam, mu)


def build_triple_tower(m, lam: int, mu: int, jmax: int, kmax: int, lmax: int, chirality: str = "+",
                       tol: float = DEFAULT_TOL, seed: int = 0) -> Tower:
    """Cells ``(j, k, l)`` up to the given sizes with all embeddings and cube checks.

    The cell word lists the iota letters first, then lambda letters, then mu
    letters; lambda and mu letters sit on the module graph when the number
    of iota letters is odd.  Embeddings append a letter and carry it to its
    place: lambda across mu with ``W1`` (or ``W4`` on the module graph), iota
    across mu with ``W2`` and across lambda with ``W3``, reflected for
    conjugate letters.  Each cube compares the two routes ``a`` then ``b``
    and ``b`` then ``a``: they must differ by a move on the two new letters
    only.

    Raises
    ------
    TowerError
        When the alpha-induced connections fail the IYBE check or a cube
        residual exceeds ``tol``.
    """
    from .alpha import check_iybe, iybe_quadruple

    m, alpha = _alphabet(m, lam, mu, chirality)
    r = check_iybe(*iybe_quadruple(m, lam, mu, chirality))
    if r > max(tol, 1e-8):
        raise TowerError(f"IYBE residual {r:.3g} too large")
    star = m.basepoint
    cells = {}
    for idx in product(range(jmax + 1), range(kmax + 1), range(lmax + 1)):
        word = canonical_word(*idx)
        cells[idx] = TowerCell(idx, word, _algebra(word, alpha, star))
    emb_res = 0.0
    tr_res = 0.0
    for idx, cell in cells.items():
        for a, d in _AXES.items():
            nxt = tuple(x + y for x, y in zip(idx, d))
            if nxt not in cells:
                continue
            new = _new_letter(idx, a)
            word, ops, tags = _push(cell.word, new, alpha)
            if word != cells[nxt].word:
                raise TowerError(f"embedding {idx} -> {nxt} does not reach the canonical word")
            inc = Inclusion(cell.algebra, cells[nxt].algebra, alpha.step(new), ops, tags)
            cell.embeddings[a] = inc
            emb_res = max(emb_res, inc.defect(seed))
            tr_res = max(tr_res, inc.trace_defect(seed))
    cubes = {}
    for idx in cells:
        for a, b in (("j", "k"), ("j", "l"), ("k", "l")):
            top = tuple(x + y + z for x, y, z in zip(idx, _AXES[a], _AXES[b]))
            if top not in cells:
                continue
            raw1, w1_, ops1 = _route(idx, (a, b), alpha)
            raw2, w2_, ops2 = _route(idx, (b, a), alpha)
            R1, R2 = _algebra(raw1, alpha, star), _algebra(raw2, alpha, star)
            V1 = _dense(ops1, R1, cells[top].algebra)
            V2 = _dense(ops2, R2, cells[top].algebra)
            M = {v: V2[v].conj().T @ V1[v] for v in V1}
            cubes[(idx, a + b)] = _locality(M, R1, R2, 2 * len(cells[idx].word) + 1)
    tower = Tower(cells, cubes, emb_res, tr_res)
    if tower.max_cube_residual > tol:
        raise TowerError(f"cube residual {tower.max_cube_residual:.3g} exceeds {tol:g}")
    return tower


# -- extraction of W4 ----------------------------------------------------------------

@dataclass
class OracleResult:
    connection: Connection
    size: int
    containment: float
    agreement: float

    def to_doc(self) -> dict:
        return {"size": self.size, "containment": self.containment, "agreement": self.agreement,
                "connection": self.connection.to_doc()}


def _undual(key, blk, w):
    y0, y1, y2, y3 = key
    f = np.sqrt(w[y0] * w[y2] / (w[y1] * w[y3]))
    return (y1, y0, y3, y2), f * np.conj(blk).transpose(0, 2, 1, 3)


def _extract_level(alpha, start, J, shape, want, got, tol):
    """Cells read off at size ``J`` from ``start``; returns ``(new, containment, agreement)``."""
    w = alpha.wM
    idx = (J, 1, 0)
    word = canonical_word(*idx)
    n = len(word)
    raw1, top_word, ops1 = _route(idx, ("j", "l"), alpha)
    R1 = _algebra(raw1, alpha, start)
    top = _algebra(top_word, alpha, start)
    V1 = _dense(ops1, R1, top)
    # W3 identification of the two new letters: (lambda, iota) -> (iota, lambda')
    lam_new, iota_new = raw1[n], raw1[n + 1]
    F3, _ = alpha.cell(iota_new, lam_new)
    raw2 = word + [iota_new, Letter("l", J, "M")]
    R2 = _algebra(raw2, alpha, start)
    Y = _dense([(F3, n)], R1, R2)
    # iota carried to the front: raw2 -> (canonical word of (J, 1, 1)) + lambda'
    w_i, ops_i, _ = _push(word, iota_new, alpha)
    mid = _algebra(w_i + [Letter("l", J, "M")], alpha, start)
    Ui = _dense(ops_i, R2, mid)
    S = {v: V1[v] @ Y[v].conj().T @ Ui[v].conj().T for v in V1 if v in Ui}
    cut = 2 * (len(w_i) - 1) + 1  # prefix up to the start of the mu letter
    containment = _locality(S, mid, top, cut)
    if containment > tol:
        raise ContainmentError(f"containment residual {containment:.3g} at size {J}")
    cells: dict = {}
    for v, mat in S.items():
        for jcol, q in enumerate(mid.blocks[v]):
            x0, t, x3, r, x2 = q[cut - 1:cut + 4]
            for irow, p in enumerate(top.blocks[v]):
                if p[:cut] != q[:cut]:
                    continue
                _, l, x1, b, _ = p[cut - 1:cut + 4]
                cells[(x0, x1, x2, x3, l, b, t, r)] = mat[irow, jcol]
    blocks: dict = {}
    for (x0, x1, x2, x3, l, b, t, r), val in cells.items():
        key = (x0, x1, x2, x3)
        if key not in blocks:
            if J % 2:
                dims = (shape.h_left.m(x1, x0), shape.g_bot.m(x3, x0), shape.g_top.m(x1, x2), shape.h_right.m(x3, x2))
            else:
                dims = shape.block_shape(*key)
            blocks[key] = np.zeros(dims, dtype=complex)
        blocks[key][l, b, t, r] = val
    new = 0
    agreement = 0.0
    for key, blk in blocks.items():
        if J % 2:
            key, blk = _undual(key, blk, w)
        if key not in want:
            raise ContainmentError(f"extracted cell at unexpected corners {key!r}")
        if key in got:
            agreement = max(agreement, float(np.abs(got[key] - blk).max()))
        else:
            got[key] = blk
            new += 1
    if agreement > max(tol, 1e-8):
        raise ContainmentError(f"sizes disagree by {agreement:.3g}")
    return new, containment, agreement


def extract_w4_oracle(m, lam: int = 1, mu: int = 1, chirality: str = "+", tol: float = DEFAULT_TOL,
                      max_size: int = 16, full: bool = False):
    """Read off the module-side crossing of lambda and mu from W1, W2 and W3 alone.

    For the cell ``(J, 1, 0)`` the two routes that add a lambda letter and an
    iota letter are compared.  Going lambda first uses only ``W1``, ``W2`` and
    ``W3``; going iota first ends with the unknown move of the new lambda
    letter across the module-side mu letter.  With the identification of the
    new lambda and iota letters fixed by ``W3``, that last move is
    ``V1 Y* (U (x) 1)*``; it must act on the last two letters only (the
    containment check) and its coefficients are the cells of the answer.

    ``J`` grows from 0 until every cell of the module-side shape has been
    seen and one more size reproduces the values; odd ``J`` produces the
    vertically reflected cells, which are reflected back.  Words from the
    basepoint only meet the graded component through it, so further start
    vertices of the sector graph are tried (each until two sizes in a row
    add nothing) until the whole shape is covered.

    Returns the connection, or an :class:`OracleResult` when ``full``.

    Raises
    ------
    ContainmentError
        If the extracted move mixes prefixes beyond ``tol``.
    """
    m, alpha = _alphabet(m, lam, mu, chirality, with_w4=False)
    star = m.basepoint
    w = alpha.wM
    s2, s3 = alpha.W["W2"].shape, alpha.W["W3"].shape
    V = tuple(s2.V1)
    shape = make_shape(
        V, V, V, V,
        top=lambda x0, x3: s2.g_bot.m(x3, x0),
        left=lambda x0, x1: s3.g_bot.m(x1, x0),
        bot=lambda x1, x2: s2.g_bot.m(x2, x1),
        right=lambda x3, x2: s3.g_bot.m(x2, x3),
        weights={k: dict(w) for k in ("V0", "V1", "V2", "V3")},
    )
    want = set(shape.corners())
    got: dict = {}
    containment = agreement = 0.0
    used = 0
    starts = [star] + [v for v in alpha.W["W2"].shape.V0 if v != star]
    for start in starts:
        quiet = 0
        for J in range(max_size + 1):
            new_here, c, a = _extract_level(alpha, start, J, shape, want, got, tol)
            containment, agreement = max(containment, c), max(agreement, a)
            used = max(used, J)
            quiet = quiet + 1 if new_here == 0 else 0
            if set(got) == want and quiet >= 1:
                W = Connection(shape, got)
                res = OracleResult(W, used, containment, agreement)
                return res if full else W
            if quiet >= 2:
                break
    raise TowerError(f"extraction did not stabilize within size {max_size}")


def oracle_agreement(m, lam: int = 1, mu: int = 1, chirality: str = "+", tol: float = 1e-8):
    """``(equivalent?, residual)`` between the extracted connection and the direct construction."""
    from .alpha import _module, build_w4

    m = _module(m)
    W = extract_w4_oracle(m, lam, mu, chirality)
    ref = build_w4(m, lam, mu, chirality)
    g = equivalent(W, ref, tol)
    if g is None:
        return False, float("inf")
    return True, float(getattr(g, "residual", 0.0))


__all__ = [
    "ContainmentError", "Inclusion", "InclusionError", "Letter", "OracleResult", "PathAlgebra", "SquareReport",
    "Step", "Tower", "TowerCell", "TowerError", "build_triple_tower", "canonical_word", "connection_square",
    "extract_w4_oracle", "oracle_agreement", "perturb_connection", "verify_commuting_square",
]
