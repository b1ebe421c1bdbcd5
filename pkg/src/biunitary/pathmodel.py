"""Temperley-Lieb calculus realized on paths of a weighted graph.

Every morphism ``X^n -> X^m`` of the Temperley-Lieb category at loop value
``beta = 2 cos(pi/h)`` acts on paths of a graph whose Perron-Frobenius
eigenvalue is ``beta`` (the graph planar algebra embedding).  A path of length
``n`` from ``a`` to ``b`` is an orthonormal basis vector of
``Hom(a X^n, b)``; caps, cups, Jones-Wenzl projectors and braid generators are
sparse matrices on these path spaces.

Conventions
-----------
* ``cap`` on strands ``(i, i+1)`` sends ``(.., x, y, x, ..)`` to
  ``sqrt(d_y / d_x) (.., x, ..)``; ``cup`` is its adjoint, ``e_i = cup cap``.
* The positive crossing is ``g_i = A + A^{-1} e_i`` with
  ``A = i exp(i pi / (2h))``, so that ``-A^2 - A^{-2} = beta``.
"""
from __future__ import annotations

import cmath
import math
from functools import lru_cache

import numpy as np
import scipy.sparse as sp


def qint(n: int, h: int) -> float:
    """Quantum integer ``[n]`` at ``q = exp(i pi / h)``."""
    return math.sin(n * math.pi / h) / math.sin(math.pi / h)


def kauffman_a(h: int, exponent_denominator: int | None = None) -> complex:
    """Kauffman parameter ``A = i exp(i pi / (2p))``, ``p = h`` by default."""
    p = h if exponent_denominator is None else exponent_denominator
    return 1j * cmath.exp(1j * math.pi / (2 * p))


class PathModel:
    """Path spaces of a finite simple undirected graph with positive weights.

    Parameters
    ----------
    vertices : sequence
        Vertex labels.
    edges : iterable of pairs
        Undirected edges (no multi-edges).
    weights : mapping
        Perron-Frobenius weights ``d_v``.
    h : int
        Coxeter number, ``beta = 2 cos(pi/h)``.
    """

    def __init__(self, vertices, edges, weights, h: int):
        self.vertices = tuple(vertices)
        self.h = int(h)
        self.beta = 2 * math.cos(math.pi / h)
        self.adj = {v: [] for v in self.vertices}
        for a, b in edges:
            self.adj[a].append(b)
            self.adj[b].append(a)
        order = {v: i for i, v in enumerate(self.vertices)}
        for v in self.adj:
            self.adj[v].sort(key=order.__getitem__)
        self.d = dict(weights)
        self.A = kauffman_a(h)
        self._paths: dict = {}
        self._ops: dict = {}

    # -- path enumeration ---------------------------------------------------
    def paths(self, n: int, start=None, end=None) -> tuple:
        """Paths with ``n`` edges as vertex tuples, lexicographic by vertex order."""
        key = (n, start, end)
        if key in self._paths:
            return self._paths[key]
        if end is not None:
            out = tuple(p for p in self.paths(n, start) if p[-1] == end)
        elif n == 0:
            starts = self.vertices if start is None else (start,)
            out = tuple((v,) for v in starts)
        else:
            out = tuple(p + (w,) for p in self.paths(n - 1, start) for w in self.adj[p[-1]])
        self._paths[key] = out
        return out

    def index(self, n: int, start=None, end=None) -> dict:
        key = ("idx", n, start, end)
        if key not in self._paths:
            self._paths[key] = {p: i for i, p in enumerate(self.paths(n, start, end))}
        return self._paths[key]

    # -- local operators on all paths of a fixed length ---------------------
    def _local(self, name, n):
        key = (name, n)
        if key not in self._ops:
            self._ops[key] = getattr(self, "_build_" + name)(n)
        return self._ops[key]

    def _build_cap(self, n):
        # cap on the first two steps of paths of length n (n >= 2) -> length n - 2
        src, dst = self.paths(n), self.index(n - 2)
        rows, cols, vals = [], [], []
        for j, p in enumerate(src):
            if p[0] == p[2]:
                rows.append(dst[(p[0],) + p[3:]])
                cols.append(j)
                vals.append(math.sqrt(self.d[p[1]] / self.d[p[0]]))
        return sp.csr_matrix((vals, (rows, cols)), shape=(len(dst), len(src)))

    def _build_jw(self, n):
        """Jones-Wenzl projector on all paths of length n (acts on all n strands)."""
        if n == 0:
            return sp.identity(len(self.paths(0)), format="csr")
        p = sp.identity(len(self.paths(n)), format="csr", dtype=float)
        for m in range(1, n):
            pm = self.embed(self._local("jw", m), n, 0, m, m)
            e = self.embed(self.e_local(), n, m - 1, 2, 2)
            p = pm - (qint(m, self.h) / qint(m + 1, self.h)) * (pm @ e @ pm)
            p.eliminate_zeros()
        return p.tocsr()

    def e_local(self):
        key = ("e", 2)
        if key not in self._ops:
            cap = self._local("cap", 2)
            self._ops[key] = (cap.T @ cap).tocsr()
        return self._ops[key]

    def jw(self, n: int):
        return self._local("jw", n)

    def cap_local(self):
        return self._local("cap", 2)

    # -- embedding local operators into longer paths ------------------------
    def embed(self, local, total_in: int, pos: int, n_in: int, n_out: int,
              start=None, end=None):
        """Act with ``local`` (paths of length n_in -> n_out) on steps ``pos..pos+n_in``.

        Returns a sparse matrix from paths of length ``total_in`` to paths of
        length ``total_in - n_in + n_out``, restricted to the given endpoints.
        """
        key = ("embed", id(local), total_in, pos, n_in, n_out, start, end)
        if key in self._ops:
            return self._ops[key][1]
        src = self.paths(total_in, start, end)
        total_out = total_in - n_in + n_out
        dst = self.index(total_out, start, end)
        lin = self.index(n_in)
        lout = self.paths(n_out)
        loc = sp.csc_matrix(local)
        rows, cols, vals = [], [], []
        for j, p in enumerate(src):
            seg = p[pos:pos + n_in + 1]
            c = lin[seg]
            lo, hi = loc.indptr[c], loc.indptr[c + 1]
            pre, post = p[:pos], p[pos + n_in + 1:]
            for r, v in zip(loc.indices[lo:hi], loc.data[lo:hi]):
                q = pre + lout[r] + post
                rows.append(dst[q])
                cols.append(j)
                vals.append(v)
        m = sp.csr_matrix((vals, (rows, cols)), shape=(len(dst), len(src)),
                          dtype=np.result_type(loc.dtype, float))
        self._ops[key] = (local, m)  # keep ``local`` alive so its id stays unique
        return m

    # -- composite morphisms ----------------------------------------------
    def crossing_local(self, sign: int = 1):
        key = ("crossing", sign)
        if key not in self._ops:
            a = self.A if sign > 0 else 1 / self.A
            e = self.e_local()
            self._ops[key] = (a * sp.identity(e.shape[0]) + (1 / a) * e).tocsr()
        return self._ops[key]

    def block_braid(self, m: int, l: int, sign: int = 1, offset: int = 0,
                    total: int | None = None, start=None, end=None):
        """Braid moving the block of ``m`` strands at ``offset`` past the next ``l`` strands.

        Maps ``X^m X^l`` to ``X^l X^m``; built from ``m*l`` crossings of the
        given sign.
        """
        total = m + l + offset if total is None else total
        dim = len(self.paths(total, start, end))
        out = sp.identity(dim, format="csr", dtype=complex)
        g = self.crossing_local(sign)
        for j in range(m - 1, -1, -1):
            for i in range(j, j + l):
                out = self.embed(g, total, offset + i, 2, 2, start, end) @ out
        return out.tocsr()

    def jw_at(self, n: int, pos: int, total: int, start=None, end=None):
        return self.embed(self.jw(n), total, pos, n, n, start, end)

    def trivalent(self, a: int, b: int, c: int):
        """Normalized isometric vertex ``T : X^a X^b -> X^c`` on all paths.

        ``T = s P_c (1 ⊗ caps ⊗ 1)(P_a ⊗ P_b)`` with ``T T^* = P_c`` and
        ``s > 0``.  Returns a sparse matrix from length ``a+b`` to length ``c``.
        """
        key = ("tri", a, b, c)
        if key in self._ops:
            return self._ops[key]
        i2 = a + b - c
        if i2 < 0 or i2 % 2 or abs(a - b) > c:
            raise ValueError(f"inadmissible triple ({a}, {b}, {c})")
        i = i2 // 2
        n = a + b
        t = self.jw_at(a, 0, n) @ self.jw_at(b, a, n)
        length = n
        for r in range(i):
            pos = a - 1 - r
            t = self.embed(self.cap_local(), length, pos, 2, 0) @ t
            length -= 2
        t = self.jw_at(c, 0, c) @ t
        tt = (t @ t.conj().T).toarray()
        pc = self.jw_at(c, 0, c).toarray()
        tr = np.trace(pc)
        if tr < 0.5:
            s = 1.0
        else:
            s = float(np.real(np.trace(tt)) / tr)
            if s <= 1e-14:
                raise ValueError(f"vanishing vertex ({a}, {b}, {c}) at h={self.h}")
        t = (t / math.sqrt(s)).tocsr()
        self._ops[key] = t
        return t

    # -- vector calculus on fixed-endpoint path spaces --------------------------
    # A vector is a 1-d array over ``paths(n, start, end)``.

    def _cap_map(self, n, start, end, pos):
        key = ("capmap", n, start, end, pos)
        if key not in self._ops:
            dst = self.index(n - 2, start, end)
            src, tgt, fac = [], [], []
            for j, p in enumerate(self.paths(n, start, end)):
                if p[pos] == p[pos + 2]:
                    src.append(j)
                    tgt.append(dst[p[:pos + 1] + p[pos + 3:]])
                    fac.append(math.sqrt(self.d[p[pos + 1]] / self.d[p[pos]]))
            self._ops[key] = (np.array(src, dtype=np.intp), np.array(tgt, dtype=np.intp),
                              np.array(fac), len(dst))
        return self._ops[key]

    def cap(self, vec, n, start, end, pos):
        """Cap strands ``pos, pos+1`` of a vector over paths of length ``n``."""
        src, tgt, fac, m = self._cap_map(n, start, end, pos)
        out = np.zeros(m, dtype=np.result_type(vec, float))
        np.add.at(out, tgt, fac * vec[src])
        return out

    def cup(self, vec, n, start, end, pos):
        """Insert a cup at position ``pos`` into a vector over paths of length ``n``."""
        src, tgt, fac, _ = self._cap_map(n + 2, start, end, pos)
        out = np.zeros(len(self.paths(n + 2, start, end)), dtype=np.result_type(vec, float))
        out[src] = fac * vec[tgt]
        return out

    def cross(self, vec, n, start, end, pos, sign=1):
        """Crossing ``A + A^{-1} e`` (or its inverse for ``sign < 0``) on strands ``pos, pos+1``."""
        a = self.A if sign > 0 else 1 / self.A
        return a * vec + (1 / a) * self.cup(self.cap(vec, n, start, end, pos), n - 2, start, end, pos)

    def braid(self, vec, n, start, end, offset, m, l, sign=1):
        """Move the block of ``m`` strands at ``offset`` past the following ``l`` strands."""
        out = np.asarray(vec, dtype=complex)
        for j in range(m - 1, -1, -1):
            for i in range(j, j + l):
                out = self.cross(out, n, start, end, offset + i, sign)
        return out

    def concat(self, v1, n1, start, mid, v2, n2, end, out=None):
        """Add ``v1 (x) v2`` (paths ``start->mid`` then ``mid->end``) into a vector."""
        if out is None:
            out = np.zeros(len(self.paths(n1 + n2, start, end)), dtype=np.result_type(v1, v2, float))
        idx = self.index(n1 + n2, start, end)
        p1, p2 = self.paths(n1, start, mid), self.paths(n2, mid, end)
        nz1 = np.flatnonzero(np.abs(v1) > 0)
        nz2 = np.flatnonzero(np.abs(v2) > 0)
        for i in nz1:
            a = p1[i]
            for j in nz2:
                out[idx[a + p2[j][1:]]] += v1[i] * v2[j]
        return out

    def hom_basis(self, a, b, n: int) -> np.ndarray:
        """Orthonormal basis of ``Hom(a X_n, b)`` as columns over ``paths(n, a, b)``.

        Built recursively: inside ``Hom(a X_{n-1}, c) (x) edge(c, b)`` the
        summand ``X_n`` is the orthogonal complement of the image of
        ``Hom(a X_{n-2}, b)`` under a cup on the last two strands.  Columns
        are in canonical gauge (first non-negligible entry real positive).
        """
        key = ("hom", a, b, n)
        if key in self._ops:
            return self._ops[key]
        ps = self.paths(n, a, b)
        if n == 0:
            out = np.ones((1, 1)) if a == b else np.zeros((0, 0))
        elif n == 1:
            out = np.eye(len(ps))
        elif not ps:
            out = np.zeros((0, 0))
        else:
            cols = []
            for c in self.vertices:
                x = self.hom_basis(a, c, n - 1)
                if x.shape[1] == 0 or b not in self.adj[c]:
                    continue
                e = np.ones(1)
                for k in range(x.shape[1]):
                    cols.append(self.concat(x[:, k], n - 1, a, c, e, 1, b))
            if not cols:
                out = np.zeros((len(ps), 0))
            else:
                q = np.stack(cols, axis=1)
                z = self.hom_basis(a, b, n - 2)
                if z.shape[1]:
                    cz = np.stack([self.cup(z[:, k], n - 2, a, b, n - 2) for k in range(z.shape[1])], axis=1)
                    kmat = q.conj().T @ cz
                    u, sv, _ = np.linalg.svd(kmat, full_matrices=True)
                    rank = int(np.sum(sv > 1e-10 * max(1.0, sv.max(initial=0.0))))
                    comp = u[:, rank:]
                else:
                    comp = np.eye(q.shape[1])
                out = canonical_columns(q @ comp) if comp.shape[1] else np.zeros((len(ps), 0))
                if out.shape[1]:
                    out = canonical_columns(_orthonormalize(out))
        self._ops[key] = out
        return out

    def hom_dim(self, a, b, n: int) -> int:
        return self.hom_basis(a, b, n).shape[1]

    def _segment_groups(self, n, start, end, pos, length):
        key = ("seg", n, start, end, pos, length)
        if key not in self._ops:
            groups: dict = {}
            for j, p in enumerate(self.paths(n, start, end)):
                c, d = p[pos], p[pos + length]
                g = groups.setdefault((c, d), ({}, [], [], []))
                ctx = p[:pos + 1] + p[pos + length:]
                row = g[0].setdefault(ctx, len(g[0]))
                g[1].append(j)
                g[2].append(row)
                g[3].append(self.index(length, c, d)[p[pos:pos + length + 1]])
            self._ops[key] = {cd: (np.array(g[1], dtype=np.intp), np.array(g[2], dtype=np.intp),
                                   np.array(g[3], dtype=np.intp), len(g[0]))
                              for cd, g in groups.items()}
        return self._ops[key]

    def project(self, vec, n, start, end, pos, length):
        """Apply the Jones-Wenzl projector ``P_length`` on strands ``pos .. pos+length-1``."""
        if length <= 1:
            return np.array(vec)
        out = np.zeros_like(vec, dtype=np.result_type(vec, float))
        for (c, d), (idx, row, col, nrow) in self._segment_groups(n, start, end, pos, length).items():
            basis = self.hom_basis(c, d, length)
            if basis.shape[1] == 0:
                continue
            mat = np.zeros((nrow, basis.shape[0]), dtype=out.dtype)
            mat[row, col] = vec[idx]
            res = (mat @ basis.conj()) @ basis.T
            out[idx] = res[row, col]
        return out

    def tri_adjoint(self, vec, n, start, end, pos, a, b, c, project=True):
        """Replace the ``X_c`` segment at ``pos`` by ``T(a, b -> c)^*`` applied to it.

        ``T(a, b -> c) = s^{-1/2} P_c (caps) (P_a (x) P_b)`` is the isometric
        trivalent vertex with ``T T^* = P_c``.  Input length ``n``; output
        length ``n + a + b - c``.
        """
        i = (a + b - c) // 2
        out = vec
        length = n
        for r in range(i - 1, -1, -1):
            out = self.cup(out, length, start, end, pos + a - 1 - r)
            length += 2
        if project:
            out = self.project(out, length, start, end, pos, a)
            out = self.project(out, length, start, end, pos + a, b)
        return out / math.sqrt(self.theta_scale(a, b, c))

    def theta_scale(self, a, b, c) -> float:
        """``s`` with ``T0 T0^* = s P_c`` for the unnormalized vertex ``T0``."""
        return theta_scale(self.h, a, b, c)

    def vectors(self, pieces):
        """Concatenate Hom-basis vectors into a vector over ``paths(sum n, a0, b_last)``.

        ``pieces`` is a list of ``(a, b, n, k)`` meaning basis vector ``k`` of
        ``Hom(a X_n, b)``.
        """
        a0 = pieces[0][0]
        vec, n = np.ones(1), 0
        for a, b, m, k in pieces:
            vec = self.concat(vec, n, a0, a, self.hom_basis(a, b, m)[:, k], m, b)
            n += m
        return vec


def _orthonormalize(v: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(v)
    return q


def admissible(a: int, b: int, c: int, k: int) -> bool:
    """SU(2)_k fusion rule ``c in a (x) b`` for twice-spin labels."""
    return (abs(a - b) <= c <= min(a + b, 2 * k - a - b)) and (a + b + c) % 2 == 0


@lru_cache(maxsize=None)
def theta_scale(h: int, a: int, b: int, c: int) -> float:
    """Normalization of the trivalent vertex, evaluated in the ``A_{h-1}`` model from ``0``."""
    k = h - 2
    if not admissible(a, b, c, k):
        raise ValueError(f"inadmissible triple ({a}, {b}, {c}) at level {k}")
    m = a_model(k)
    w = np.zeros(len(m.paths(c, 0, c)))
    w[0] = 1.0
    i = (a + b - c) // 2
    out, length = w, c
    for r in range(i - 1, -1, -1):
        out = m.cup(out, length, 0, c, a - 1 - r)
        length += 2
    out = m.project(out, length, 0, c, 0, a)
    out = m.project(out, length, 0, c, a, b)
    s = float(np.vdot(out, out).real)
    if s <= 1e-14:
        raise ValueError(f"vanishing vertex ({a}, {b}, {c}) at h={h}")
    return s


def canonical_columns(v: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Phase-fix each column so its first entry above ``tol`` is real positive."""
    v = np.array(v, dtype=complex)
    for j in range(v.shape[1]):
        col = v[:, j]
        nz = np.flatnonzero(np.abs(col) > tol)
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            v[:, j] = col / ph
    if np.allclose(v.imag, 0, atol=1e-13):
        return v.real.copy()
    return v


def restrict(op, model: PathModel, n_in: int, n_out: int, start, end):
    """Restrict an all-paths operator to fixed endpoints."""
    fin, fout = model.index(n_in), model.index(n_out)
    ci = [fin[p] for p in model.paths(n_in, start, end)]
    ro = [fout[p] for p in model.paths(n_out, start, end)]
    return op[ro][:, ci]


@lru_cache(maxsize=None)
def a_model(k: int) -> PathModel:
    """Path model of ``A_{k+1}`` (labels ``0..k``) with ``d_v = [v+1]``."""
    h = k + 2
    return PathModel(range(k + 1), [(i, i + 1) for i in range(k)],
                     {v: qint(v + 1, h) for v in range(k + 1)}, h)
