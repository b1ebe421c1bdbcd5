"""Braided fusion data of SU(2)_k and the connections W1(lambda, mu).

Labels are twice the spin, ``0 .. k``.  F-symbols come from the closed-form
quantum 6j symbol (Kirillov-Reshetikhin) in unitary normalization,

    [F^{abc}_d]_{ef} = (-1)^{(a+b+c+d)/2} sqrt([e+1][f+1]) {a/2 b/2 e/2; c/2 d/2 f/2}_q,

and ``R^{ab}_c = (-1)^{(c-a-b)/2} q^{(c(c+2) - a(a+2) - b(b+2))/8}`` with
``q = exp(2 pi i/(k+2))``.  ``e`` runs over ``a (x) b`` and ``f`` over
``b (x) c``.  The constructor checks pentagon and hexagon equations.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .connections import Connection, GaugeFamily, apply_intertwiner, make_shape, verify_biunitarity
from .pathmodel import a_model, admissible, qint


class ConventionError(ArithmeticError):
    """Pentagon, hexagon or bi-unitarity failure while generating data."""


@dataclass
class BraidedSystemData:
    k: int
    labels: tuple
    qdim: dict
    N: np.ndarray  # N[a, b, c]
    F: dict = field(repr=False)  # (a, b, c, d, e, f) -> complex
    R: dict = field(repr=False)  # (a, b, c) -> complex
    pentagon_residual: float = 0.0
    hexagon_residual: float = 0.0

    def dual(self, a: int) -> int:
        return a

    def f(self, a, b, c, d, e, f_) -> complex:
        return self.F.get((a, b, c, d, e, f_), 0.0)

    def f_matrix(self, a, b, c, d):
        """``(rows e, cols f, matrix)`` for the block ``F^{abc}_d``."""
        es = [e for e in self.labels if self.N[a, b, e] and self.N[e, c, d]]
        fs = [f for f in self.labels if self.N[b, c, f] and self.N[a, f, d]]
        m = np.array([[self.f(a, b, c, d, e, f) for f in fs] for e in es], dtype=complex).reshape(len(es), len(fs))
        return es, fs, m

    def to_doc(self) -> dict:
        return {
            "k": self.k,
            "labels": list(self.labels),
            "qdim": [float(self.qdim[a]) for a in self.labels],
            "N": self.N.astype(int).tolist(),
            "F": [{"index": list(key), "re": float(v.real), "im": float(v.imag)} for key, v in sorted(self.F.items())],
            "R": [{"index": list(key), "re": float(v.real), "im": float(v.imag)} for key, v in sorted(self.R.items())],
            "pentagon_residual": float(self.pentagon_residual),
            "hexagon_residual": float(self.hexagon_residual),
        }


def _qfact(n: int, h: int) -> float:
    out = 1.0
    for i in range(2, n + 1):
        out *= qint(i, h)
    return out


def _delta(a, b, c, h):
    # arguments are twice-spins; the combinations below are integers
    return math.sqrt(_qfact((a + b - c) // 2, h) * _qfact((a - b + c) // 2, h) * _qfact((-a + b + c) // 2, h)
                     / _qfact((a + b + c) // 2 + 1, h))


def q6j(a, b, e, c, d, f, h) -> float:
    """Quantum 6j symbol ``{a b e; c d f}`` with twice-spin arguments (Racah form)."""
    tri = [(a, b, e), (e, c, d), (b, c, f), (a, f, d)]
    pre = 1.0
    for x, y, z in tri:
        pre *= _delta(x, y, z, h)
    s1 = [(x + y + z) // 2 for x, y, z in tri]
    s2 = [(a + b + c + d) // 2, (a + c + e + f) // 2, (b + d + e + f) // 2]
    total = 0.0
    for z in range(max(s1), min(s2) + 1):
        den = 1.0
        for x in s1:
            den *= _qfact(z - x, h)
        for x in s2:
            den *= _qfact(x - z, h)
        total += (-1) ** z * _qfact(z + 1, h) / den
    return pre * total


@lru_cache(maxsize=None)
def quantum_data(k: int, tol: float = 1e-10) -> BraidedSystemData:
    """SU(2)_k data; raises :class:`ConventionError` if pentagon/hexagon fail."""
    if k < 1:
        raise ValueError("level must be >= 1")
    h = k + 2
    labels = tuple(range(k + 1))
    N = np.zeros((k + 1,) * 3, dtype=np.int64)
    for a in labels:
        for b in labels:
            for c in labels:
                N[a, b, c] = int(admissible(a, b, c, k))
    q = cmath.exp(2j * math.pi / h)
    F = {}
    for a in labels:
        for b in labels:
            for c in labels:
                for d in labels:
                    for e in labels:
                        if not (N[a, b, e] and N[e, c, d]):
                            continue
                        for f in labels:
                            if N[b, c, f] and N[a, f, d]:
                                sign = -1 if ((a + b + c + d) // 2) % 2 else 1
                                F[(a, b, c, d, e, f)] = complex(sign * math.sqrt(qint(e + 1, h) * qint(f + 1, h))
                                                                * q6j(a, b, e, c, d, f, h))
    R = {}
    for a in labels:
        for b in labels:
            for c in labels:
                if N[a, b, c]:
                    sign = -1 if ((c - a - b) // 2) % 2 else 1
                    R[(a, b, c)] = sign * q ** ((c * (c + 2) - a * (a + 2) - b * (b + 2)) / 8)
    data = BraidedSystemData(k, labels, {a: qint(a + 1, h) for a in labels}, N, F, R)
    data.pentagon_residual = pentagon_residual(data)
    data.hexagon_residual = max(hexagon_residual(data, +1), hexagon_residual(data, -1))
    unit = max((abs(abs(v) - 1) for v in R.values()), default=0.0)
    funit = max(_unitary_defect(data.f_matrix(a, b, c, d)[2])
                for a in labels for b in labels for c in labels for d in labels)
    if max(data.pentagon_residual, data.hexagon_residual, unit, funit) >= tol:
        raise ConventionError(f"SU(2)_{k}: pentagon {data.pentagon_residual:.2e}, hexagon "
                              f"{data.hexagon_residual:.2e}, |R|-1 {unit:.2e}, F unitarity {funit:.2e}")
    return data


def _unitary_defect(m):
    if m.size == 0:
        return 0.0
    if m.shape[0] != m.shape[1]:
        return float("inf")
    return float(np.abs(m.conj().T @ m - np.eye(m.shape[0])).max())


def pentagon_residual(data: BraidedSystemData) -> float:
    """``max |F^{fcd}_{e;gl} F^{abl}_{e;fk} - sum_h F^{abc}_{g;fh} F^{ahd}_{e;gk} F^{bcd}_{k;hl}|``."""
    L, N, Fd = data.labels, data.N, data.F
    fz = lambda *x: Fd.get(x, 0.0)  # noqa: E731
    worst = 0.0
    for a in L:
        for b in L:
            for c in L:
                for d in L:
                    for e in L:
                        fs = [f for f in L if N[a, b, f]]
                        ls = [l for l in L if N[c, d, l]]
                        gs = [g for g in L if N[g, d, e]]
                        ks = [kk for kk in L if N[a, kk, e]]
                        for f in fs:
                            for g in gs:
                                if not N[f, c, g]:
                                    continue
                                for l in ls:
                                    for kk in ks:
                                        if not (N[b, l, kk]):
                                            continue
                                        lhs = fz(f, c, d, e, g, l) * fz(a, b, l, e, f, kk)
                                        rhs = sum(fz(a, b, c, g, f, hh) * fz(a, hh, d, e, g, kk) * fz(b, c, d, kk, hh, l)
                                                  for hh in L if N[b, c, hh])
                                        worst = max(worst, abs(lhs - rhs))
    return worst


def hexagon_residual(data: BraidedSystemData, sign: int = 1) -> float:
    """``max |R^{ca}_e F^{acb}_{d;eg} R^{cb}_g - sum_f F^{cab}_{d;ef} R^{cf}_d F^{abc}_{d;fg}|``.

    ``sign=-1`` uses the inverse braiding ``R -> conj(R)`` with swapped labels.
    """
    L, N = data.labels, data.N
    fz = lambda *x: data.F.get(x, 0.0)  # noqa: E731
    if sign > 0:
        r = lambda a, b, c: data.R.get((a, b, c), 0.0)  # noqa: E731
    else:
        r = lambda a, b, c: np.conj(data.R.get((b, a, c), 0.0))  # noqa: E731
    worst = 0.0
    for a in L:
        for b in L:
            for c in L:
                for d in L:
                    for e in L:
                        if not (N[c, a, e] and N[e, b, d]):
                            continue
                        for g in L:
                            if not (N[c, b, g] and N[a, g, d]):
                                continue
                            lhs = r(c, a, e) * fz(a, c, b, d, e, g) * r(c, b, g)
                            rhs = sum(fz(c, a, b, d, e, f) * r(c, f, d) * fz(a, b, c, d, f, g)
                                      for f in L if N[a, b, f] and N[c, f, d])
                            worst = max(worst, abs(lhs - rhs))
    return worst


# -- W1 --------------------------------------------------------------------------

def _w1_value(k, lam, mu, n1, n2, n3, n4):
    m = a_model(k)
    p = np.ones(1)
    y = m.tri_adjoint(p, n4, 0, n4, 0, lam, n2, n4)
    y = m.tri_adjoint(y, lam + n2, 0, n4, lam, n1, mu, n2)
    x = m.tri_adjoint(p, n4, 0, n4, 0, n3, mu, n4)
    x = m.tri_adjoint(x, n3 + mu, 0, n4, 0, lam, n1, n3)
    return complex(np.vdot(x, y))


def build_w1(data: BraidedSystemData, lam: int, mu: int, tol: float = 1e-9) -> Connection:
    """The connection W1(lambda, mu) on the labels of SU(2)_k.

    Top and bottom edges ``nu -> nu'`` carry ``Hom(nu mu, nu')``; left and right
    edges carry ``Hom(lambda nu, nu')``.  The cell value is the recoupling
    coefficient between ``(lambda nu1) mu`` and ``lambda (nu1 mu)`` in the
    isometric trivalent basis, i.e. a unitary F-coefficient.
    """
    k = data.k
    L = data.labels
    if lam not in L or mu not in L:
        raise ValueError(f"labels must lie in 0..{k}")
    N = data.N
    shape = make_shape(L, L, L, L,
                       top=lambda a, b: N[a, mu, b], left=lambda a, b: N[lam, a, b],
                       bot=lambda a, b: N[a, mu, b], right=lambda a, b: N[lam, a, b],
                       weights={v: dict(data.qdim) for v in ("V0", "V1", "V2", "V3")})
    blocks = {}
    for key in shape.corners():
        n1, n3, n4, n2 = key
        blocks[key] = np.full((1, 1, 1, 1), _w1_value(k, lam, mu, n1, n2, n3, n4))
    W = Connection(shape, blocks)
    r = verify_biunitarity(W, tol)
    if not r["pass"]:
        raise ConventionError(f"W1({lam},{mu}) at k={k} not bi-unitary: {r}")
    return W


def _vertical_pair_vector(k, first, second, x, y, mid):
    """Vector of the vertical path ``x -first-> mid -second-> y`` in ``A_{k+1}`` paths.

    Strand order is ``second, first, x``.
    """
    m = a_model(k)
    v = m.tri_adjoint(np.ones(1), y, 0, y, 0, second, mid, y)
    return m.tri_adjoint(v, second + mid, 0, y, second, first, x, mid)


def braiding_gauge(data: BraidedSystemData, lam1: int, lam2: int, mu: int, sign: int = 1, tol: float = 1e-9):
    """Gauge pair ``(S, T)`` with ``(S, T) . compose(W1(l1, mu), W1(l2, mu)) = compose(W1(l2, mu), W1(l1, mu))``.

    ``S`` acts on left composite edges and ``T`` on right ones; both are the
    matrices of the braiding ``c(lam2, lam1)`` (sign ``+1``) between the two
    orders of vertical two-step paths, i.e. ``F R F^*`` in the trivalent
    basis.  Independent of ``mu``.
    """
    from .catops import compose  # local import: catops depends on connections only

    k = data.k
    m = a_model(k)
    N = data.N

    def block(x, y):
        mids1 = [z for z in data.labels if N[lam1, x, z] and N[lam2, z, y]]
        mids2 = [z for z in data.labels if N[lam2, x, z] and N[lam1, z, y]]
        if not mids1:
            return None
        n = lam1 + lam2 + x
        M = np.zeros((len(mids2), len(mids1)), dtype=complex)
        for j, z in enumerate(mids1):
            v = _vertical_pair_vector(k, lam1, lam2, x, y, z)  # order lam2, lam1, x
            v = m.braid(v, n, 0, y, 0, lam2, lam1, sign)  # -> lam1, lam2, x
            for i, z2 in enumerate(mids2):
                M[i, j] = np.vdot(_vertical_pair_vector(k, lam2, lam1, x, y, z2), v)
        return M

    S, T = {}, {}
    for x in data.labels:
        for y in data.labels:
            b = block(x, y)
            if b is not None:
                S[(x, y)] = b
                T[(y, x)] = b
    A = compose(build_w1(data, lam1, mu), build_w1(data, lam2, mu))
    B = compose(build_w1(data, lam2, mu), build_w1(data, lam1, mu))
    moved = apply_intertwiner(A, S, T, B.shape)
    res = max((float(np.abs(moved.blocks[kk] - bb).max()) for kk, bb in B.blocks.items() if bb.size), default=0.0)
    if res >= tol:
        raise ConventionError(f"braiding gauge residual {res:.3g}")
    g_s, g_t = GaugeFamily(S, {}), GaugeFamily({}, T)
    g_s.residual = g_t.residual = res
    return g_s, g_t


def w1_fusion_table(data: BraidedSystemData, tol: float = 1e-9, seed: int = 0):
    """Fusion table generated by ``W1(1, 1)``, with objects labelled by ``lambda``.

    ``W1`` lives on all labels and splits into the two parity components; the
    table is computed on the component through the label ``0``.  Each object
    is then matched with the component of ``W1(lambda, 1)`` starting at ``0``
    and ``N`` is reordered so that ``N[a, b, c]`` can be read against
    ``data.N``.
    """
    from .catops import FusionTable, decompose, equivalent, fusion_table

    def through_zero(W):
        return next(c for c, _ in decompose(W, seed, tol) if 0 in c.shape.V0)

    table = fusion_table([build_w1(data, 1, 1)], through_zero(build_w1(data, 0, 1)), tol=tol, seed=seed)
    refs = [through_zero(build_w1(data, lam, 1)) for lam in data.labels]
    order = []
    for obj in table.objects:
        hit = [lam for lam, ref in zip(data.labels, refs) if equivalent(obj, ref, tol) is not None]
        if len(hit) != 1:
            raise ConventionError(f"fusion object matches labels {hit}")
        order.append(hit[0])
    if sorted(order) != list(data.labels):
        raise ConventionError(f"fusion objects cover labels {sorted(order)}")
    perm = [order.index(lam) for lam in data.labels]
    N = table.N[np.ix_(perm, perm, perm)]
    return FusionTable(list(data.labels), N, [table.objects[i] for i in perm])
