"""A-D-E Dynkin diagrams, their Ocneanu connections and GHJ module data.

Vertices are integers.  ``A_n`` is the path ``0 - 1 - ... - n-1``; ``D_n`` is
the path ``0 .. n-2`` with the extra leaf ``n-1`` attached to ``n-3``; ``E_n``
is the path ``0 .. n-2`` with the leaf ``n-1`` attached to ``2``.  The
bipartition is by graph distance from the basepoint, which is the vertex with
the smallest Perron-Frobenius entry (lowest label on ties).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .connections import Connection, make_shape, verify_biunitarity
from .graphs import BipartiteGraph, GraphError, PFData, pf_data
from .pathmodel import PathModel, kauffman_a


@dataclass(frozen=True)
class DynkinDiagram:
    name: str
    vertices: tuple
    edges: tuple  # undirected pairs
    graph: BipartiteGraph  # even side contains the basepoint
    coxeter: int
    pf: PFData  # normalized so that the basepoint has weight 1
    basepoint: int
    weight: dict = field(repr=False)  # vertex -> PF weight

    @property
    def level(self) -> int:
        return self.coxeter - 2

    def parity(self, v) -> int:
        return 0 if v in self.graph.even else 1

    def adjacency(self) -> np.ndarray:
        n = len(self.vertices)
        a = np.zeros((n, n), dtype=np.int64)
        for x, y in self.edges:
            a[x, y] = a[y, x] = 1
        return a

    def path_model(self) -> PathModel:
        return _path_model(self.name)


def _parse(name: str):
    m = re.fullmatch(r"\s*([ADE])_?(\d+)\s*", name.upper())
    if not m:
        raise GraphError(f"invalid Dynkin name {name!r}")
    t, n = m.group(1), int(m.group(2))
    if (t == "A" and n < 1) or (t == "D" and n < 4) or (t == "E" and n not in (6, 7, 8)):
        raise GraphError(f"invalid Dynkin name {name!r}")
    return t, n


def _edges(t: str, n: int):
    if t == "A":
        return [(i, i + 1) for i in range(n - 1)]
    if t == "D":
        return [(i, i + 1) for i in range(n - 2)] + [(n - 3, n - 1)]
    return [(i, i + 1) for i in range(n - 2)] + [(2, n - 1)]


def canonical_name(name: str) -> str:
    t, n = _parse(name)
    return f"{t}{n}" if t == "E" else f"{t}_{n}"


@lru_cache(maxsize=None)
def dynkin(name: str) -> DynkinDiagram:
    """Dynkin diagram with PF data; the Coxeter number is read off ``beta``."""
    t, n = _parse(name)
    edges = _edges(t, n)
    verts = list(range(n))
    if n == 1:
        raise GraphError("A_1 has no edges; PF data undefined")
    # Provisional bipartition to find the basepoint.
    dist = _distances(verts, edges, 0)
    g0 = BipartiteGraph.from_edges(
        [v for v in verts if dist[v] % 2 == 0], [v for v in verts if dist[v] % 2],
        [(a, b) if dist[a] % 2 == 0 else (b, a) for a, b in edges])
    pf0 = pf_data(g0)
    w0 = {v: pf0.mu[("even" if dist[v] % 2 == 0 else "odd", v)] for v in verts}
    lo = min(w0.values())
    base = min(v for v in verts if w0[v] <= lo * (1 + 1e-9))
    dist = _distances(verts, edges, base)
    even = [v for v in verts if dist[v] % 2 == 0]
    odd = [v for v in verts if dist[v] % 2]
    graph = BipartiteGraph.from_edges(even, odd, [(a, b) if dist[a] % 2 == 0 else (b, a) for a, b in edges])
    pf = pf_data(graph, basepoint=("even", base))
    h = round(math.pi / math.acos(min(1.0, pf.beta / 2)))
    if abs(pf.beta - 2 * math.cos(math.pi / h)) > 1e-9:
        raise GraphError(f"{name}: PF eigenvalue {pf.beta} is not 2cos(pi/h)")
    weight = {v: pf.mu[("even" if v in even else "odd", v)] for v in verts}
    return DynkinDiagram(canonical_name(name), tuple(verts), tuple(edges), graph, h, pf, base, weight)


def _distances(verts, edges, root):
    adj = {v: [] for v in verts}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    dist = {root: 0}
    queue = [root]
    for v in queue:
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


@lru_cache(maxsize=None)
def _path_model(name: str) -> PathModel:
    d = dynkin(name)
    return PathModel(d.vertices, d.edges, d.weight, d.coxeter)


def catalog(max_a: int = 9, max_d: int = 8):
    """Names of the standard test corpus ``A_2..A_max_a, D_4..D_max_d, E6, E7, E8``."""
    return ([f"A_{n}" for n in range(2, max_a + 1)] + [f"D_{n}" for n in range(4, max_d + 1)]
            + ["E6", "E7", "E8"])


# -- Ocneanu connection --------------------------------------------------------

def _dynkin_shape(d: DynkinDiagram):
    ev, od = d.graph.even, d.graph.odd
    m = d.graph.m
    w_ev = {v: d.weight[v] for v in ev}
    w_od = {v: d.weight[v] for v in od}
    return make_shape(ev, od, ev, od,
                      top=m, left=m, bot=lambda x1, x2: m(x2, x1), right=lambda x3, x2: m(x2, x3),
                      weights={"V0": w_ev, "V1": w_od, "V2": w_ev, "V3": w_od})


def _ocneanu_values(d: DynkinDiagram, eps: complex) -> Connection:
    shape = _dynkin_shape(d)
    mu = d.weight
    blocks = {}
    for j, l, m, k in shape.corners():
        val = (eps if k == l else 0) + (math.sqrt(mu[k] * mu[l] / (mu[j] * mu[m])) * np.conj(eps) if j == m else 0)
        blocks[(j, l, m, k)] = np.full((1, 1, 1, 1), val, dtype=complex)
    return Connection(shape, blocks)


@lru_cache(maxsize=None)
def select_exponent(name: str) -> int:
    """The ``p`` in ``eps = i exp(i pi/(2p))`` making the cell formula bi-unitary.

    Candidates ``h-1, h, h+1`` are tried in that order of preference
    ``h, h+1, h-1``; the one with the smallest residual is returned.
    """
    d = dynkin(name)
    best = None
    for p in (d.coxeter, d.coxeter + 1, d.coxeter - 1):
        if p <= 0:
            continue
        r = verify_biunitarity(_ocneanu_values(d, kauffman_a(d.coxeter, p)))
        res = max(r["unitarity_residual"], r["crossing_residual"])
        if best is None or res < best[1] - 1e-12:
            best = (p, res)
    return best[0]


def ocneanu_connection(d: DynkinDiagram | str, chirality: str = "+", tol: float = 1e-10) -> Connection:
    """Cell formula ``delta_kl eps + sqrt(mu_k mu_l / (mu_j mu_m)) delta_jm conj(eps)``.

    Corners are ``j`` (upper left), ``k`` (upper right), ``l`` (lower left)
    and ``m`` (lower right).  ``chirality='-'`` uses ``conj(eps)``.
    """
    if isinstance(d, str):
        d = dynkin(d)
    p = select_exponent(d.name)
    eps = kauffman_a(d.coxeter, p)
    if chirality == "-":
        eps = np.conj(eps)
    elif chirality != "+":
        raise ValueError(f"chirality must be '+' or '-', got {chirality!r}")
    W = _ocneanu_values(d, eps)
    r = verify_biunitarity(W, tol)
    if not r["pass"]:
        raise ArithmeticError(f"{d.name}: cell formula not bi-unitary ({r})")
    return W


# -- GHJ module data -------------------------------------------------------------

#: Largest number of paths from the basepoint the exact path-model evaluation
#: is allowed to touch; beyond it module cells are reported as not built.
PATH_BUDGET = 2_000_000


class ModuleTooLarge(RuntimeError):
    """The exact path-model evaluation would exceed :data:`PATH_BUDGET`."""


def path_count(d: DynkinDiagram, length: int, start=None) -> int:
    """Number of paths of the given length starting at ``start`` (default: basepoint)."""
    a = d.adjacency()
    v = np.zeros(len(d.vertices), dtype=object)
    v[d.basepoint if start is None else start] = 1
    for _ in range(length):
        v = a.astype(object) @ v
    return int(sum(v))


def nimrep(d: DynkinDiagram) -> list:
    """Integer matrices ``V_nu`` (``nu = 0..k``) with ``V_1 = G`` and ``V_1 V_nu = V_{nu-1} + V_{nu+1}``.

    ``V_nu[a, b]`` is ``dim Hom(a X_nu, b)`` in the path model.
    """
    g = d.adjacency()
    out = [np.eye(len(d.vertices), dtype=np.int64), g.copy()]
    for _ in range(1, d.level):
        out.append(g @ out[-1] - out[-2])
    return out[: d.level + 1]


@dataclass
class ModuleData:
    """Finite data of the GHJ module of a Dynkin diagram over ``SU(2)_k``.

    Attributes
    ----------
    diagram : DynkinDiagram
    k : int
        Level, ``h = k + 2``.
    sectors : tuple
        Diagram vertices.
    intertwining : numpy.ndarray
        ``intertwining[nu, a] = dim Hom(iota nu, a)``.
    theta : tuple
        Labels of the dual canonical endomorphism, with multiplicity.
    local : bool
    w2_cells : dict
        ``mu -> W2(mu)`` for the generators that were built.
    built : bool
        False when the module is beyond the exact path budget; ``w2_cells``
        is then empty.
    """

    diagram: DynkinDiagram
    k: int
    sectors: tuple
    intertwining: np.ndarray
    theta: tuple
    local: bool
    w2_cells: dict = field(default_factory=dict, repr=False)
    built: bool = True

    @property
    def basepoint(self):
        return self.diagram.basepoint

    def intertwining_graph(self) -> BipartiteGraph:
        """Bipartite graph ``labels -> sectors`` with multiplicities ``dim Hom(iota nu, a)``."""
        labels = tuple(range(self.k + 1))
        edges = [(nu, a, int(self.intertwining[nu, a])) for nu in labels for a in self.sectors
                 if self.intertwining[nu, a]]
        return BipartiteGraph.from_edges(labels, self.sectors, edges)

    def index(self) -> float:
        """``sum over theta of d_lambda``."""
        h = self.k + 2
        return float(sum(math.sin((lam + 1) * math.pi / h) / math.sin(math.pi / h) for lam in self.theta))

    def to_doc(self) -> dict:
        return {"diagram": self.diagram.name, "k": self.k, "theta": list(self.theta),
                "local": bool(self.local), "built": bool(self.built)}


def global_index(d: DynkinDiagram) -> float:
    """``sum_nu d_nu^2 / sum_a mu_a^2``; equals :meth:`ModuleData.index`."""
    h = d.coxeter
    top = sum((math.sin((nu + 1) * math.pi / h) / math.sin(math.pi / h)) ** 2 for nu in range(h - 1))
    return top / sum(w * w for w in d.weight.values())


def module_feasible(d: DynkinDiagram) -> bool:
    """Whether W2 cells of ``d`` fit the exact path budget (paths of length ``k + 1``)."""
    return path_count(d, d.level + 1) <= PATH_BUDGET


def ghj_module(d: DynkinDiagram | str, tol: float = 1e-9, build_cells: bool = True) -> ModuleData:
    """Module data for ``d``: theta, intertwining dimensions, locality and ``W2(1)``.

    ``W2(1)`` is evaluated exactly in the path model of ``d`` and checked for
    bi-unitarity.  The theta labels are read from ``V_nu[*, *]``; the test
    suite cross-checks them against a decomposition of ``W2(1)`` composed with
    its dual.
    """
    if isinstance(d, str):
        d = dynkin(d)
    k = d.level
    vs = nimrep(d)
    s = d.basepoint
    inter = np.array([[int(v[s, a]) for a in d.vertices] for v in vs], dtype=np.int64)
    theta = tuple(lam for lam in range(k + 1) for _ in range(int(vs[lam][s, s])))
    m = ModuleData(d, k, d.vertices, inter, theta, local=False)
    m.local = locality_check(m, tol)
    if build_cells and module_feasible(d):
        from .alpha import build_w2  # local import: alpha depends on this module
        w = build_w2(m, 1)
        r = verify_biunitarity(w, tol)
        if not r["pass"]:
            raise ArithmeticError(f"{d.name}: W2(1) not bi-unitary ({r})")
        m.w2_cells[1] = w
    elif build_cells:
        m.built = False
    return m


def twist_trivial(k: int, lam: int, tol: float = 1e-12) -> bool:
    """``exp(2 pi i h_lam) = 1`` with conformal weight ``h_lam = lam (lam + 2) / (4 (k + 2))``."""
    h = lam * (lam + 2) / (4 * (k + 2))
    return abs(h - round(h)) < tol


def locality_check(m: ModuleData, tol: float = 1e-9, details: bool = False):
    """Braided pull-through test on the theta summands.

    For ``lam, mu`` in theta and ``x in Hom(* X_lam, *)``, ``y in Hom(* X_mu, *)``
    the braiding must move ``x (x) y`` to ``y (x) x``.  Pairs whose paths
    exceed :data:`PATH_BUDGET` fall back to the equivalent twist test
    ``h_lam, h_mu`` integral.  With ``details=True`` a list of
    ``(lam, mu, method, deviation)`` is returned alongside the verdict.
    """
    d = m.diagram
    labels = sorted({lam for lam in m.theta if lam})
    rows = []
    ok = True
    for i, lam in enumerate(labels):
        for mu in labels[i:]:
            if path_count(d, lam + mu) <= PATH_BUDGET:
                dev = _pull_through_defect(d, lam, mu)
                rows.append((lam, mu, "braid", dev))
                ok &= dev < tol
            else:
                good = twist_trivial(m.k, lam) and twist_trivial(m.k, mu)
                rows.append((lam, mu, "twist", 0.0 if good else 1.0))
                ok &= good
    return (ok, rows) if details else ok


def _pull_through_defect(d: DynkinDiagram, lam: int, mu: int) -> float:
    M = d.path_model()
    s = d.basepoint
    xs, ys = M.hom_basis(s, s, lam), M.hom_basis(s, s, mu)
    dev = 0.0
    for i in range(xs.shape[1]):
        for j in range(ys.shape[1]):
            v = M.concat(xs[:, i], lam, s, s, ys[:, j], mu, s)
            w = M.concat(ys[:, j], mu, s, s, xs[:, i], lam, s)
            bv = M.braid(v, lam + mu, s, s, 0, lam, mu, 1)
            dev = max(dev, float(np.abs(bv - w).max()))
    return dev
