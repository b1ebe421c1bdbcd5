"""Finite bipartite multigraphs with Perron-Frobenius data.

A :class:`BipartiteGraph` stores a left ("even") and right ("odd") vertex list
and an integer multiplicity matrix.  Edges are enumerated canonically as
``(v, w, i)`` with ``0 <= i < mult[v][w]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

Vertex = Hashable
Edge = tuple  # (v, w, i)


class GraphError(ValueError):
    """Raised for malformed or unsupported graph input."""


@dataclass(frozen=True)
class BipartiteGraph:
    """Bipartite multigraph ``even x odd`` with multiplicities.

    Vertex lists may overlap as labels (e.g. a fusion graph on a label set
    with itself); the two sides are always treated as distinct.
    """

    even: tuple
    odd: tuple
    mult: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mult, dtype=np.int64).reshape(len(self.even), len(self.odd))
        if (m < 0).any():
            raise GraphError("negative multiplicity")
        if len(set(self.even)) != len(self.even) or len(set(self.odd)) != len(self.odd):
            raise GraphError("duplicate vertex id")
        m.setflags(write=False)
        object.__setattr__(self, "even", tuple(self.even))
        object.__setattr__(self, "odd", tuple(self.odd))
        object.__setattr__(self, "mult", m)
        object.__setattr__(self, "_ei", {v: i for i, v in enumerate(self.even)})
        object.__setattr__(self, "_oi", {v: i for i, v in enumerate(self.odd)})

    @classmethod
    def from_edges(cls, even, odd, edges) -> "BipartiteGraph":
        """Edges are ``(v, w)`` pairs, repeated for multiplicity, or ``(v, w, count)``."""
        even, odd = list(even), list(odd)
        m = np.zeros((len(even), len(odd)), dtype=np.int64)
        ei = {v: i for i, v in enumerate(even)}
        oi = {v: i for i, v in enumerate(odd)}
        for e in edges:
            m[ei[e[0]], oi[e[1]]] += e[2] if len(e) > 2 else 1
        return cls(tuple(even), tuple(odd), m)

    def m(self, v, w) -> int:
        i, j = self._ei.get(v), self._oi.get(w)
        if i is None or j is None:
            return 0
        return int(self.mult[i, j])

    def edges(self):
        """All edges ``(v, w, i)`` in lexicographic (vertex-position) order."""
        out = []
        for a, v in enumerate(self.even):
            for b, w in enumerate(self.odd):
                out.extend((v, w, i) for i in range(int(self.mult[a, b])))
        return out

    def edges_between(self, v, w):
        return [(v, w, i) for i in range(self.m(v, w))]

    def neighbors_of_even(self, v):
        i = self._ei[v]
        return [w for j, w in enumerate(self.odd) if self.mult[i, j]]

    def neighbors_of_odd(self, w):
        j = self._oi[w]
        return [v for i, v in enumerate(self.even) if self.mult[i, j]]

    @property
    def n_edges(self) -> int:
        return int(self.mult.sum())

    def transpose(self) -> "BipartiteGraph":
        return BipartiteGraph(self.odd, self.even, self.mult.T.copy())

    def restrict(self, even, odd) -> "BipartiteGraph":
        even, odd = tuple(even), tuple(odd)
        m = np.array([[self.m(v, w) for w in odd] for v in even], dtype=np.int64)
        return BipartiteGraph(even, odd, m.reshape(len(even), len(odd)))

    def same_as(self, other: "BipartiteGraph") -> bool:
        """Identical labels (as sets) and multiplicities."""
        if set(self.even) != set(other.even) or set(self.odd) != set(other.odd):
            return False
        return all(self.m(v, w) == other.m(v, w) for v in self.even for w in self.odd)

    def adjacency(self):
        """Symmetric adjacency matrix on ``even + odd`` (sides kept distinct)."""
        ne, no = len(self.even), len(self.odd)
        a = np.zeros((ne + no, ne + no))
        a[:ne, ne:] = self.mult
        a[ne:, :ne] = self.mult.T
        return a

    def to_doc(self) -> dict:
        return {
            "even": [str(v) for v in self.even],
            "odd": [str(w) for w in self.odd],
            "mult": self.mult.tolist(),
        }

    @classmethod
    def from_doc(cls, doc: Mapping) -> "BipartiteGraph":
        try:
            even, odd, mult = list(doc["even"]), list(doc["odd"]), doc["mult"]
        except (KeyError, TypeError) as exc:
            raise GraphError(f"malformed graph document: {exc}") from exc
        m = np.array(mult, dtype=np.int64).reshape(len(even), len(odd))
        return cls(tuple(even), tuple(odd), m)

    def to_dot(self, name: str = "G") -> str:
        lines = [f"graph {name} {{"]
        for v in self.even:
            lines.append(f'  "e:{v}" [label="{v}", shape=circle];')
        for w in self.odd:
            lines.append(f'  "o:{w}" [label="{w}", shape=box];')
        for v, w, _ in self.edges():
            lines.append(f'  "e:{v}" -- "o:{w}";')
        lines.append("}")
        return "\n".join(lines)


@dataclass(frozen=True)
class PFData:
    """Perron-Frobenius eigenvalue and positive eigenvector of a graph."""

    beta: float
    mu: Mapping  # (side, vertex) -> weight, side in {"even", "odd"}
    normalization: str

    def even(self, v) -> float:
        return self.mu[("even", v)]

    def odd(self, w) -> float:
        return self.mu[("odd", w)]


def connectivity(graph: BipartiteGraph) -> dict:
    """Connected components as sets of ``(side, vertex)`` pairs."""
    nodes = [("even", v) for v in graph.even] + [("odd", w) for w in graph.odd]
    seen: set = set()
    comps = []
    for start in nodes:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            side, x = stack.pop()
            nbrs = (
                [("odd", w) for w in graph.neighbors_of_even(x)]
                if side == "even"
                else [("even", v) for v in graph.neighbors_of_odd(x)]
            )
            for n in nbrs:
                if n not in comp:
                    comp.add(n)
                    stack.append(n)
        seen |= comp
        comps.append(comp)
    return {"connected": len(comps) == 1, "components": comps}


def pf_data(graph: BipartiteGraph, tol: float = 1e-12, basepoint=None,
            max_iter: int = 200000) -> PFData:
    """Perron-Frobenius data by deterministic power iteration.

    Iterates ``x <- (A + I) x`` from the all-ones vector; the shift makes the
    iteration converge on bipartite graphs, whose spectrum is symmetric.
    With ``basepoint=(side, v)`` that weight is normalized to one, otherwise
    the largest weight is.
    """
    if graph.n_edges == 0:
        raise GraphError("PF undefined on empty graph")
    if not connectivity(graph)["connected"]:
        raise GraphError("PF undefined on disconnected graph")
    a = graph.adjacency()
    n = a.shape[0]
    x = np.ones(n)
    shifted = a + np.eye(n)
    for _ in range(max_iter):
        y = shifted @ x
        y /= np.max(y)
        if np.max(np.abs(y - x)) < tol * max(1.0, float(np.max(shifted @ y))):
            x = y
            break
        x = y
    # Polish: the top eigenvector of the symmetric adjacency, signed to agree
    # with the power iterate (LAPACK eigh is deterministic).
    w, v = np.linalg.eigh(a)
    top = v[:, -1] * np.sign(v[:, -1] @ x)
    if np.all(top > 0) and np.max(np.abs(top / top.max() - x / x.max())) < 1e-6:
        x = top
    keys = [("even", v) for v in graph.even] + [("odd", w) for w in graph.odd]
    if basepoint is not None:
        x = x / x[keys.index(tuple(basepoint))]
        norm = "basepoint"
    else:
        x = x / x.max()
        norm = "max-one"
    beta = float(x @ a @ x / (x @ x))
    return PFData(beta=beta, mu=dict(zip(keys, x.tolist())), normalization=norm)


def pf_residual(graph: BipartiteGraph, pf: PFData) -> float:
    a = graph.adjacency()
    keys = [("even", v) for v in graph.even] + [("odd", w) for w in graph.odd]
    x = np.array([pf.mu[k] for k in keys])
    return float(np.max(np.abs(a @ x - pf.beta * x)))


def graph_isomorphic(g1: BipartiteGraph, g2: BipartiteGraph):
    """Parity-preserving vertex bijection matching multiplicities, or ``None``.

    Backtracking search with degree pruning; fine for graphs of a few dozen
    vertices.
    """
    if len(g1.even) != len(g2.even) or len(g1.odd) != len(g2.odd):
        return None
    if sorted(g1.mult.sum(1)) != sorted(g2.mult.sum(1)):
        return None
    if sorted(g1.mult.sum(0)) != sorted(g2.mult.sum(0)):
        return None
    m1, m2 = g1.mult, g2.mult
    ne, no = m1.shape
    deg1e, deg2e = m1.sum(1), m2.sum(1)
    deg1o, deg2o = m1.sum(0), m2.sum(0)
    # Assign even vertices first, then odd; check edges incrementally.
    order = [("e", i) for i in range(ne)] + [("o", j) for j in range(no)]
    pe = [-1] * ne
    po = [-1] * no
    used_e, used_o = set(), set()

    def ok(kind, i, t):
        if kind == "e":
            if deg1e[i] != deg2e[t]:
                return False
            return all(m1[i, j] == m2[t, po[j]] for j in range(no) if po[j] >= 0)
        if deg1o[i] != deg2o[t]:
            return False
        return all(m1[k, i] == m2[pe[k], t] for k in range(ne) if pe[k] >= 0)

    def rec(pos):
        if pos == len(order):
            return True
        kind, i = order[pos]
        cands = range(ne) if kind == "e" else range(no)
        used = used_e if kind == "e" else used_o
        for t in cands:
            if t in used or not ok(kind, i, t):
                continue
            (pe if kind == "e" else po)[i] = t
            used.add(t)
            if rec(pos + 1):
                return True
            used.discard(t)
            (pe if kind == "e" else po)[i] = -1
        return False

    if not rec(0):
        return None
    out = {("even", g1.even[i]): ("even", g2.even[pe[i]]) for i in range(ne)}
    out.update({("odd", g1.odd[j]): ("odd", g2.odd[po[j]]) for j in range(no)})
    return out


def square_graph(vertices: Sequence, matrix) -> BipartiteGraph:
    """Bipartite graph with both sides labelled by ``vertices``."""
    return BipartiteGraph(tuple(vertices), tuple(vertices), np.asarray(matrix, dtype=np.int64))


def path_graph(n: int) -> BipartiteGraph:
    """A_n with vertices ``0..n-1`` split by parity."""
    even = [i for i in range(n) if i % 2 == 0]
    odd = [i for i in range(n) if i % 2 == 1]
    return BipartiteGraph.from_edges(
        even, odd,
        [(i, i + 1) if i % 2 == 0 else (i + 1, i) for i in range(n - 1)],
    )


def disjoint_union(g1: BipartiteGraph, g2: BipartiteGraph, tags=("a", "b")) -> BipartiteGraph:
    even = [(tags[0], v) for v in g1.even] + [(tags[1], v) for v in g2.even]
    odd = [(tags[0], w) for w in g1.odd] + [(tags[1], w) for w in g2.odd]
    m = np.zeros((len(even), len(odd)), dtype=np.int64)
    m[: len(g1.even), : len(g1.odd)] = g1.mult
    m[len(g1.even):, len(g1.odd):] = g2.mult
    return BipartiteGraph(tuple(even), tuple(odd), m)


def graph_isomorphic_unoriented(g1: BipartiteGraph, g2: BipartiteGraph):
    """Like :func:`graph_isomorphic` but the two sides of ``g1`` may be exchanged.

    Returns ``(mapping, swapped)`` or ``None``.
    """
    iso = graph_isomorphic(g1, g2)
    if iso is not None:
        return iso, False
    iso = graph_isomorphic(g1.transpose(), g2)
    return (iso, True) if iso is not None else None


__all__ = [
    "BipartiteGraph", "PFData", "GraphError", "connectivity", "pf_data", "pf_residual",
    "graph_isomorphic", "square_graph", "path_graph", "disjoint_union",
    "graph_isomorphic_unoriented",
]
