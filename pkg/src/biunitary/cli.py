"""Command line front end.

Every subcommand reads JSON documents, runs one computation and writes a
canonical JSON report (sorted keys, floats with 17 significant digits), either
to ``--out`` or to standard output.  Exit codes: 0 success, 1 a requested
check failed (the report is still written), 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .connections import ConnectionError_, connection_from_doc, verify_biunitarity
from .graphs import BipartiteGraph, GraphError, pf_data, pf_residual

OK, FAILED, USAGE = 0, 1, 2


class InputError(Exception):
    """Bad arguments or unreadable input; maps to exit code 2."""


@dataclass
class CommandResult:
    code: int
    report: str | None
    summary: str


# -- canonical JSON -------------------------------------------------------------

def _num(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _emit(obj, out: list) -> None:
    if obj is None or obj is True or obj is False:
        out.append({None: "null", True: "true", False: "false"}[obj])
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_num(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key), ensure_ascii=False))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Canonical serialization: re-loading and re-emitting gives identical bytes."""
    out: list = []
    _emit(obj, out)
    return "".join(out) + "\n"


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_conn(path):
    try:
        return connection_from_doc(_load_json(path))
    except ConnectionError_ as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_graph(path):
    try:
        return BipartiteGraph.from_doc(_load_json(path))
    except GraphError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _module(source: str, tol: float):
    """Module data from a diagram name or a manifest written by ``ghj solve``."""
    from .ade import ghj_module

    name, theta = source, None
    if os.path.exists(source):
        doc = _load_json(source)
        if not isinstance(doc, dict) or "diagram" not in doc:
            raise InputError(f"{source}: not a module manifest")
        name, theta = doc["diagram"], doc.get("theta")
    try:
        m = ghj_module(name, tol)
    except (GraphError, ValueError, KeyError) as exc:
        raise InputError(f"{source}: {exc}") from exc
    if theta is not None and list(theta) != list(m.theta):
        raise InputError(f"{source}: theta {theta} does not match the module of {name}")
    return m


def _conn_doc(W) -> dict:
    """Connection document in the canonical phase gauge."""
    from .catops import canonical_gauge

    return canonical_gauge(W).to_doc()


def _default_basepoint(W):
    w = W.shape.weights["V0"]
    return min(W.shape.V0, key=lambda v: w[v])


def _basepoint(W, given):
    if given is None:
        return _default_basepoint(W)
    for v in W.shape.V0:
        if str(v) == str(given):
            return v
    raise InputError(f"basepoint {given!r} is not an even top vertex")


class _Out:
    """Destination for the main report and side artifacts."""

    def __init__(self, out, directory: bool):
        self.out = out
        self.directory = directory

    def report(self, doc, name="report.json") -> str | None:
        text = dumps(doc)
        if self.out is None:
            sys.stdout.write(text)
            return None
        path = Path(self.out) / name if self.directory else Path(self.out)
        write_atomic(path, text)
        return str(path)

    def artifact(self, name, text) -> str:
        if self.out is None:
            raise InputError("--out is required for this command")
        base = Path(self.out) if self.directory else Path(self.out).parent
        write_atomic(base / name, text)
        return str(base / name)


# -- subcommands ----------------------------------------------------------------

def cmd_pf(a):
    g = _load_graph(a.graph)
    bp = None
    if a.basepoint is not None:
        side = "even" if any(str(v) == a.basepoint for v in g.even) else "odd"
        pool = g.even if side == "even" else g.odd
        match = [v for v in pool if str(v) == a.basepoint]
        if not match:
            raise InputError(f"basepoint {a.basepoint!r} is not a vertex")
        bp = (side, match[0])
    try:
        pf = pf_data(g, basepoint=bp)
    except GraphError as exc:
        raise InputError(str(exc)) from exc
    doc = {"beta": pf.beta, "normalization": pf.normalization, "residual": pf_residual(g, pf),
           "mu": [{"side": s, "vertex": str(v), "weight": w} for (s, v), w in pf.mu.items()]}
    return OK, a.o.report(doc), f"beta = {pf.beta:.17g}"


def cmd_verify(a):
    W = _load_conn(a.conn)
    r = verify_biunitarity(W, a.tol)
    path = a.o.report(r)
    code = OK if r["pass"] else FAILED
    return code, path, (f"bi-unitary: unitarity {r['unitarity_residual']:.3g}, "
                        f"crossing {r['crossing_residual']:.3g}, pass={r['pass']}")


def cmd_compose(a):
    from .catops import ShapeMismatch, compose

    try:
        W = compose(_load_conn(a.up), _load_conn(a.down))
    except ShapeMismatch as exc:
        raise InputError(str(exc)) from exc
    return OK, a.o.report(_conn_doc(W)), f"composed: {len(W.blocks)} blocks"


def cmd_decompose(a):
    from .catops import decompose

    parts = decompose(_load_conn(a.conn), a.seed, a.tol)
    rows = []
    for i, (comp, mult) in enumerate(parts):
        name = f"component_{i}.json"
        if a.out is not None:
            a.o.artifact(name, dumps(_conn_doc(comp)))
        rows.append({"file": name, "multiplicity": int(mult),
                     "V0": [str(v) for v in comp.shape.V0], "V3": [str(v) for v in comp.shape.V3]})
    return OK, a.o.report({"components": rows}), f"{len(parts)} irreducible components"


def cmd_fusion_table(a):
    from .catops import ClosureCapExceeded, fusion_table

    if a.k is not None:
        if a.gen or a.identity:
            raise InputError("--k excludes --gen/--identity")
        from .su2k import quantum_data, w1_fusion_table

        data = quantum_data(a.k)
        t = w1_fusion_table(data, a.tol, a.seed)
        if a.out is not None:
            a.o.artifact("fusion_1.dot", t.to_dot(1) + "\n")
        doc = t.to_doc()
        doc["matches_su2k"] = bool(np.array_equal(t.N, data.N))
        code = OK if doc["matches_su2k"] else FAILED
        return code, a.o.report(doc), f"SU(2)_{a.k}: W1 fusion table matches={doc['matches_su2k']}"
    else:
        if not a.gen or a.identity is None:
            raise InputError("give --k, or --gen (repeatable) together with --identity")
        gens, ident = [_load_conn(p) for p in a.gen], _load_conn(a.identity)
    try:
        t = fusion_table(gens, ident, a.cap, a.tol, seed=a.seed)
    except ClosureCapExceeded as exc:
        path = a.o.report({"error": str(exc), "cap": a.cap})
        return FAILED, path, str(exc)
    if a.out is not None:
        for gi in range(1, len(gens) + 1):
            a.o.artifact(f"fusion_{gi}.dot", t.to_dot(gi) + "\n")
    return OK, a.o.report(t.to_doc()), f"{len(t.labels)} objects"


def cmd_flatness(a):
    from .flatness import is_flat

    W = _load_conn(a.conn)
    bp = _basepoint(W, a.basepoint)
    rep = is_flat(W, bp, tuple(a.max), a.tol, mode=a.mode, seed=a.seed, stop_early=a.stop_early)
    doc = rep.to_doc()
    doc["basepoint"] = str(bp)
    path = a.o.report(doc)
    code = OK if rep.verdict == "flat" else FAILED
    return code, path, f"{rep.verdict} up to size {tuple(a.max)}, max defect {max(rep.defect, default=0.0):.3g}"


def cmd_flat_part(a):
    from .flatness import flat_part

    W = _load_conn(a.conn)
    bp = _basepoint(W, a.basepoint) if a.basepoint is not None else None
    fp = flat_part(W, bp, a.depth, a.tol, a.seed)
    if a.out is not None:
        a.o.artifact("principal_graph.json", dumps(fp.principal_graph.to_doc()))
        a.o.artifact("principal_graph.dot", fp.principal_graph.to_dot("principal") + "\n")
    path = a.o.report(fp.to_doc())
    g = fp.principal_graph
    summary = (f"principal graph: {len(g.even)} even + {len(g.odd)} odd vertices, "
               f"stabilized={fp.stabilized} at depth {fp.depth}")
    return (OK if fp.stabilized else FAILED), path, summary


def cmd_ade_build(a):
    from .ade import ocneanu_connection

    try:
        W = ocneanu_connection(a.diagram, a.chirality)
    except (GraphError, KeyError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    return OK, a.o.report(_conn_doc(W)), f"{a.diagram}{a.chirality}: {len(W.blocks)} blocks"


def cmd_su2k_gen(a):
    from .su2k import quantum_data

    if a.k < 1:
        raise InputError("--k must be at least 1")
    data = quantum_data(a.k)
    doc = data.to_doc()
    ok = max(doc["pentagon_residual"], doc["hexagon_residual"]) <= a.tol
    return (OK if ok else FAILED), a.o.report(doc), (
        f"SU(2)_{a.k}: pentagon {doc['pentagon_residual']:.3g}, hexagon {doc['hexagon_residual']:.3g}")


def cmd_ghj_solve(a):
    m = _module(a.diagram, a.tol)
    doc = m.to_doc()
    doc["intertwining"] = m.intertwining.tolist()
    doc["sectors"] = [str(v) for v in m.sectors]
    files = {}
    for mu, W in sorted(m.w2_cells.items()):
        name = f"w2_{mu}.json"
        if a.out is not None:
            a.o.artifact(name, dumps(_conn_doc(W)))
        files[str(mu)] = name
    doc["w2"] = files
    return OK, a.o.report(doc, "manifest.json"), f"{m.diagram.name}: theta = {list(m.theta)}, local={m.local}"


def cmd_alpha_induce(a):
    from . import alpha

    m = _module(a.module, a.tol)
    try:
        if a.kind == "w1":
            W = alpha.build_w1_model(m.k, a.lam, a.mu)
        elif a.kind == "w2":
            W = alpha.build_w2(m, a.mu)
        elif a.kind == "w3":
            W = alpha.build_w3(m, a.lam, a.chirality)
        else:
            W = alpha.build_w4(m, a.lam, a.mu, a.chirality)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return OK, a.o.report(_conn_doc(W)), f"{a.kind.upper()} on {m.diagram.name}: {len(W.blocks)} blocks"


def cmd_alpha_sweep(a):
    from . import alpha

    m = _module(a.module, a.tol)
    rows, worst = [], 0.0
    for lam in a.lambdas:
        for mu in a.mus:
            conj = alpha.check_conj(m, lam, mu)
            for ch in a.chiralities:
                iy = alpha.check_iybe(*alpha.iybe_quadruple(m, lam, mu, ch))
                rows.append({"lambda": lam, "mu": mu, "chirality": ch, "iybe": iy, "conj": conj})
                worst = max(worst, iy, conj)
    doc = {"diagram": m.diagram.name, "tol": a.tol, "rows": rows, "max_residual": worst, "pass": worst <= a.tol}
    return (OK if worst <= a.tol else FAILED), a.o.report(doc), f"{len(rows)} cases, max residual {worst:.3g}"


def cmd_oracle_compare(a):
    from .alpha import build_w4
    from .catops import equivalent
    from .strings import ContainmentError, extract_w4_oracle

    m = _module(a.module, a.tol)
    try:
        res = extract_w4_oracle(m, a.lam, a.mu, a.chirality, a.tol, full=True)
    except ContainmentError as exc:
        path = a.o.report({"equivalent": False, "error": str(exc)})
        return FAILED, path, f"containment failed: {exc}"
    g = equivalent(res.connection, build_w4(m, a.lam, a.mu, a.chirality), a.compare_tol)
    if a.out is not None:
        a.o.artifact("oracle_w4.json", dumps(_conn_doc(res.connection)))
    doc = {"diagram": m.diagram.name, "lambda": a.lam, "mu": a.mu, "chirality": a.chirality,
           "size": res.size, "containment": res.containment, "agreement": res.agreement,
           "equivalent": g is not None, "residual": None if g is None else float(g.residual)}
    path = a.o.report(doc)
    return (OK if g is not None else FAILED), path, f"oracle vs construction: equivalent={g is not None}"


# -- parser ---------------------------------------------------------------------

def _common(p, directory=False):
    p.add_argument("--out", help="report directory" if directory else "report file (default: stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(directory=directory)


def _chirality(p):
    p.add_argument("--chirality", choices=["+", "-"], default="+")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="biunitary", description="Bi-unitary connection toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pf", help="Perron-Frobenius data of a bipartite graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--basepoint")
    _common(p)
    p.set_defaults(fn=cmd_pf)

    p = sub.add_parser("verify", help="unitarity and crossing residuals")
    p.add_argument("--conn", required=True)
    _common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("compose", help="vertical composition")
    p.add_argument("--up", required=True)
    p.add_argument("--down", required=True)
    _common(p)
    p.set_defaults(fn=cmd_compose)

    p = sub.add_parser("decompose", help="irreducible components")
    p.add_argument("--conn", required=True)
    _common(p, directory=True)
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("fusion-table", help="fusion table of generated connections")
    p.add_argument("--gen", action="append", default=[])
    p.add_argument("--identity")
    p.add_argument("--k", type=int, help="generate from W1(1,1) of SU(2)_k and compare with its fusion rules")
    p.add_argument("--cap", type=int, default=64)
    _common(p, directory=True)
    p.set_defaults(fn=cmd_fusion_table)

    p = sub.add_parser("flatness", help="flatness up to a string size")
    p.add_argument("--conn", required=True)
    p.add_argument("--basepoint")
    p.add_argument("--max", type=int, nargs=2, default=[4, 4], metavar=("L", "K"))
    p.add_argument("--mode", choices=["auto", "exact", "probe"], default="auto")
    p.add_argument("--stop-early", action="store_true")
    _common(p)
    p.set_defaults(fn=cmd_flatness)

    p = sub.add_parser("flat-part", help="principal graph of the flat part")
    p.add_argument("--conn", required=True)
    p.add_argument("--basepoint")
    p.add_argument("--depth", type=int, default=12)
    _common(p, directory=True)
    p.set_defaults(fn=cmd_flat_part)

    ade = sub.add_parser("ade", help="Dynkin diagram connections").add_subparsers(dest="action", required=True)
    p = ade.add_parser("build", help="connection on a Dynkin diagram")
    p.add_argument("--diagram", required=True)
    _chirality(p)
    _common(p)
    p.set_defaults(fn=cmd_ade_build)

    su = sub.add_parser("su2k", help="SU(2)_k data").add_subparsers(dest="action", required=True)
    p = su.add_parser("gen", help="F and R symbols with residuals")
    p.add_argument("--k", type=int, required=True)
    _common(p)
    p.set_defaults(fn=cmd_su2k_gen)

    ghj = sub.add_parser("ghj", help="module data").add_subparsers(dest="action", required=True)
    p = ghj.add_parser("solve", help="module manifest and W2 cells")
    p.add_argument("--diagram", required=True)
    _common(p, directory=True)
    p.set_defaults(fn=cmd_ghj_solve)

    al = sub.add_parser("alpha", help="alpha-induced connections").add_subparsers(dest="action", required=True)
    p = al.add_parser("induce", help="one of W1..W4")
    p.add_argument("--module", required=True, help="diagram name or manifest.json")
    p.add_argument("--lambda", dest="lam", type=int, default=1)
    p.add_argument("--mu", type=int, default=1)
    p.add_argument("--kind", choices=["w1", "w2", "w3", "w4"], default="w4")
    _chirality(p)
    _common(p)
    p.set_defaults(fn=cmd_alpha_induce)

    p = al.add_parser("sweep", help="IYBE and conjugation residuals")
    p.add_argument("--module", required=True, help="diagram name or manifest.json")
    p.add_argument("--lambdas", type=int, nargs="+", default=[1, 2])
    p.add_argument("--mus", type=int, nargs="+", default=[1, 2])
    p.add_argument("--chiralities", nargs="+", choices=["+", "-"], default=["+", "-"])
    _common(p)
    p.set_defaults(fn=cmd_alpha_sweep)

    orc = sub.add_parser("oracle", help="string-algebra extraction").add_subparsers(dest="action", required=True)
    p = orc.add_parser("compare", help="extracted W4 against the direct construction")
    p.add_argument("--module", required=True, help="diagram name or manifest.json")
    p.add_argument("--lambda", dest="lam", type=int, default=1)
    p.add_argument("--mu", type=int, default=1)
    p.add_argument("--compare-tol", type=float, default=1e-8)
    _chirality(p)
    _common(p, directory=True)
    p.set_defaults(fn=cmd_oracle_compare)
    return ap


def run(argv=None) -> CommandResult:
    """Parse ``argv`` and execute; never raises for bad input."""
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return CommandResult(USAGE if exc.code else OK, None, "usage error" if exc.code else "")
    a.o = _Out(a.out, a.directory)
    try:
        code, path, summary = a.fn(a)
    except InputError as exc:
        return CommandResult(USAGE, None, f"error: {exc}")
    return CommandResult(code, path, summary)


def main(argv=None) -> int:
    res = run(argv)
    if res.summary:
        print(res.summary, file=sys.stderr if res.code == USAGE or res.report is None else sys.stdout)
    return res.code


if __name__ == "__main__":
    sys.exit(main())
