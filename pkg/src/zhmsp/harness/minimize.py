"""Greedy 1-minimal shrinking of instances under a predicate.

CNF-derived instances are shrunk at the formula level (drop a clause, fix a
variable) and re-reduced after every step; other instances are shrunk on
the graph (drop a vertex, an edge, or one label entry).  A pass that
accepts nothing ends the search, so no single remaining step keeps the
predicate true.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..edgeset import iter_bits
from ..graph import GraphError, MultiStageGraph, build_graph, validate_2msp
from ..kernel import zh_solve
from ..oracle import Answer, OracleBudget, sigma_path_exists
from ..reduction import CnfFormula, reduce_full
from .core import classify, NECESSITY, SUFFICIENCY
from .serialize import Instance, content_hash

Predicate = Callable[[Instance], bool]


class PredicateFlaky(RuntimeError):
    """The predicate gave different answers for the same instance."""


def zh_no(inst: Instance) -> bool:
    return zh_solve(inst.graph).answer == "no"


def zh_yes(inst: Instance) -> bool:
    return zh_solve(inst.graph).answer == "yes"


def make_disagree(budget: OracleBudget | None = None) -> Predicate:
    def disagree(inst: Instance) -> bool:
        oracle = sigma_path_exists(inst.graph, budget)
        if oracle is Answer.UNKNOWN:
            return False
        return classify(zh_solve(inst.graph).answer, oracle.value) in (NECESSITY, SUFFICIENCY)
    return disagree


PREDICATES: dict[str, Callable[[], Predicate]] = {
    "disagree": make_disagree,
    "zh-no": lambda: zh_no,
    "zh-yes": lambda: zh_yes,
}


@dataclass
class MinimizeResult:
    instance: Instance
    steps: int
    evaluations: int
    route: str


# ------------------------------------------------------------------ CNF

def fix_variable(f: CnfFormula, var: int, value: bool) -> CnfFormula | None:
    """Assign ``var`` and drop it; None if a clause becomes empty or none remain."""
    lit = var if value else -var
    clauses = []
    for c in f.clauses:
        if lit in c:
            continue
        c2 = tuple(x for x in c if x != -lit)
        if not c2:
            return None
        clauses.append(c2)
    if not clauses:
        return None
    return compact_variables(CnfFormula(f.num_vars, clauses))


def compact_variables(f: CnfFormula) -> CnfFormula:
    used = sorted({abs(x) for c in f.clauses for x in c})
    ren = {v: i + 1 for i, v in enumerate(used)}
    return CnfFormula(len(used), [[ren[abs(x)] * (1 if x > 0 else -1) for x in c]
                                  for c in f.clauses])


def _cnf_instance(f: CnfFormula, like: Instance) -> Instance:
    g, rmap = reduce_full(f)
    prov = {"generator": "minimized", "from": like.id}
    return Instance(like.id + "~min", g, prov, f, rmap)


def _cnf_moves(f: CnfFormula):
    for i in range(f.num_clauses):
        if f.num_clauses > 1:
            yield f.without_clause(i)
    for var in range(1, f.num_vars + 1):
        for val in (False, True):
            h = fix_variable(f, var, val)
            if h is not None:
                yield h


# ---------------------------------------------------------------- graph

def rebuild(g: MultiStageGraph, drop_vertex: int | None = None,
            drop_edge: int | None = None, label_bits: list[int] | None = None,
            min_L: int = 5) -> MultiStageGraph:
    """Copy of ``g`` without one vertex (and its edges) or one edge, labels remapped."""
    labels = list(label_bits if label_bits is not None else g.label_bits)
    local: dict[int, tuple[int, int]] = {}
    sizes = []
    for l in range(g.L + 1):
        kept = [v for v in g.vertices(l) if v != drop_vertex]
        for i, v in enumerate(kept):
            local[v] = (l, i)
        sizes.append(len(kept))
    idmap = {}
    triples = []
    for i, (u, v, l) in enumerate(g.edges):
        if i == drop_edge or u == drop_vertex or v == drop_vertex:
            continue
        idmap[i] = len(triples)
        triples.append((local[u][1], local[v][1], l))
    new_labels = {}
    for v in range(1, g.n_vertices):
        if v == drop_vertex:
            continue
        new_labels[local[v]] = [idmap[i] for i in iter_bits(labels[v]) if i in idmap]
    return build_graph(sizes, triples, new_labels, min_L=min_L)


def _graph_moves(g: MultiStageGraph):
    for v in range(1, g.n_vertices - 1):
        if g.stage_sizes[g.vertex_stage[v]] > 1:
            yield ("vertex", v)
    for i in range(g.n_edges):
        yield ("edge", i)
    for v in range(1, g.n_vertices):
        for i in iter_bits(g.label_bits[v]):
            yield ("label", v, i)


def _apply(g: MultiStageGraph, move) -> MultiStageGraph:
    if move[0] == "vertex":
        return rebuild(g, drop_vertex=move[1])
    if move[0] == "edge":
        return rebuild(g, drop_edge=move[1])
    labels = list(g.label_bits)
    labels[move[1]] &= ~(1 << move[2])
    return g.with_labels(labels)


# ------------------------------------------------------------------ driver

def minimize(inst: Instance, predicate: Predicate, keep_2msp: bool = True,
             max_evaluations: int = 100_000) -> MinimizeResult:
    """Shrink ``inst`` while ``predicate`` stays true.

    Raises :class:`PredicateFlaky` if the predicate answers differently on
    repeated evaluation of the input, and ``ValueError`` if it is false there.
    """
    first, second = predicate(inst), predicate(inst)
    if first != second:
        raise PredicateFlaky("predicate is not deterministic on the input instance")
    if not first:
        raise ValueError("predicate does not hold on the input instance")
    evals = 2
    steps = 0
    seen: dict[str, bool] = {}

    def holds(cand: Instance) -> bool:
        nonlocal evals
        key = content_hash(cand.graph)
        if key not in seen:
            if evals >= max_evaluations:
                return False
            evals += 1
            seen[key] = predicate(cand)
        return seen[key]

    cur = inst
    if inst.formula is not None:
        route = "cnf"
        progress = True
        while progress:
            progress = False
            for f2 in _cnf_moves(cur.formula):
                try:
                    cand = _cnf_instance(f2, inst)
                except ValueError:
                    continue
                if holds(cand):
                    cur, steps, progress = cand, steps + 1, True
                    break
    else:
        route = "graph"
        progress = True
        while progress:
            progress = False
            for move in _graph_moves(cur.graph):
                try:
                    g2 = _apply(cur.graph, move)
                except GraphError:
                    continue
                if keep_2msp and validate_2msp(g2):
                    continue
                cand = Instance(inst.id + "~min", g2, {"generator": "minimized", "from": inst.id})
                if holds(cand):
                    cur, steps, progress = cand, steps + 1, True
                    break
    if cur is not inst and not predicate(cur):
        raise PredicateFlaky("predicate changed its answer on the minimized instance")
    return MinimizeResult(cur, steps, evals, route)
