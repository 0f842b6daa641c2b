"""CNF formulas, DIMACS I/O and the reductions CNF-SAT -> MSP -> 2-MSP.

Layout of the 2-MSP produced by :func:`reduce_full` for ``m`` clauses of
width ``k``:

    stage 0          S
    stage 2i-1       the k literal vertices of clause i      (i = 1..m)
    stage 2i         the gadget between clause i and i+1     (i = 1..m-1)
    stage 2m         one pass-through vertex per literal of clause m
    stage 2m+1 = L   D

For k = 3 the gadget holds one auxiliary vertex per pair {i, j} of literal
positions; lower vertex i feeds the two pairs containing i and pair {i, j}
feeds upper vertices i and j.  For k = 2 it holds two auxiliary vertices,
each joined to both lower and both upper vertices.  Closed-form sizes:

    |V| = 2 + k*m + g*(m-1) + k        g = 3 (k=3), 2 (k=2)
    |E| = k + e*(m-1) + 2*k            e = 12 (k=3), 8 (k=2)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .edgeset import iter_bits
from .graph import MultiStageGraph, build_graph

GADGET_PAIRS = ((0, 1), (0, 2), (1, 2))


class DimacsError(ValueError):
    pass


class ParseError(DimacsError):
    def __init__(self, msg: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {msg}")


class HeaderMismatch(DimacsError):
    pass


class TooFewClauses(ValueError):
    pass


class UnsupportedClauseWidth(ValueError):
    pass


class NotAPath(ValueError):
    pass


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __init__(self, num_vars: int, clauses: Iterable[Iterable[int]]):
        cls = tuple(tuple(int(x) for x in c) for c in clauses)
        for c in cls:
            if not c:
                raise ValueError("empty clause")
            for lit in c:
                if lit == 0 or abs(lit) > num_vars:
                    raise ValueError(f"literal {lit} out of range for {num_vars} variables")
        object.__setattr__(self, "num_vars", int(num_vars))
        object.__setattr__(self, "clauses", cls)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def max_width(self) -> int:
        return max((len(c) for c in self.clauses), default=0)

    def without_clause(self, i: int) -> "CnfFormula":
        return CnfFormula(self.num_vars, self.clauses[:i] + self.clauses[i + 1:])

    def evaluate(self, assignment: dict[int, bool]) -> bool:
        return all(any(assignment.get(abs(x), False) == (x > 0) for x in c)
                   for c in self.clauses)


def parse_dimacs(text: str | bytes, strict: bool = True) -> CnfFormula:
    """Parse DIMACS cnf.  Clauses are 0-terminated and may span lines."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    header = None
    clauses: list[list[int]] = []
    cur: list[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("c"):
            continue
        if s.startswith("%"):
            break  # SATLIB trailer
        if s.startswith("p"):
            parts = s.split()
            if header is not None:
                raise ParseError("duplicate header", lineno, 1)
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"bad header {s!r}", lineno, 1)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise ParseError(f"bad header {s!r}", lineno, 1) from None
            if header[0] < 0 or header[1] < 0:
                raise ParseError("negative count in header", lineno, 1)
            continue
        if header is None:
            raise ParseError("clause before 'p cnf' header", lineno, 1)
        col = 0
        for tok in line.split():
            col = line.index(tok, col) + 1
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", lineno, col) from None
            if lit == 0:
                if not cur:
                    raise ParseError("empty clause", lineno, col)
                clauses.append(cur)
                cur = []
            else:
                cur.append(lit)
            col += len(tok) - 1
    if header is None:
        raise ParseError("missing 'p cnf' header", max(1, text.count("\n")), 1)
    if cur:
        clauses.append(cur)  # tolerate a missing final 0
    nv, nc = header
    used = max((abs(x) for c in clauses for x in c), default=0)
    problems = []
    if used > nv:
        problems.append(f"literal uses variable {used} > declared {nv}")
    if len(clauses) != nc:
        problems.append(f"declared {nc} clauses, found {len(clauses)}")
    if problems:
        msg = "; ".join(problems)
        if strict:
            raise HeaderMismatch(msg)
        warnings.warn(msg, stacklevel=2)
        nv = max(nv, used)
    return CnfFormula(nv, clauses)


def emit_dimacs(f: CnfFormula, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {f.num_vars} {f.num_clauses}")
    for c in f.clauses:
        lines.append(" ".join(str(x) for x in c) + " 0")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- provenance

@dataclass(frozen=True)
class VertexOrigin:
    kind: str  # source | sink | literal | aux
    clause: int | None = None
    literal: int | None = None
    gadget: int | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in (("kind", self.kind), ("clause", self.clause),
                                  ("literal", self.literal), ("gadget", self.gadget))
                if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "VertexOrigin":
        return cls(d["kind"], d.get("clause"), d.get("literal"), d.get("gadget"))


@dataclass
class ReductionMap:
    origins: list[VertexOrigin]
    clauses: tuple[tuple[int, ...], ...] = ()  # the clauses as laid out in the graph
    meta: dict = field(default_factory=dict)

    def literal_vertices(self) -> list[int]:
        return [v for v, o in enumerate(self.origins) if o.kind == "literal"]

    def to_list(self) -> list[dict]:
        return [o.to_dict() for o in self.origins]


def _pad_clauses(f: CnfFormula, minimum: int) -> list[tuple[int, ...]]:
    if not f.clauses:
        raise TooFewClauses("formula has no clauses")
    clauses = list(f.clauses)
    i = 0
    while len(clauses) < minimum:
        clauses.append(f.clauses[i % f.num_clauses])
        i += 1
    return clauses


def _literal_labels(n_vertices: int, edges: list[tuple[int, int]],
                    origins: list[VertexOrigin]) -> list[int]:
    """Complement-exclusion labels; aux vertices and D get all of E."""
    full = (1 << len(edges)) - 1
    by_literal: dict[int, int] = {}
    for i, (u, v) in enumerate(edges):
        for w in (u, v):
            o = origins[w]
            if o.kind == "literal":
                by_literal[o.literal] = by_literal.get(o.literal, 0) | (1 << i)
    labels = [0] * n_vertices
    for w in range(1, n_vertices):
        o = origins[w]
        if o.kind == "literal":
            labels[w] = full & ~by_literal.get(-o.literal, 0)
        else:
            labels[w] = full
    return labels


def _assemble(stage_vertices: list[list[int]], edges: list[tuple[int, int]],
              origins: list[VertexOrigin], clauses, meta) -> tuple[MultiStageGraph, ReductionMap]:
    # vertex ids are allocated stage by stage, so they already match build_graph's
    pos = {}
    for l, vs in enumerate(stage_vertices):
        for i, v in enumerate(vs):
            pos[v] = (l, i)
    n = len(origins)
    triples = []
    for u, v in edges:
        (_, iu), (lv, iv) = pos[u], pos[v]
        triples.append((iu, iv, lv))
    # EdgeIds follow (stage, tail, head); sort our edge list the same way
    order = sorted(range(len(edges)), key=lambda i: (triples[i][2], triples[i][0], triples[i][1]))
    edges = [edges[i] for i in order]
    triples = [triples[i] for i in order]
    labels = _literal_labels(n, edges, origins)
    g = build_graph([len(vs) for vs in stage_vertices], triples, labels, min_L=1)
    return g, ReductionMap(origins, tuple(clauses), meta)


def cnf_to_msp(f: CnfFormula, strict: bool = False,
               min_clauses: int = 4) -> tuple[MultiStageGraph, ReductionMap]:
    """Plain MSP: one stage per clause, adjacent stages fully connected.

    Formulas with fewer than ``min_clauses`` clauses are padded by repeating
    clauses (``strict`` raises :class:`TooFewClauses` instead).
    """
    if strict and f.num_clauses < min_clauses:
        raise TooFewClauses(f"{f.num_clauses} clauses < {min_clauses}")
    clauses = _pad_clauses(f, min_clauses)
    origins = [VertexOrigin("source")]
    stages = [[0]]
    for ci, c in enumerate(clauses):
        vs = []
        for lit in c:
            vs.append(len(origins))
            origins.append(VertexOrigin("literal", clause=ci, literal=lit))
        stages.append(vs)
    stages.append([len(origins)])
    origins.append(VertexOrigin("sink"))
    edges = [(u, v) for lower, upper in zip(stages, stages[1:]) for u in lower for v in upper]
    return _assemble(stages, edges, origins, clauses, {"route": "msp"})


def _normalize_width(clauses: Sequence[tuple[int, ...]]) -> tuple[int, list[tuple[int, ...]]]:
    width = max(len(c) for c in clauses)
    if width > 3:
        raise UnsupportedClauseWidth(f"clause width {width} > 3")
    k = max(width, 2)
    # repeating a literal keeps the clause's meaning
    return k, [tuple(c) + (c[-1],) * (k - len(c)) for c in clauses]


def gadgetize_2msp(g: MultiStageGraph, rmap: ReductionMap,
                   f: CnfFormula | None = None) -> tuple[MultiStageGraph, ReductionMap]:
    """Rebuild a plain MSP reduction in 2-MSP form with stage gadgets.

    Literal labels are recomputed from complement exclusion over the new
    edge set; auxiliary vertices and D are labelled with all of E.
    """
    clauses = list(rmap.clauses)
    if not clauses:
        if f is None:
            raise ValueError("reduction map carries no clauses")
        clauses = list(f.clauses)
    k, clauses = _normalize_width(clauses)
    m = len(clauses)
    origins = [VertexOrigin("source")]
    stages: list[list[int]] = [[0]]
    edges: list[tuple[int, int]] = []

    def new(o: VertexOrigin) -> int:
        origins.append(o)
        return len(origins) - 1

    prev = None
    for ci, c in enumerate(clauses):
        if prev is not None:
            gid = ci - 1
            if k == 3:
                aux = [new(VertexOrigin("aux", gadget=gid)) for _ in GADGET_PAIRS]
                stages.append(aux)
                cur = [new(VertexOrigin("literal", clause=ci, literal=x)) for x in c]
                stages.append(cur)
                for a, (i, j) in zip(aux, GADGET_PAIRS):
                    edges += [(prev[i], a), (prev[j], a), (a, cur[i]), (a, cur[j])]
            else:
                aux = [new(VertexOrigin("aux", gadget=gid)) for _ in range(2)]
                stages.append(aux)
                cur = [new(VertexOrigin("literal", clause=ci, literal=x)) for x in c]
                stages.append(cur)
                edges += [(p, a) for p in prev for a in aux]
                edges += [(a, q) for a in aux for q in cur]
        else:
            cur = [new(VertexOrigin("literal", clause=ci, literal=x)) for x in c]
            stages.append(cur)
            edges += [(0, v) for v in cur]
        prev = cur
    tail = [new(VertexOrigin("aux", gadget=m - 1)) for _ in prev]
    stages.append(tail)
    edges += list(zip(prev, tail))
    d = new(VertexOrigin("sink"))
    stages.append([d])
    edges += [(t, d) for t in tail]

    meta = {"route": "2msp", "width": k, "clauses": m}
    out, omap = _assemble(stages, edges, origins, clauses, meta)
    per_gadget = 12 if k == 3 else 8
    gadget_vertices = 3 if k == 3 else 2
    assert out.n_vertices == 2 + k * m + gadget_vertices * (m - 1) + k
    assert out.n_edges == k + per_gadget * (m - 1) + 2 * k
    return out, omap


def reduce_full(f: CnfFormula, strict: bool = False) -> tuple[MultiStageGraph, ReductionMap]:
    """CNF (width <= 3, >= 2 clauses after padding) to a 2-MSP instance."""
    if f.max_width() > 3:
        raise UnsupportedClauseWidth(f"clause width {f.max_width()} > 3")
    g, rmap = cnf_to_msp(f, strict=strict, min_clauses=2)
    return gadgetize_2msp(g, rmap, f)


def decode_assignment(g: MultiStageGraph, p, rmap: ReductionMap) -> dict[int, bool]:
    """Read the literal chosen at each clause stage along a sigma-path."""
    from .graph import is_sigma_path

    bits = p.bits if hasattr(p, "bits") else int(p)
    es = g.edge_set(bits)
    if not is_sigma_path(g, es):
        raise NotAPath("edge set is not a sigma-path of the reduced graph")
    out: dict[int, bool] = {}
    for i in iter_bits(bits):
        o = rmap.origins[g.edges[i].v]
        if o.kind != "literal":
            continue
        var, val = abs(o.literal), o.literal > 0
        if out.get(var, val) != val:
            raise NotAPath(f"path visits both polarities of variable {var}")
        out[var] = val
    return out


def complementary_pairs(rmap: ReductionMap) -> Iterable[tuple[int, int]]:
    lits = [(v, o.literal) for v, o in enumerate(rmap.origins) if o.kind == "literal"]
    for (v, x), (w, y) in combinations(lits, 2):
        if x == -y:
            yield v, w
