"""The ZH decision procedure: label pre-processing, rho initialization, the
chi compaction, the psi restraint and the outer fixpoint.

All edge sets are int bitsets internally (see :mod:`zhmsp.graph`).  Sweep
order is part of the contract: psi is applied to edges of stage 3..L-1 in
EdgeId order, and within psi the candidate edges are visited in EdgeId
order, which is stage-ascending.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable

from .edgeset import EdgeSet, iter_bits
from .graph import MultiStageGraph, Violation, validate_2msp

SWEEP_ORDER = "stage-asc/edgeid-asc;psi-candidates:edgeid-asc"


class InvalidInstance(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        head = "; ".join(str(v) for v in violations[:3])
        more = f" (+{len(violations) - 3} more)" if len(violations) > 3 else ""
        super().__init__(f"not a 2-MSP instance: {head}{more}")


class KernelInvariantError(AssertionError):
    """An internal invariant of the fixpoint was broken (implementation bug)."""


@dataclass(frozen=True)
class TraceEvent:
    kind: str  # rho-init | chi-prune | psi-prune | fixpoint-pass
    e: int | None
    e_prime: int | None
    pass_no: int
    reason: str

    def to_dict(self) -> dict:
        return {"pass": self.pass_no, "kind": self.kind, "e": self.e,
                "e_prime": self.e_prime, "reason": self.reason}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


class RMap:
    """Per-edge rho-path edge-sets plus the frozen initial snapshot."""

    def __init__(self, n_edges: int, initial: list[int], current: list[int] | None = None):
        self.n_edges = n_edges
        self.initial = tuple(initial)
        self.current = list(initial) if current is None else list(current)

    def __getitem__(self, e: int) -> EdgeSet:
        return EdgeSet(self.current[e], self.n_edges)

    def initial_set(self, e: int) -> EdgeSet:
        return EdgeSet(self.initial[e], self.n_edges)

    def copy(self) -> "RMap":
        return RMap(self.n_edges, list(self.initial), self.current)

    def total_initial(self) -> int:
        return sum(b.bit_count() for b in self.initial)

    def total_current(self) -> int:
        return sum(b.bit_count() for b in self.current)


@dataclass
class ZHResult:
    decision: bool
    kernel: EdgeSet
    rmap: RMap
    graph: MultiStageGraph  # the pre-processed graph the kernel ran on
    trace: list[TraceEvent] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)

    @property
    def answer(self) -> str:
        return "yes" if self.decision else "no"


# ---------------------------------------------------------------- preprocess

def preprocess(g: MultiStageGraph, max_passes: int = 10_000) -> MultiStageGraph:
    """Tidy the labels without changing sigma-path existence.

    Each pass applies, for every vertex: (i) drop label edges not on an
    ``S - ... - v`` path; (ii) for stage > 1, add a missing ``<S,a,1>`` and
    drop the ``<a,*,2>`` edges; (iii) for stage > 1, keep only earlier-stage
    label edges that some predecessor label also holds.  Passes repeat until
    the labels stop changing.  V and E are never modified.
    """
    lam = list(g.label_bits)
    closure = [0] + [g.source_closure_bits(v) for v in range(1, g.n_vertices)]
    firsts = [(i, g.edges[i].v) for i in g.out_edges[g.S]]
    seen = set()
    for _ in range(max_passes):
        before = tuple(lam)
        for v in range(1, g.n_vertices):
            lam[v] &= closure[v]
        for v in range(1, g.n_vertices):
            if g.vertex_stage[v] < 2:
                continue
            for i, a in firsts:
                bit = 1 << i
                # an unreachable <S,a,1> would be stripped again by (i)
                if not lam[v] & bit and closure[v] & bit:
                    lam[v] = (lam[v] | bit) & ~g.out_mask[a]
        for v in range(1, g.n_vertices):
            l = g.vertex_stage[v]
            if l < 2:
                continue
            union = 0
            for i in g.in_edges[v]:
                union |= lam[g.edges[i].u]
            lam[v] = g.slice_bits(lam[v], l, l) | (g.slice_bits(lam[v], 1, l - 1) & union)
        after = tuple(lam)
        if after == before or after in seen:
            break
        seen.add(after)
    return g.with_labels(lam)


# ------------------------------------------------------------------- engine

class _Engine:
    def __init__(self, g: MultiStageGraph, rmap: RMap, trace: bool = False):
        self.g = g
        self.rmap = rmap
        self.R = rmap.current
        self.trace_on = trace
        self.trace: list[TraceEvent] = []
        self.version = 0
        self._gourds: dict[int, tuple[int, int]] = {}
        self.pass_no = 0
        self.prune_events = 0
        self.psi_calls = 0
        self.chi_calls = 0

    def emit(self, kind, e, e_prime, reason):
        if self.trace_on:
            self.trace.append(TraceEvent(kind, e, e_prime, self.pass_no, reason))

    def chi(self, v: int, es: int, log: Callable[[int, str], None] | None = None) -> int:
        g = self.g
        R = self.R
        edges = g.edges
        L = g.L
        D = g.D
        lv = g.vertex_stage[v]
        self.chi_calls += 1
        cur = g.restrict_bits(es, g.S, v)
        if log is not None:
            for i in iter_bits(es & ~cur):
                log(i, "not-on-S-v-path")
        while cur:
            removed = False
            for i in list(iter_bits(cur)):
                if not (cur >> i) & 1:
                    continue
                _, b, k = edges[i]
                if k < lv:
                    if not g.reaches(R[i] & cur, b, v):
                        cur &= ~(1 << i)
                        removed = True
                        if log is not None:
                            log(i, "no-rho-path-to-target")
                elif k == lv and k != L:
                    if not g.reaches(R[i], v, D):
                        cur &= ~(1 << i)
                        removed = True
                        if log is not None:
                            log(i, "no-rho-path-to-sink")
            nxt = g.restrict_bits(cur, g.S, v)
            if log is not None:
                for i in iter_bits(cur & ~nxt):
                    log(i, "not-on-S-v-path")
            if not removed and nxt == cur:
                break
            cur = nxt
        return cur

    def gourd(self, e2: int) -> int:
        """The set A hanging under candidate edge ``e2``."""
        hit = self._gourds.get(e2)
        if hit is not None and hit[0] == self.version:
            return hit[1]
        g = self.g
        R = self.R
        a, b, k = g.edges[e2]
        lb = g.label_bits[b]
        bit2 = 1 << e2
        defining = bit2
        if lb & bit2:
            edges = g.edges
            for x in range(g.edge_offset[k]):
                rx = R[x]
                if not rx & bit2:
                    continue
                y = edges[x].v
                if y == a or g.reaches(rx & lb, y, a):
                    defining |= 1 << x
        A = self.chi(b, defining)
        self._gourds[e2] = (self.version, A)
        return A

    def handle(self, e: int, e2: int, A: int) -> int:
        """The set B for edge ``e`` and candidate ``e2``."""
        g = self.g
        R = self.R
        u = g.edges[e].u
        b = g.edges[e2].v
        need = (1 << e) | (1 << e2)
        C = 0
        for c in iter_bits(A):
            x = R[c] & A
            if x & need != need:
                continue
            d = g.edges[c].v
            if g.restrict_bits(x, d, b) & need == need:
                C |= 1 << c
        if not C:
            return 0
        return self.chi(u, C)

    def psi(self, e: int) -> None:
        g = self.g
        R = self.R
        _, v, _ = g.edges[e]
        self.psi_calls += 1
        start = R[e]
        while True:
            before = R[e]
            for e2 in list(iter_bits(before)):
                A = self.gourd(e2)
                if not self.handle(e, e2, A):
                    R[e] &= ~(1 << e2)
                    self.version += 1
                    self.prune_events += 1
                    self.emit("psi-prune", e, e2, "B-empty")
            kept = g.restrict_bits(R[e], v, g.D)
            if kept != R[e]:
                for e2 in iter_bits(R[e] & ~kept):
                    self.prune_events += 1
                    self.emit("psi-prune", e, e2, "off-v-D-path")
                R[e] = kept
                self.version += 1
            if R[e] == before:
                break
        if R[e] & ~start:
            raise KernelInvariantError(f"psi grew R({e})")
        if R[e] & ~self.rmap.initial[e]:
            raise KernelInvariantError(f"R({e}) escaped R0({e})")


def _rho_bits(g: MultiStageGraph, e: int) -> int:
    lam = g.label_bits
    bit = 1 << e
    cand = 0
    for i, (a, b, _) in enumerate(g.edges):
        if (a == g.S or lam[a] & bit) and lam[b] & bit:
            cand |= 1 << i
    return g.restrict_bits(cand, g.edges[e].v, g.D)


def rho(g: MultiStageGraph, e: int) -> EdgeSet:
    """Edges on ``v - ... - D`` paths whose every vertex label holds ``e``."""
    return EdgeSet(_rho_bits(g, e), g.n_edges)


def init_rmap(g: MultiStageGraph) -> RMap:
    return RMap(g.n_edges, [_rho_bits(g, e) for e in range(g.n_edges)])


def chi(g: MultiStageGraph, r: RMap, v: int, es: EdgeSet) -> EdgeSet:
    if v == g.S:
        raise ValueError("chi is undefined for the source")
    eng = _Engine(g, r.copy())
    return EdgeSet(eng.chi(v, es.bits), g.n_edges)


def psi(g: MultiStageGraph, r: RMap, e: int) -> tuple[EdgeSet, list[TraceEvent]]:
    """Restrain ``R(e)`` against the other rho-path sets.

    Works on a copy of ``r``; returns the stable ``R(e)`` and the prune log.
    """
    l = g.edges[e].l
    if not 1 < l < g.L:
        raise ValueError(f"psi needs an edge with 1 < stage < L, got stage {l}")
    eng = _Engine(g, r.copy(), trace=True)
    eng.psi(e)
    return EdgeSet(eng.R[e], g.n_edges), eng.trace


def zh_solve(g: MultiStageGraph, strict: bool = False, trace: bool = False,
             preprocessed: bool = False) -> ZHResult:
    """Run the full decision procedure on ``g``.

    ``strict`` rejects graphs that are not 2-MSP; otherwise the run proceeds
    and the violations are attached to the result.
    """
    t0 = time.perf_counter()
    violations = validate_2msp(g)
    if strict and violations:
        raise InvalidInstance(violations)
    pg = g if preprocessed else preprocess(g)
    rmap = init_rmap(pg)
    eng = _Engine(pg, rmap, trace=trace)
    if trace:
        for e in range(pg.n_edges):
            eng.emit("rho-init", e, None, f"size={rmap.initial[e].bit_count()}")

    sweep = [e for e, (_, _, l) in enumerate(pg.edges) if 3 <= l <= pg.L - 1]
    R = eng.R
    while True:
        eng.pass_no += 1
        changed = False
        for e in sweep:
            old = R[e]
            eng.psi(e)
            if R[e] != old:
                changed = True
        eng.emit("fixpoint-pass", None, None, "changed" if changed else "stable")
        if not changed:
            break
    sweeps = eng.pass_no

    log = None
    if trace:
        eng.pass_no += 1
        log = lambda i, why: eng.emit("chi-prune", i, None, why)  # noqa: E731

    lam_d = pg.label_bits[pg.D]
    kernel = eng.chi(pg.D, lam_d, log)
    elapsed = time.perf_counter() - t0
    stats = {
        "passes": sweeps,
        "prune_events": eng.prune_events,
        "psi_calls": eng.psi_calls,
        "chi_calls": eng.chi_calls,
        "r0_total": rmap.total_initial(),
        "r_total": rmap.total_current(),
        "n_edges": pg.n_edges,
        "wall_time": elapsed,
        "sweep_order": SWEEP_ORDER,
    }
    return ZHResult(bool(kernel), EdgeSet(kernel, pg.n_edges), rmap, pg,
                    eng.trace, stats, violations)


def compact_kernel(g: MultiStageGraph, strict: bool = False) -> EdgeSet:
    return zh_solve(g, strict=strict).kernel
