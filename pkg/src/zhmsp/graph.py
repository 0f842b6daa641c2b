"""Labeled multi-stage graphs.

Vertices are dense integers assigned stage by stage, so the source ``S`` is
vertex 0 and the sink ``D`` is the last vertex.  Edges are sorted by
``(stage, tail, head)`` and that order defines their EdgeIds; each stage
therefore owns a contiguous range of EdgeId bits, which is what the
stage-by-stage reachability routines below exploit.

Labels are kept as int bitsets over EdgeIds.  Public helpers accept and
return :class:`~zhmsp.edgeset.EdgeSet`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

from .edgeset import EdgeSet, iter_bits

MIN_L = 5


class GraphError(ValueError):
    """Base class for structural errors raised while building a graph."""


class MalformedStage(GraphError):
    pass


class DanglingEdge(GraphError):
    pass


class BadLabel(GraphError):
    pass


class Edge(NamedTuple):
    u: int
    v: int
    l: int


@dataclass(frozen=True)
class Violation:
    """A structural or label property that a graph fails."""

    item: str
    vertex: int | None = None
    edge: int | None = None
    detail: str = ""

    def __str__(self) -> str:
        where = []
        if self.vertex is not None:
            where.append(f"vertex {self.vertex}")
        if self.edge is not None:
            where.append(f"edge {self.edge}")
        loc = f" at {', '.join(where)}" if where else ""
        return f"[{self.item}]{loc}: {self.detail}"


LabelSpec = Union[EdgeSet, int, Iterable[int]]


class MultiStageGraph:
    """Immutable labeled multi-stage graph ``<V, E, S, D, L, lambda>``.

    Build instances with :func:`build_graph`; the constructor trusts its
    arguments.
    """

    def __init__(self, stage_sizes: Sequence[int], edges: Sequence[Edge],
                 label_bits: Sequence[int], min_L: int = MIN_L):
        self.stage_sizes = tuple(stage_sizes)
        self.L = len(self.stage_sizes) - 1
        self.min_L = min_L
        self.edges = tuple(edges)
        self.n_edges = len(self.edges)
        self.n_vertices = sum(self.stage_sizes)
        self.label_bits = tuple(label_bits)
        self.S = 0
        self.D = self.n_vertices - 1
        self.all_bits = (1 << self.n_edges) - 1

        self.vertex_offset = []
        stage_of = []
        off = 0
        for l, n in enumerate(self.stage_sizes):
            self.vertex_offset.append(off)
            stage_of.extend([l] * n)
            off += n
        self.vertex_stage = tuple(stage_of)

        out_edges: list[list[int]] = [[] for _ in range(self.n_vertices)]
        in_edges: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for i, (u, v, _) in enumerate(self.edges):
            out_edges[u].append(i)
            in_edges[v].append(i)
        self.out_edges = tuple(tuple(x) for x in out_edges)
        self.in_edges = tuple(tuple(x) for x in in_edges)
        self.out_mask = tuple(sum(1 << i for i in x) for x in out_edges)
        self.in_mask = tuple(sum(1 << i for i in x) for x in in_edges)

        # per-stage edge ranges; index 0 unused
        L = self.L
        self.edge_offset = [0] * (L + 2)
        self.edge_count = [0] * (L + 1)
        for _, _, l in self.edges:
            self.edge_count[l] += 1
        pos = 0
        for l in range(1, L + 1):
            self.edge_offset[l] = pos
            pos += self.edge_count[l]
        self.edge_offset[L + 1] = pos
        self.stage_mask = [0] * (L + 1)
        for l in range(1, L + 1):
            self.stage_mask[l] = ((1 << self.edge_count[l]) - 1) << self.edge_offset[l]

        # stage-local tail/head bits of each edge
        self._local_tail = [0] * self.n_edges
        self._local_head = [0] * self.n_edges
        for i, (u, v, l) in enumerate(self.edges):
            self._local_tail[i] = 1 << (u - self.vertex_offset[l - 1])
            self._local_head[i] = 1 << (v - self.vertex_offset[l])
        self._fwd = [dict() for _ in range(L + 1)]
        self._bwd = [dict() for _ in range(L + 1)]
        self._heads = [dict() for _ in range(L + 1)]
        self._tails = [dict() for _ in range(L + 1)]
        self._hash = None

    # ------------------------------------------------------------------ basics

    def stage(self, v: int) -> int:
        return self.vertex_stage[v]

    def vertices(self, l: int | None = None) -> range:
        if l is None:
            return range(self.n_vertices)
        off = self.vertex_offset[l]
        return range(off, off + self.stage_sizes[l])

    def position(self, v: int) -> tuple[int, int]:
        l = self.vertex_stage[v]
        return l, v - self.vertex_offset[l]

    def vertex(self, stage: int, index: int) -> int:
        if not 0 <= index < self.stage_sizes[stage]:
            raise IndexError(f"no vertex {stage}:{index}")
        return self.vertex_offset[stage] + index

    def in_degree(self, v: int) -> int:
        return len(self.in_edges[v])

    def out_degree(self, v: int) -> int:
        return len(self.out_edges[v])

    def edge_id(self, u: int, v: int) -> int:
        for i in self.out_edges[u]:
            if self.edges[i].v == v:
                return i
        raise KeyError(f"no edge {u}->{v}")

    def label(self, v: int) -> EdgeSet:
        if v == self.S:
            raise KeyError("the source carries no label")
        return EdgeSet(self.label_bits[v], self.n_edges)

    def edge_set(self, ids: Iterable[int] | int = ()) -> EdgeSet:
        if isinstance(ids, int):
            return EdgeSet(ids, self.n_edges)
        return EdgeSet.from_ids(ids, self.n_edges)

    def all_edges(self) -> EdgeSet:
        return EdgeSet(self.all_bits, self.n_edges)

    def with_labels(self, label_bits: Sequence[int]) -> "MultiStageGraph":
        return MultiStageGraph(self.stage_sizes, self.edges, label_bits, self.min_L)

    def edge_triples_local(self) -> list[tuple[int, int, int]]:
        """Edges as ``(tail index in stage, head index in stage, stage)``."""
        out = []
        for u, v, l in self.edges:
            out.append((u - self.vertex_offset[l - 1], v - self.vertex_offset[l], l))
        return out

    def same_as(self, other: "MultiStageGraph") -> bool:
        return (self.stage_sizes == other.stage_sizes and self.edges == other.edges
                and self.label_bits == other.label_bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultiStageGraph):
            return NotImplemented
        return self.same_as(other)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.stage_sizes, self.edges, self.label_bits))
        return self._hash

    def __repr__(self) -> str:
        return (f"MultiStageGraph(L={self.L}, |V|={self.n_vertices}, "
                f"|E|={self.n_edges})")

    # ----------------------------------------------------- per-stage lookups

    def _fwd_edges(self, l: int, tails: int) -> int:
        """Local edge mask of stage-``l`` edges whose tail is in ``tails``."""
        cache = self._fwd[l]
        r = cache.get(tails)
        if r is None:
            r = 0
            off = self.edge_offset[l]
            lt = self._local_tail
            for j in range(self.edge_count[l]):
                if lt[off + j] & tails:
                    r |= 1 << j
            cache[tails] = r
        return r

    def _bwd_edges(self, l: int, heads: int) -> int:
        cache = self._bwd[l]
        r = cache.get(heads)
        if r is None:
            r = 0
            off = self.edge_offset[l]
            lh = self._local_head
            for j in range(self.edge_count[l]):
                if lh[off + j] & heads:
                    r |= 1 << j
            cache[heads] = r
        return r

    def _heads_of(self, l: int, em: int) -> int:
        cache = self._heads[l]
        r = cache.get(em)
        if r is None:
            r = 0
            off = self.edge_offset[l]
            for j in iter_bits(em):
                r |= self._local_head[off + j]
            cache[em] = r
        return r

    def _tails_of(self, l: int, em: int) -> int:
        cache = self._tails[l]
        r = cache.get(em)
        if r is None:
            r = 0
            off = self.edge_offset[l]
            for j in iter_bits(em):
                r |= self._local_tail[off + j]
            cache[em] = r
        return r

    # --------------------------------------------------- bitset connectivity

    def reaches(self, bits: int, s: int, t: int) -> bool:
        """True iff some path ``s - ... - t`` with at least one edge lies in ``bits``."""
        a = self.vertex_stage[s]
        b = self.vertex_stage[t]
        if a >= b:
            return False
        front = 1 << (s - self.vertex_offset[a])
        eoff = self.edge_offset
        ecnt = self.edge_count
        fwd = self._fwd
        heads = self._heads
        for l in range(a + 1, b + 1):
            em = (bits >> eoff[l]) & ((1 << ecnt[l]) - 1)
            if not em:
                return False
            x = fwd[l].get(front)
            if x is None:
                x = self._fwd_edges(l, front)
            em &= x
            if not em:
                return False
            front = heads[l].get(em)
            if front is None:
                front = self._heads_of(l, em)
        return (front >> (t - self.vertex_offset[b])) & 1 == 1

    def restrict_bits(self, bits: int, u: int, v: int) -> int:
        """Edges of ``bits`` lying on at least one ``u - ... - v`` path inside ``bits``."""
        a = self.vertex_stage[u]
        b = self.vertex_stage[v]
        if a >= b or not bits:
            return 0
        eoff = self.edge_offset
        ecnt = self.edge_count
        fwd = self._fwd
        heads = self._heads
        front = 1 << (u - self.vertex_offset[a])
        layers = []
        for l in range(a + 1, b + 1):
            em = (bits >> eoff[l]) & ((1 << ecnt[l]) - 1)
            if not em:
                return 0
            x = fwd[l].get(front)
            if x is None:
                x = self._fwd_edges(l, front)
            em &= x
            if not em:
                return 0
            layers.append(em)
            front = heads[l].get(em)
            if front is None:
                front = self._heads_of(l, em)
        back = 1 << (v - self.vertex_offset[b])
        if not front & back:
            return 0
        out = 0
        bwd = self._bwd
        tails = self._tails
        for l in range(b, a, -1):
            x = bwd[l].get(back)
            if x is None:
                x = self._bwd_edges(l, back)
            em = layers[l - a - 1] & x
            out |= em << eoff[l]
            back = tails[l].get(em)
            if back is None:
                back = self._tails_of(l, em)
        return out

    def slice_bits(self, bits: int, i: int, j: int) -> int:
        i = max(i, 1)
        j = min(j, self.L)
        if i > j:
            return 0
        lo = self.edge_offset[i]
        hi = self.edge_offset[j + 1]
        return bits & (((1 << (hi - lo)) - 1) << lo)

    def source_closure_bits(self, v: int) -> int:
        """``[E]_S^v`` as a bitset."""
        return self.restrict_bits(self.all_bits, self.S, v)


# ----------------------------------------------------------------- building

def _label_bits(spec: LabelSpec, n_edges: int, where: str) -> int:
    if isinstance(spec, EdgeSet):
        if spec.universe != n_edges:
            raise BadLabel(f"{where}: label universe {spec.universe} != |E| = {n_edges}")
        return spec.bits
    if isinstance(spec, int):
        if spec < 0 or spec >> n_edges:
            raise BadLabel(f"{where}: label bitset out of range")
        return spec
    bits = 0
    for eid in spec:
        if not isinstance(eid, int) or isinstance(eid, bool) or not 0 <= eid < n_edges:
            raise BadLabel(f"{where}: edge id {eid!r} out of range 0..{n_edges - 1}")
        bits |= 1 << eid
    return bits


def build_graph(stage_sizes: Sequence[int],
                edges: Iterable[tuple[int, int, int]],
                labels: Mapping[tuple[int, int], LabelSpec] | Sequence[LabelSpec | None],
                min_L: int = MIN_L) -> MultiStageGraph:
    """Validate the shape of a labeled multi-stage graph and build it.

    ``edges`` holds ``(tail, head, stage)`` triples where ``tail`` indexes a
    vertex within stage ``stage - 1`` and ``head`` a vertex within ``stage``.
    ``labels`` maps ``(stage, index)`` to a label, or is a sequence indexed by
    global vertex id (entry for ``S`` ignored).  Label EdgeIds refer to the
    ``(stage, tail, head)`` ordering of the edges.
    """
    sizes = [int(n) for n in stage_sizes]
    L = len(sizes) - 1
    if L < min_L:
        raise MalformedStage(f"L = {L} < {min_L}")
    if sizes[0] != 1 or sizes[L] != 1:
        raise MalformedStage(
            f"source and sink stages must be singletons (got {sizes[0]} and {sizes[L]})")
    for l, n in enumerate(sizes):
        if n < 1:
            raise MalformedStage(f"stage {l} is empty")

    offsets = [0]
    for n in sizes:
        offsets.append(offsets[-1] + n)

    triples = []
    seen = set()
    for k, e in enumerate(edges):
        try:
            t, h, l = (int(x) for x in e)
        except (TypeError, ValueError):
            raise DanglingEdge(f"edge #{k}: expected (tail, head, stage), got {e!r}") from None
        if not 1 <= l <= L:
            raise DanglingEdge(f"edge #{k} {e!r}: stage {l} outside 1..{L}")
        if not 0 <= t < sizes[l - 1]:
            raise DanglingEdge(f"edge #{k} {e!r}: no tail vertex {l - 1}:{t}")
        if not 0 <= h < sizes[l]:
            raise DanglingEdge(f"edge #{k} {e!r}: no head vertex {l}:{h}")
        key = (l, t, h)
        if key in seen:
            raise DanglingEdge(f"edge #{k} {e!r}: duplicate edge")
        seen.add(key)
        triples.append(key)
    triples.sort()
    edge_list = [Edge(offsets[l - 1] + t, offsets[l] + h, l) for l, t, h in triples]
    n_edges = len(edge_list)

    n_vertices = offsets[-1]
    bits = [0] * n_vertices
    if isinstance(labels, Mapping):
        for key in labels:
            try:
                l, i = key
            except (TypeError, ValueError):
                raise BadLabel(f"label key {key!r} is not (stage, index)") from None
            if not (0 <= l <= L and 0 <= i < sizes[l]):
                raise BadLabel(f"label key {l}:{i} names no vertex")
        for v in range(1, n_vertices):
            l = next(s for s in range(L + 1) if offsets[s + 1] > v)
            key = (l, v - offsets[l])
            if key not in labels:
                raise BadLabel(f"vertex {l}:{v - offsets[l]} has no label")
            bits[v] = _label_bits(labels[key], n_edges, f"label of {l}:{v - offsets[l]}")
    else:
        seq = list(labels)
        if len(seq) != n_vertices:
            raise BadLabel(f"expected {n_vertices} labels, got {len(seq)}")
        for v in range(1, n_vertices):
            if seq[v] is None:
                raise BadLabel(f"vertex {v} has no label")
            bits[v] = _label_bits(seq[v], n_edges, f"label of vertex {v}")
    return MultiStageGraph(sizes, edge_list, bits, min_L)


# -------------------------------------------------------------- operators

def restrict(g: MultiStageGraph, es: EdgeSet, u: int, v: int) -> EdgeSet:
    """Edges of ``es`` lying on some ``u - ... - v`` path contained in ``es``."""
    return EdgeSet(g.restrict_bits(es.bits, u, v), g.n_edges)


def slice_edges(g: MultiStageGraph, es: EdgeSet, i: int, j: int) -> EdgeSet:
    """Edges of ``es`` whose stage lies in ``[i, j]``; empty when ``i > j``."""
    return EdgeSet(g.slice_bits(es.bits, i, j), g.n_edges)


def _as_chain(g: MultiStageGraph, bits: int) -> list[int] | None:
    """EdgeIds of ``bits`` in path order, or None if they are not one contiguous path."""
    ids = list(iter_bits(bits))
    if not ids:
        return None
    for x, y in zip(ids, ids[1:]):
        ex, ey = g.edges[x], g.edges[y]
        if ey.l != ex.l + 1 or ey.u != ex.v:
            return None
    return ids


def is_omega_path(g: MultiStageGraph, p: EdgeSet) -> bool:
    ids = _as_chain(g, p.bits)
    if ids is None:
        return False
    prefix = 0
    for i in ids:
        prefix |= 1 << i
        v = g.edges[i].v
        if prefix & ~g.label_bits[v]:
            return False
    return True


def is_sigma_path(g: MultiStageGraph, p: EdgeSet) -> bool:
    ids = _as_chain(g, p.bits)
    if ids is None:
        return False
    if g.edges[ids[0]].u != g.S or g.edges[ids[-1]].v != g.D:
        return False
    return is_omega_path(g, p)


def f_metric(g: MultiStageGraph) -> int:
    return sum(g.in_degree(v) - 1 for v in range(1, g.D))


# ------------------------------------------------------------- validators

def validate_2msp(g: MultiStageGraph) -> list[Violation]:
    """Check the six structural items of the restricted (2-MSP) form."""
    out: list[Violation] = []
    L = g.L
    indeg = [g.in_degree(v) for v in range(g.n_vertices)]
    outdeg = [g.out_degree(v) for v in range(g.n_vertices)]

    for v in range(g.n_vertices):
        if v != g.D and outdeg[v] == 0:
            out.append(Violation("1", vertex=v, detail="out-degree 0"))
        if v != g.S and indeg[v] == 0:
            out.append(Violation("1", vertex=v, detail="in-degree 0"))

    for v in range(1, g.D):
        if indeg[v] > 2:
            out.append(Violation("2", vertex=v, detail=f"in-degree {indeg[v]} > 2"))
    for v in g.vertices(L - 1):
        if indeg[v] != 1:
            out.append(Violation("2", vertex=v,
                                 detail=f"stage L-1 vertex has in-degree {indeg[v]} != 1"))

    # a single-in-degree vertex strictly inside (1, L) forbids multi-in-degree
    # vertices (other than D) anywhere downstream of it
    tainted = [False] * g.n_vertices
    origin = [-1] * g.n_vertices
    for v in range(g.n_vertices):
        l = g.vertex_stage[v]
        if v == g.D:
            continue
        for i in g.in_edges[v]:
            u = g.edges[i].u
            if tainted[u]:
                tainted[v] = True
                origin[v] = origin[u]
                break
        if tainted[v] and indeg[v] > 1:
            out.append(Violation(
                "3", vertex=v,
                detail=f"in-degree {indeg[v]} downstream of single-in-degree vertex {origin[v]}"))
        if 1 < l < L and indeg[v] <= 1 and not tainted[v]:
            tainted[v] = True
            origin[v] = v

    for l in range(2, L):
        if g.stage_sizes[l] > 3:
            multi = [v for v in g.vertices(l) if indeg[v] == 2]
            if len(multi) > 2:
                out.append(Violation(
                    "4", vertex=multi[2],
                    detail=f"stage {l} has {len(multi)} in-degree-2 vertices among {g.stage_sizes[l]}"))

    for l in range(2, L - 2):
        for v in g.vertices(l):
            if outdeg[v] > indeg[v]:
                out.append(Violation(
                    "5", vertex=v, detail=f"out-degree {outdeg[v]} > in-degree {indeg[v]}"))

    if g.label_bits[g.D] != g.all_bits:
        missing = g.all_bits & ~g.label_bits[g.D]
        out.append(Violation("6", vertex=g.D, edge=next(iter_bits(missing)),
                             detail="label of D is not E"))
    for i in g.out_edges[g.S]:
        a = g.edges[i].v
        if not (g.label_bits[a] >> i) & 1:
            out.append(Violation("6", vertex=a, edge=i, detail="<S,a,1> missing from label of a"))
    return out


def check_properties(g: MultiStageGraph) -> list[Violation]:
    """Check the three label properties required before the kernel runs."""
    out: list[Violation] = []
    for v in range(1, g.n_vertices):
        lam = g.label_bits[v]
        extra = lam & ~g.source_closure_bits(v)
        for i in iter_bits(extra):
            out.append(Violation("P1", vertex=v, edge=i, detail="label edge not on any S-v path"))

    stage1 = {g.edges[i].v: i for i in g.out_edges[g.S]}
    for v in range(1, g.n_vertices):
        lam = g.label_bits[v]
        for i in iter_bits(g.slice_bits(lam, 2, 2)):
            a = g.edges[i].u
            src = stage1.get(a)
            if src is None or not (lam >> src) & 1:
                out.append(Violation("P2", vertex=v, edge=i,
                                     detail="stage-2 edge labelled without its <S,a,1>"))

    for v in range(1, g.n_vertices):
        l = g.vertex_stage[v]
        if l < 2:
            continue
        union = 0
        for i in g.in_edges[v]:
            union |= g.label_bits[g.edges[i].u]
        low = g.slice_bits(g.label_bits[v], 1, l - 1)
        for i in iter_bits(low & ~union):
            out.append(Violation("P3", vertex=v, edge=i,
                                 detail="earlier-stage label edge absent from every predecessor label"))
    return out
