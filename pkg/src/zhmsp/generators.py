"""Seeded instance factories.

Randomness comes from :class:`SeededRng`, which draws only through
``random.Random.getrandbits`` (MT19937 seeded from an int) and does its own
rejection sampling, so an instance regenerates bit-exactly from
``(parameters, seed)`` on any platform and Python version.
"""

from __future__ import annotations

import random
from itertools import combinations

from .graph import MultiStageGraph, build_graph, validate_2msp
from .kernel import preprocess
from .reduction import CnfFormula

RNG_ALGORITHM = "mt19937-getrandbits/rejection-v1"
MASK64 = (1 << 64) - 1


class GenerationFailed(RuntimeError):
    pass


class SeededRng:
    algorithm = RNG_ALGORITHM

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self._r = random.Random(self.seed)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError("n must be positive")
        k = max(1, (n - 1).bit_length())
        while True:
            x = self._r.getrandbits(k)
            if x < n:
                return x

    def between(self, lo: int, hi: int) -> int:
        return lo + self.below(hi - lo + 1)

    def unit(self) -> float:
        return self._r.getrandbits(53) / (1 << 53)

    def coin(self, p: float) -> bool:
        return self.unit() < p

    def sample(self, pool: list, k: int) -> list:
        pool = list(pool)
        out = []
        for _ in range(k):
            out.append(pool.pop(self.below(len(pool))))
        return out

    def shuffle(self, xs: list) -> None:
        for i in range(len(xs) - 1, 0, -1):
            j = self.below(i + 1)
            xs[i], xs[j] = xs[j], xs[i]


def derive_seed(base: int, *parts: int) -> int:
    """Deterministic 64-bit child seed (splitmix64 over the parts)."""
    x = int(base) & MASK64
    for p in parts:
        x = (x + 0x9E3779B97F4A7C15 + (int(p) & MASK64)) & MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        x = z ^ (z >> 31)
    return x


# ------------------------------------------------------------------- CNF

def gen_fn_mu(n: int) -> CnfFormula:
    """The minimal-unsatisfiable family: every polarity pattern over n variables.

    Clauses are ordered by the number of negated variables, then by the
    negated subset in lexicographic order; literals by variable index.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    clauses = []
    for r in range(n + 1):
        for neg in combinations(range(1, n + 1), r):
            clauses.append([-i if i in neg else i for i in range(1, n + 1)])
    return CnfFormula(n, clauses)


def gen_random_ksat(n: int, m: int, k: int, seed: int) -> CnfFormula:
    if k not in (2, 3):
        raise ValueError("k must be 2 or 3")
    if n < k:
        raise ValueError("need n >= k")
    rng = SeededRng(seed)
    clauses = []
    for _ in range(m):
        vs = rng.sample(list(range(1, n + 1)), k)
        clauses.append([v if rng.coin(0.5) else -v for v in vs])
    return CnfFormula(n, clauses)


def gen_pigeonhole(holes: int) -> CnfFormula:
    """holes+1 pigeons into ``holes`` holes; variable p*holes + h + 1 = pigeon p in hole h."""
    if holes < 1:
        raise ValueError("holes must be >= 1")
    pigeons = holes + 1

    def var(p: int, h: int) -> int:
        return p * holes + h + 1

    clauses = [[var(p, h) for h in range(holes)] for p in range(pigeons)]
    for h in range(holes):
        for p, q in combinations(range(pigeons), 2):
            clauses.append([-var(p, h), -var(q, h)])
    return CnfFormula(pigeons * holes, clauses)


def split_clauses(f: CnfFormula) -> CnfFormula:
    """Standard 3-CNF conversion of wide clauses using fresh variables."""
    nv = f.num_vars
    out = []
    for c in f.clauses:
        c = list(c)
        while len(c) > 3:
            nv += 1
            out.append(c[:2] + [nv])
            c = [-nv] + c[2:]
        out.append(c)
    return CnfFormula(nv, out)


# ------------------------------------------------------------------- MSP

def _stage_edges(rng: SeededRng, parents: list[int], width: int, indeg: dict,
                 tainted: dict, out_cap: dict, single_only: bool) -> list[tuple[int, ...]] | None:
    """Children of one stage as tuples of parent positions, or None on a dead end."""
    order = list(range(len(parents)))
    rng.shuffle(order)
    children: list[list[int]] = []
    used = {p: 0 for p in order}
    pending = list(order)
    while pending:
        p = pending.pop()
        if (not single_only and pending and not tainted[p] and rng.coin(0.4)):
            q = next((x for x in reversed(pending) if not tainted[x]), None)
            if q is not None:
                pending.remove(q)
                children.append([p, q])
                used[p] += 1
                used[q] += 1
                continue
        children.append([p])
        used[p] += 1
    if len(children) > width:
        return None
    # optional extra fan-out from parents with spare capacity
    for p in order:
        if len(children) >= width:
            break
        if used[p] < out_cap[p] and rng.coin(0.3):
            children.append([p])
            used[p] += 1
    # optional second parent for single-parent children
    if not single_only:
        for c in children:
            if len(c) == 1 and not tainted[c[0]] and rng.coin(0.3):
                opts = [p for p in order if p != c[0] and not tainted[p] and used[p] < out_cap[p]]
                if opts:
                    q = opts[rng.below(len(opts))]
                    c.append(q)
                    used[q] += 1
    if any(used[p] > out_cap[p] for p in order):
        return None
    if len(children) > 3 and sum(1 for c in children if len(c) == 2) > 2:
        return None
    rng.shuffle(children)
    return [tuple(sorted(c)) for c in children]


def _random_structure(rng: SeededRng, L: int, width: int):
    sizes = [1, rng.between(1, width)]
    edges = [(0, i, 1) for i in range(sizes[1])]
    indeg = [1] * sizes[1]
    tainted = [False] * sizes[1]  # stage 1 is exempt from the downstream rule
    for l in range(2, L):
        last_aux = l == L - 1
        np_ = sizes[l - 1]
        # out-degree may not exceed in-degree on stages 2..L-3
        caps = {p: (indeg[p] if 2 <= l - 1 < L - 2 else 2) for p in range(np_)}
        kids = None
        for _ in range(50):
            kids = _stage_edges(rng, list(range(np_)), width, indeg,
                                dict(enumerate(tainted)), caps, single_only=last_aux)
            if kids is not None:
                break
        if kids is None:
            return None
        sizes.append(len(kids))
        new_indeg, new_taint = [], []
        for h, ps in enumerate(kids):
            for p in ps:
                edges.append((p, h, l))
            new_indeg.append(len(ps))
            new_taint.append(any(tainted[p] for p in ps) or len(ps) <= 1)
        indeg, tainted = new_indeg, new_taint
    sizes.append(1)
    edges += [(i, 0, L) for i in range(sizes[L - 1])]
    return sizes, edges


def _plant_corridors(rng: SeededRng, g: MultiStageGraph, labels: list[int]) -> None:
    """For each edge, add it to the labels along one random walk from its head to D.

    Stage-2 edges carry their ``<S,a,1>`` along.  Pre-processing can then
    never strip an edge from ``lambda(D)``.
    """
    first = {g.edges[i].v: i for i in g.out_edges[g.S]}
    for i, (a, b, l) in enumerate(g.edges):
        bits = 1 << i
        if l == 2:
            bits |= 1 << first[a]
        w = b
        while w != g.D:
            labels[w] |= bits
            outs = g.out_edges[w]
            w = g.edges[outs[rng.below(len(outs))]].v


def gen_random_msp(stage_count: int, width: int, label_density: float, seed: int,
                   repair: bool = True, max_retries: int = 200) -> MultiStageGraph:
    """Random 2-MSP instance with ``L = stage_count`` and at most ``width`` vertices per stage.

    Each label is a density-weighted sample of the edges on ``S - ... - v``
    paths plus the forced ``<S,a,1>`` of stage-1 vertices; ``lambda(D) = E``.
    With ``repair`` (the default) one random corridor per edge toward D is
    added and the labels are passed through :func:`~zhmsp.kernel.preprocess`,
    so the result already satisfies the label properties.  ``repair=False``
    returns the raw sample, which is 2-MSP but not pre-processed.
    """
    if stage_count < 5:
        raise ValueError("stage_count must be >= 5")
    if width < 1:
        raise ValueError("width must be >= 1")
    if not 0.0 <= label_density <= 1.0:
        raise ValueError("label_density must lie in [0, 1]")
    rng = SeededRng(seed)
    for _ in range(max_retries):
        shape = _random_structure(rng, stage_count, width)
        if shape is None:
            continue
        sizes, edges = shape
        g = build_graph(sizes, edges, [None] + [0] * (sum(sizes) - 1))
        labels = [0] * g.n_vertices
        for v in range(1, g.n_vertices):
            if v == g.D:
                labels[v] = g.all_bits
                continue
            closure = g.source_closure_bits(v)
            bits = 0
            for i in range(g.n_edges):
                if closure >> i & 1 and rng.coin(label_density):
                    bits |= 1 << i
            if g.vertex_stage[v] == 1:
                bits |= g.in_mask[v]
            labels[v] = bits
        if repair:
            _plant_corridors(rng, g, labels)
            out = preprocess(g.with_labels(labels))
        else:
            out = g.with_labels(labels)
        if not validate_2msp(out):
            return out
    raise GenerationFailed(
        f"no valid instance for stage_count={stage_count}, width={width} after {max_retries} tries")
