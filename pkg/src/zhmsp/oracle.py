"""Exhaustive reference engines.

These are deliberately plain exponential searches so that their answers are
easy to audit.  Budgets turn an unfinished search into ``UNKNOWN`` rather
than a guess.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np

from .edgeset import EdgeSet
from .graph import MultiStageGraph
from .reduction import CnfFormula

MAX_SAT_VARS = 24


class Answer(str, enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"

    def __str__(self) -> str:
        return self.value


class BudgetExceeded(RuntimeError):
    pass


class TooManyVariables(ValueError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_nodes: int = 10_000_000
    max_millis: int = 30_000


class _Search:
    def __init__(self, g: MultiStageGraph, budget: OracleBudget):
        self.g = g
        self.budget = budget
        self.nodes = 0
        self.deadline = time.monotonic() + budget.max_millis / 1000.0

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.budget.max_nodes:
            raise BudgetExceeded(f"more than {self.budget.max_nodes} search nodes")
        if self.nodes & 0x3FF == 0 and time.monotonic() > self.deadline:
            raise BudgetExceeded(f"more than {self.budget.max_millis} ms")

    def walk(self, first_only: bool):
        """Depth-first over S-D paths, keeping only prefixes inside each label."""
        g = self.g
        lam = g.label_bits
        found: list[int] = []
        stack = [(g.S, 0, iter(g.out_edges[g.S]))]
        while stack:
            v, prefix, it = stack[-1]
            i = next(it, None)
            if i is None:
                stack.pop()
                continue
            self.tick()
            w = g.edges[i].v
            p = prefix | (1 << i)
            if p & ~lam[w]:
                continue
            if w == g.D:
                found.append(p)
                if first_only:
                    return found
                continue
            stack.append((w, p, iter(g.out_edges[w])))
        return found


def sigma_path_exists(g: MultiStageGraph, budget: OracleBudget | None = None) -> Answer:
    try:
        found = _Search(g, budget or OracleBudget()).walk(first_only=True)
    except BudgetExceeded:
        return Answer.UNKNOWN
    return Answer.YES if found else Answer.NO


def find_sigma_path(g: MultiStageGraph, budget: OracleBudget | None = None) -> EdgeSet | None:
    found = _Search(g, budget or OracleBudget()).walk(first_only=True)
    return EdgeSet(found[0], g.n_edges) if found else None


def enumerate_sigma_paths(g: MultiStageGraph, budget: OracleBudget | None = None) -> list[EdgeSet]:
    """All sigma-paths in DFS order (EdgeId-ascending children).

    Raises :class:`BudgetExceeded` when the search does not finish.
    """
    found = _Search(g, budget or OracleBudget()).walk(first_only=False)
    return [EdgeSet(p, g.n_edges) for p in found]


def _clause_masks(f: CnfFormula):
    pos = np.zeros(f.num_clauses, dtype=np.int64)
    neg = np.zeros(f.num_clauses, dtype=np.int64)
    for j, c in enumerate(f.clauses):
        for x in c:
            if x > 0:
                pos[j] |= 1 << (x - 1)
            else:
                neg[j] |= 1 << (-x - 1)
    return pos, neg


def sat_models(f: CnfFormula, chunk: int = 1 << 16):
    """Yield satisfying assignments as int bitmasks (bit i = variable i+1)."""
    n = f.num_vars
    if n > MAX_SAT_VARS:
        raise TooManyVariables(f"{n} variables > {MAX_SAT_VARS}")
    pos, neg = _clause_masks(f)
    total = 1 << n
    for start in range(0, total, chunk):
        a = np.arange(start, min(total, start + chunk), dtype=np.int64)
        ok = np.ones(a.shape, dtype=bool)
        for p, q in zip(pos, neg):
            ok &= ((a & p) != 0) | ((~a & q) != 0)
            if not ok.any():
                break
        for x in a[ok]:
            yield int(x)


def sat_brute_force(f: CnfFormula) -> Answer:
    """Decide satisfiability by trying every assignment."""
    for _ in sat_models(f):
        return Answer.YES
    return Answer.NO


def count_models(f: CnfFormula) -> int:
    return sum(1 for _ in sat_models(f))
