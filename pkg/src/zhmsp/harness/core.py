"""Single-instance runs: build from provenance, solve, cross-check, classify."""

from __future__ import annotations

import hashlib
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..generators import (RNG_ALGORITHM, gen_fn_mu, gen_pigeonhole, gen_random_ksat,
                          gen_random_msp, split_clauses)
from ..kernel import InvalidInstance, zh_solve
from ..oracle import Answer, OracleBudget, sat_brute_force, sigma_path_exists
from ..reduction import CnfFormula, parse_dimacs, reduce_full
from .serialize import Instance, content_hash, deserialize_instance

AGREE_YES = "agree-yes"
AGREE_NO = "agree-no"
NECESSITY = "necessity-violation"
SUFFICIENCY = "sufficiency-disagreement"
ORACLE_UNKNOWN = "oracle-unknown"
ERROR = "error"
CLASSES = (AGREE_YES, AGREE_NO, NECESSITY, SUFFICIENCY, ORACLE_UNKNOWN)


def classify(zh: str, oracle: str) -> str:
    """Place one (ZH, oracle) verdict pair in its agreement class."""
    if oracle == Answer.UNKNOWN.value:
        return ORACLE_UNKNOWN
    if zh == oracle:
        return AGREE_YES if zh == "yes" else AGREE_NO
    # the oracle found a sigma-path the kernel lost
    return NECESSITY if oracle == "yes" else SUFFICIENCY


def instance_from_formula(f: CnfFormula, provenance: dict, iid: str | None = None) -> Instance:
    g, rmap = reduce_full(f)
    return Instance(iid or provenance_id(provenance), g, provenance, f, rmap)


def provenance_id(provenance: dict) -> str:
    gen = provenance.get("generator", "file")
    keys = [f"{k}={provenance[k]}" for k in sorted(provenance)
            if k not in ("generator", "rng", "path", "sha256")]
    if gen == "file":
        return f"file:{Path(provenance.get('path', '?')).name}"
    return gen + ("[" + ",".join(keys) + "]" if keys else "")


def build_instance(provenance: dict) -> Instance:
    """Regenerate an instance bit-exactly from its provenance record."""
    gen = provenance.get("generator")
    if gen == "fn":
        f = gen_fn_mu(provenance["n"])
        if provenance.get("drop") is not None:
            f = f.without_clause(provenance["drop"])
        return instance_from_formula(f, provenance)
    if gen == "ksat":
        f = gen_random_ksat(provenance["n"], provenance["m"], provenance["k"], provenance["seed"])
        return instance_from_formula(f, provenance)
    if gen == "php":
        f = gen_pigeonhole(provenance["holes"])
        if f.max_width() > 3:
            f = split_clauses(f)
        return instance_from_formula(f, provenance)
    if gen == "msp":
        g = gen_random_msp(provenance["stages"], provenance["width"], provenance["density"],
                           provenance["seed"], repair=provenance.get("repair", True))
        return Instance(provenance_id(provenance), g, provenance)
    if gen == "file":
        return load_instance_file(provenance["path"])
    raise ValueError(f"unknown generator {gen!r}")


def load_instance_file(path: str | Path) -> Instance:
    """Read an instance JSON file or a DIMACS CNF file (reduced on load)."""
    path = Path(path)
    return instance_from_bytes(path.read_bytes(), str(path))


def instance_from_bytes(data: bytes, name: str = "-") -> Instance:
    prov = {"generator": "file", "path": name, "sha256": hashlib.sha256(data).hexdigest()}
    iid = f"file:{Path(name).name}"
    if data.lstrip()[:1] == b"{":
        g, stored, rmap = deserialize_instance(data)
        return Instance(iid, g, {**prov, "origin": stored}, None, rmap)
    f = parse_dimacs(data)
    if f.max_width() > 3:
        f = split_clauses(f)
    return instance_from_formula(f, prov, iid)


@dataclass
class VerdictRecord:
    index: int
    id: str
    provenance: dict
    classification: str
    zh: str | None = None
    oracle: str | None = None
    sat: str | None = None
    kernel: list[int] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    n_vertices: int = 0
    n_edges: int = 0
    L: int = 0
    graph_sha256: str = ""
    trace_sha256: str | None = None
    violations: int = 0
    zh_seconds: float = 0.0
    oracle_seconds: float = 0.0
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def replay_key(self) -> tuple:
        """The fields a rerun from provenance must reproduce exactly."""
        return (self.zh, self.oracle, tuple(self.kernel),
                tuple(sorted(self.stats.items())), self.graph_sha256, self.trace_sha256)


def trace_digest(trace) -> str:
    h = hashlib.sha256()
    for ev in trace:
        h.update(ev.to_json().encode())
        h.update(b"\n")
    return h.hexdigest()


def run_one(inst: Instance, index: int = 0, budget: OracleBudget | None = None,
            trace: bool = False, strict: bool = False) -> VerdictRecord:
    """Solve one instance with ZH and the oracle; errors land in the record."""
    g = inst.graph
    rec = VerdictRecord(index, inst.id, inst.provenance, ERROR,
                        n_vertices=g.n_vertices, n_edges=g.n_edges, L=g.L,
                        graph_sha256=content_hash(g))
    try:
        t0 = time.perf_counter()
        res = zh_solve(g, strict=strict, trace=trace)
        rec.zh_seconds = time.perf_counter() - t0
    except InvalidInstance as exc:
        rec.error = str(exc)
        rec.violations = len(exc.violations)
        return rec
    rec.zh = res.answer
    rec.kernel = res.kernel.ids()
    rec.stats = {k: v for k, v in res.stats.items() if k not in ("wall_time", "sweep_order")}
    rec.violations = len(res.violations)
    if trace:
        rec.trace_sha256 = trace_digest(res.trace)

    t0 = time.perf_counter()
    rec.oracle = sigma_path_exists(g, budget).value
    rec.oracle_seconds = time.perf_counter() - t0
    if inst.formula is not None and inst.formula.num_vars <= 24:
        rec.sat = sat_brute_force(inst.formula).value
    rec.classification = classify(rec.zh, rec.oracle)
    return rec


def run_provenance(provenance: dict, index: int = 0, budget: OracleBudget | None = None,
                   trace: bool = False, strict: bool = False) -> VerdictRecord:
    try:
        inst = build_instance(provenance)
    except Exception as exc:  # campaign mode records failures instead of raising
        return VerdictRecord(index, provenance_id(provenance), provenance, ERROR,
                             error=f"{type(exc).__name__}: {exc}")
    return run_one(inst, index, budget, trace, strict)


def msp_provenance(stages: int, width: int, density: float, seed: int, repair: bool) -> dict:
    return {"generator": "msp", "stages": stages, "width": width, "density": density,
            "seed": seed, "repair": repair, "rng": RNG_ALGORITHM}


def ksat_provenance(n: int, m: int, k: int, seed: int) -> dict:
    return {"generator": "ksat", "n": n, "m": m, "k": k, "seed": seed, "rng": RNG_ALGORITHM}
