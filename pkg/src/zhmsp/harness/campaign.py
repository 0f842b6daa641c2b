"""Batch cross-checking of ZH against the oracle over a generated corpus.

A campaign is described by a JSON config::

    {"corpus": [{"kind": "msp", "count": 500, "stages": [5, 9], "width": [2, 4],
                 "density": [0.9, 0.95], "repair": "mixed", "seed": 1},
                {"kind": "ksat", "count": 200, "n": [3, 7], "m": [2, 8], "k": 3, "seed": 2},
                {"kind": "fn", "n": [2, 3], "drop_each": true},
                {"kind": "php", "holes": [1, 2]},
                {"kind": "files", "paths": ["cases/*.json"]}],
     "budget": {"max_nodes": 10000000, "max_millis": 30000},
     "workers": 1, "trace": false, "strict": false, "minimize": true,
     "output_dir": "runs/demo"}

Results go to ``records.jsonl`` (one verdict per line, corpus order),
``summary.json`` and ``summary.txt``; disagreeing instances and their
minimized forms are archived under ``disagreements/``.
"""

from __future__ import annotations

import glob
import json
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..generators import SeededRng, derive_seed, gen_fn_mu
from ..oracle import OracleBudget
from ..reduction import emit_dimacs
from .core import (CLASSES, ERROR, NECESSITY, SUFFICIENCY, VerdictRecord, build_instance,
                   ksat_provenance, msp_provenance, run_provenance)
from .minimize import PredicateFlaky, make_disagree, minimize
from .serialize import serialize_instance

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NECESSITY = 2
EXIT_SUFFICIENCY = 3
WORKERS_ENV = "ZHMSP_WORKERS"


class ConfigError(ValueError):
    pass


@dataclass
class CampaignConfig:
    corpus: list[dict]
    budget: OracleBudget = field(default_factory=OracleBudget)
    workers: int = 1
    trace: bool = False
    strict: bool = False
    minimize: bool = True
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        unknown = set(d) - {"corpus", "budget", "workers", "trace", "strict", "minimize",
                            "output_dir"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if not isinstance(d.get("corpus"), list):
            raise ConfigError("config needs a 'corpus' list")
        budget = OracleBudget(**d.get("budget", {}))
        return cls(d["corpus"], budget, int(d.get("workers", 1)), bool(d.get("trace", False)),
                   bool(d.get("strict", False)), bool(d.get("minimize", True)),
                   d.get("output_dir"))

    @classmethod
    def load(cls, path: str | Path) -> "CampaignConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None


@dataclass
class CampaignResult:
    records: list[VerdictRecord]
    counts: dict[str, int]
    exit_code: int
    output_dir: Path | None = None
    minimized: dict[str, str] = field(default_factory=dict)


def _span(v, what: str) -> tuple[int, int]:
    if isinstance(v, int):
        return v, v
    if isinstance(v, list) and len(v) == 2 and v[0] <= v[1]:
        return int(v[0]), int(v[1])
    raise ConfigError(f"{what}: expected an int or [lo, hi], got {v!r}")


def _ints(v, what: str) -> list[int]:
    if isinstance(v, int):
        return [v]
    if isinstance(v, list) and all(isinstance(x, int) for x in v):
        return list(v)
    raise ConfigError(f"{what}: expected an int or a list of ints")


def expand_corpus(entries: list[dict]) -> list[dict]:
    """Turn corpus entries into concrete per-instance provenance records."""
    out: list[dict] = []
    for k, ent in enumerate(entries):
        kind = ent.get("kind")
        if kind == "fn":
            for n in _ints(ent.get("n", 2), "fn.n"):
                out.append({"generator": "fn", "n": n})
                if ent.get("drop_each"):
                    for i in range(gen_fn_mu(n).num_clauses):
                        out.append({"generator": "fn", "n": n, "drop": i})
        elif kind == "php":
            for h in _ints(ent.get("holes", 1), "php.holes"):
                out.append({"generator": "php", "holes": h})
        elif kind == "ksat":
            seed = int(ent.get("seed", k))
            nlo, nhi = _span(ent.get("n", [3, 6]), "ksat.n")
            mlo, mhi = _span(ent.get("m", [2, 8]), "ksat.m")
            kk = int(ent.get("k", 3))
            for i in range(int(ent.get("count", 1))):
                rng = SeededRng(derive_seed(seed, i))
                n = rng.between(max(nlo, kk), max(nhi, kk))
                m = rng.between(mlo, mhi)
                out.append(ksat_provenance(n, m, kk, derive_seed(seed, i, 1)))
        elif kind == "msp":
            seed = int(ent.get("seed", k))
            llo, lhi = _span(ent.get("stages", [5, 9]), "msp.stages")
            wlo, whi = _span(ent.get("width", [2, 4]), "msp.width")
            dens = ent.get("density", [0.9])
            dens = [float(x) for x in (dens if isinstance(dens, list) else [dens])]
            repair = ent.get("repair", True)
            for i in range(int(ent.get("count", 1))):
                rng = SeededRng(derive_seed(seed, i))
                L = rng.between(llo, lhi)
                w = rng.between(wlo, whi)
                d = dens[rng.below(len(dens))]
                rep = bool(rng.below(2)) if repair == "mixed" else bool(repair)
                out.append(msp_provenance(L, w, d, derive_seed(seed, i, 1), rep))
        elif kind == "files":
            for pat in ent.get("paths", []):
                for p in sorted(glob.glob(pat)):
                    out.append({"generator": "file", "path": p})
        else:
            raise ConfigError(f"corpus entry #{k}: unknown kind {kind!r}")
    return out


def _job(args):
    prov, index, budget, trace, strict = args
    return run_provenance(prov, index, budget, trace, strict)


def resolve_workers(requested: int) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV}={env!r} is not an integer") from None
    return max(1, requested)


def exit_code_for(counts: dict[str, int]) -> int:
    if counts.get(NECESSITY):
        return EXIT_NECESSITY
    if counts.get(SUFFICIENCY):
        return EXIT_SUFFICIENCY
    return EXIT_OK


def format_table(counts: dict[str, int], records: list[VerdictRecord]) -> str:
    by_gen: dict[str, Counter] = {}
    for r in records:
        by_gen.setdefault(r.provenance.get("generator", "?"), Counter())[r.classification] += 1
    cols = list(CLASSES) + [ERROR]
    head = ["generator"] + cols + ["total"]
    rows = [[g] + [str(c[x]) for x in cols] + [str(sum(c.values()))]
            for g, c in sorted(by_gen.items())]
    rows.append(["all"] + [str(counts.get(x, 0)) for x in cols] + [str(len(records))])
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    line = lambda r: "  ".join(s.rjust(w) if i else s.ljust(w)
                               for i, (s, w) in enumerate(zip(r, widths)))
    return "\n".join([line(head)] + [line(r) for r in rows]) + "\n"


def _archive(rec: VerdictRecord, out: Path, cfg: CampaignConfig) -> str | None:
    ddir = out / "disagreements"
    ddir.mkdir(parents=True, exist_ok=True)
    stem = f"{rec.index:06d}"
    inst = build_instance(rec.provenance)
    (ddir / f"{stem}.json").write_text(serialize_instance(inst.graph, rec.provenance,
                                                          inst.reduction))
    if inst.formula is not None:
        (ddir / f"{stem}.cnf").write_text(emit_dimacs(inst.formula, [rec.id]))
    if not cfg.minimize:
        return None
    try:
        res = minimize(inst, make_disagree(cfg.budget))
    except (PredicateFlaky, ValueError) as exc:
        (ddir / f"{stem}.minimize-error.txt").write_text(f"{type(exc).__name__}: {exc}\n")
        return None
    m = res.instance
    path = ddir / f"{stem}.min.json"
    path.write_text(serialize_instance(m.graph, {"minimized_from": rec.provenance}, m.reduction))
    if m.formula is not None:
        (ddir / f"{stem}.min.cnf").write_text(emit_dimacs(m.formula, [f"minimized {rec.id}"]))
    return str(path)


def run_campaign(cfg: CampaignConfig | dict, output_dir: str | Path | None = None) -> CampaignResult:
    """Run every corpus instance, write the reports, return the tallies and exit code."""
    if isinstance(cfg, dict):
        cfg = CampaignConfig.from_dict(cfg)
    provs = expand_corpus(cfg.corpus)
    out = Path(output_dir or cfg.output_dir) if (output_dir or cfg.output_dir) else None
    jobs = [(p, i, cfg.budget, cfg.trace, cfg.strict) for i, p in enumerate(provs)]
    workers = resolve_workers(cfg.workers)

    sink = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        sink = open(out / "records.jsonl", "w")
    records: list[VerdictRecord] = []
    try:
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                it = pool.map(_job, jobs, chunksize=max(1, len(jobs) // (8 * workers)))
                for rec in it:
                    records.append(rec)
                    if sink:
                        sink.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
                        sink.flush()
        else:
            for job in jobs:
                rec = _job(job)
                records.append(rec)
                if sink:
                    sink.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
                    sink.flush()
    finally:
        if sink:
            sink.close()

    counts = Counter(r.classification for r in records)
    counts = {c: counts.get(c, 0) for c in list(CLASSES) + [ERROR]}
    code = exit_code_for(counts)
    result = CampaignResult(records, counts, code, out)
    if out is not None:
        for rec in records:
            if rec.classification in (NECESSITY, SUFFICIENCY):
                result.minimized[rec.id] = _archive(rec, out, cfg)
        summary = {"counts": counts, "total": len(records), "exit_code": code,
                   "workers": workers, "budget": asdict(cfg.budget), "trace": cfg.trace,
                   "strict": cfg.strict, "corpus": cfg.corpus,
                   "disagreements": [r.index for r in records
                                     if r.classification in (NECESSITY, SUFFICIENCY)]}
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        (out / "summary.txt").write_text(format_table(counts, records))
    return result


def load_records(path: str | Path) -> list[VerdictRecord]:
    path = Path(path)
    if path.is_dir():
        path = path / "records.jsonl"
    return [VerdictRecord(**json.loads(line)) for line in path.read_text().splitlines() if line]
