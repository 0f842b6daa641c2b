"""Command-line entry point: ``zhmsp <command> ...`` or ``python -m zhmsp``.

Exit status: 0 clean, 1 usage or I/O error (including invalid input),
2 a necessity violation was seen, 3 a sufficiency disagreement was seen.
A file argument of ``-`` reads standard input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from .generators import gen_fn_mu, gen_pigeonhole, gen_random_ksat, gen_random_msp, split_clauses
from .graph import GraphError, check_properties, validate_2msp
from .kernel import InvalidInstance, preprocess, zh_solve
from .oracle import OracleBudget, sigma_path_exists
from .reduction import DimacsError, cnf_to_msp, emit_dimacs, parse_dimacs, reduce_full
from .harness.campaign import (EXIT_OK, EXIT_USAGE, CampaignConfig, ConfigError, exit_code_for,
                               format_table, load_records, run_campaign)
from .harness.core import CLASSES, ERROR, instance_from_bytes, msp_provenance
from .harness.minimize import PREDICATES, PredicateFlaky, minimize
from .harness.serialize import serialize_instance


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _write(text: str, path: str | None) -> None:
    if path and path != "-":
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _load(path: str):
    return instance_from_bytes(_read(path), path)


def cmd_validate(args) -> int:
    inst = _load(args.file)
    found = validate_2msp(inst.graph)
    if args.properties:
        found += check_properties(inst.graph)
    for v in found:
        print(v)
    if found:
        print(f"invalid: {len(found)} violation(s)", file=sys.stderr)
        return EXIT_USAGE
    print("valid")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    inst = _load(args.file)
    g = preprocess(inst.graph)
    _write(serialize_instance(g, {"preprocessed": inst.provenance}, inst.reduction), args.output)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load(args.file)
    try:
        res = zh_solve(inst.graph, strict=args.strict, trace=args.trace)
    except InvalidInstance as exc:
        print(f"zhmsp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.trace:
        for ev in res.trace:
            sys.stderr.write(ev.to_json() + "\n")
    if args.stats:
        sys.stderr.write(json.dumps(res.stats, sort_keys=True) + "\n")
    print(res.answer)
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _load(args.file)
    budget = OracleBudget(max_nodes=args.budget_nodes, max_millis=args.budget_ms)
    print(sigma_path_exists(inst.graph, budget).value)
    return EXIT_OK


def cmd_reduce(args) -> int:
    data = _read(args.cnf)
    f = parse_dimacs(data, strict=not args.permissive)
    if f.max_width() > 3:
        f = split_clauses(f)
    prov = {"generator": "dimacs", "sha256": hashlib.sha256(data).hexdigest(),
            "gadgets": not args.no_gadgets}
    g, rmap = cnf_to_msp(f) if args.no_gadgets else reduce_full(f)
    _write(serialize_instance(g, prov, rmap), args.output)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.family == "msp":
        if len(args.params) != 3:
            return _usage("gen msp needs STAGES WIDTH DENSITY")
        L, w, d = int(args.params[0]), int(args.params[1]), float(args.params[2])
        g = gen_random_msp(L, w, d, args.seed, repair=not args.raw)
        prov = msp_provenance(L, w, d, args.seed, not args.raw)
        _write(serialize_instance(g, prov), args.output)
        return EXIT_OK
    nums = [int(x) for x in args.params]
    if args.family == "fn":
        if len(nums) != 1:
            return _usage("gen fn needs N")
        f = gen_fn_mu(nums[0])
        if args.drop is not None:
            f = f.without_clause(args.drop)
        comment = f"minimal unsatisfiable family, n={nums[0]}"
    elif args.family == "ksat":
        if len(nums) != 2:
            return _usage("gen ksat needs N M")
        f = gen_random_ksat(nums[0], nums[1], args.k, args.seed)
        comment = f"random {args.k}-SAT n={nums[0]} m={nums[1]} seed={args.seed}"
    else:
        if len(nums) != 1:
            return _usage("gen php needs HOLES")
        f = gen_pigeonhole(nums[0])
        if args.split:
            f = split_clauses(f)
        comment = f"pigeonhole, {nums[0]} holes"
    _write(emit_dimacs(f, [comment]), args.output)
    return EXIT_OK


def cmd_fuzz(args) -> int:
    cfg = CampaignConfig.load(args.config)
    if args.workers is not None:
        cfg.workers = args.workers
    out = args.output or cfg.output_dir
    res = run_campaign(cfg, out)
    sys.stdout.write(format_table(res.counts, res.records))
    if res.output_dir is not None:
        print(f"records written to {res.output_dir}")
    return res.exit_code


def cmd_minimize(args) -> int:
    inst = _load(args.file)
    res = minimize(inst, PREDICATES[args.predicate](), keep_2msp=not args.no_validate)
    m = res.instance
    if m.formula is not None:
        _write(emit_dimacs(m.formula, [f"minimized under {args.predicate}"]), args.output)
    else:
        _write(serialize_instance(m.graph, {"minimized_from": inst.provenance}), args.output)
    print(f"{res.steps} step(s), {res.evaluations} evaluation(s)", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    records = load_records(args.dir)
    counts = {c: 0 for c in list(CLASSES) + [ERROR]}
    for r in records:
        counts[r.classification] = counts.get(r.classification, 0) + 1
    sys.stdout.write(format_table(counts, records))
    if args.traces:
        for r in records:
            if r.stats:
                print(f"{r.index:6d} {r.id}: passes={r.stats.get('passes')} "
                      f"prunes={r.stats.get('prune_events')} kernel={len(r.kernel)}")
    return exit_code_for(counts)


def _usage(msg: str) -> int:
    print(f"zhmsp: error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zhmsp", description="Labeled multi-stage graphs, the ZH kernel, and its oracles.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check the 2-MSP structure of an instance")
    s.add_argument("file")
    s.add_argument("--properties", action="store_true", help="also check the label properties")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("preprocess", help="apply label pre-processing, print the instance")
    s.add_argument("file")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("solve", help="decide with the ZH kernel, print yes or no")
    s.add_argument("file")
    s.add_argument("--trace", action="store_true", help="prune trace as JSON lines on stderr")
    s.add_argument("--stats", action="store_true", help="run statistics as JSON on stderr")
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true",
                      help="reject instances that are not 2-MSP")
    mode.add_argument("--permissive", dest="strict", action="store_false")
    s.set_defaults(func=cmd_solve, strict=False)

    s = sub.add_parser("oracle", help="exhaustive sigma-path search, print yes, no or unknown")
    s.add_argument("file")
    s.add_argument("--budget-ms", type=int, default=OracleBudget.max_millis)
    s.add_argument("--budget-nodes", type=int, default=OracleBudget.max_nodes)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("reduce", help="DIMACS CNF to an instance")
    s.add_argument("cnf")
    s.add_argument("--no-gadgets", action="store_true", help="plain MSP without stage gadgets")
    s.add_argument("--permissive", action="store_true", help="tolerate a wrong DIMACS header")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("gen", help="generate a formula (DIMACS) or a random instance")
    s.add_argument("family", choices=["fn", "ksat", "php", "msp"])
    s.add_argument("params", nargs="+",
                   help="fn: N | ksat: N M | php: HOLES | msp: STAGES WIDTH DENSITY")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--k", type=int, default=3, help="clause width for ksat")
    s.add_argument("--drop", type=int, help="fn: delete this clause index")
    s.add_argument("--split", action="store_true", help="php: split wide clauses to 3-CNF")
    s.add_argument("--raw", action="store_true", help="msp: skip label repair")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("fuzz", help="run a differential campaign from a JSON config")
    s.add_argument("config")
    s.add_argument("-o", "--output", help="output directory (overrides the config)")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_fuzz)

    s = sub.add_parser("minimize", help="shrink an instance while a predicate holds")
    s.add_argument("file")
    s.add_argument("--predicate", choices=sorted(PREDICATES), required=True)
    s.add_argument("--no-validate", action="store_true",
                   help="allow graph steps that break the 2-MSP structure")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_minimize)

    s = sub.add_parser("report", help="summarize a campaign output directory")
    s.add_argument("dir")
    s.add_argument("--traces", action="store_true", help="per-instance prune statistics")
    s.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, DimacsError, GraphError, ConfigError, PredicateFlaky, ValueError) as exc:
        print(f"zhmsp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
