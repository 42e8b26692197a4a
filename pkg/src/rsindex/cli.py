"""Command-line front end: build, query, verify, bench, info.

Exit codes: 0 success, 1 verification mismatch, 2 usage error (bad flags,
query out of range, missing client bits), 3 malformed input or container.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys

import numpy as np

from . import container
from .base import as_client
from .bench import parse_mix, parse_sizes, run_bench
from .bitcore import BitChunkStream, PackedBitArray, read_bits_file
from .errors import (ConfigurationError, ConstructionError, ContainerError, EncodingError,
                     InvariantViolation, RankSelectError, UsageError)
from .oracle import PATTERN_KINDS, OracleBits, PatternSpec, generate
from .plan import VARIANTS, plan
from .stream import build
from .tables import table_budget_from_env

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _budget(args) -> int:
    if args.table_budget is not None:
        if args.table_budget < 0:
            raise UsageError("--table-budget must be >= 0")
        return args.table_budget
    return table_budget_from_env()


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, default=str))


# ---------------------------------------------------------------- build


def cmd_build(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.chunk_bits < 1:
        raise UsageError("--chunk-bits must be >= 1")
    p = plan(args.n, args.variant, ell=args.ell, big_l=args.big_l, table_budget=_budget(args))
    if args.input == "-":
        stream = BitChunkStream.from_reader(sys.stdin.buffer, args.n, args.chunk_bits)
        index = build(stream, p)
    else:
        with open(args.input, "rb") as fh:
            index = build(BitChunkStream.from_reader(fh, args.n, args.chunk_bits), p)
    size = container.save(index, args.out)
    rep = index.space_report()
    out = {"out": args.out, "bytes": size, "plan": p.describe(), "m": index.m,
           "space": rep.as_dict(), "build": index.stats.as_dict()}
    _print_json(out)
    return EXIT_OK


# ---------------------------------------------------------------- query


def _load_client(index, bits_path):
    if bits_path is None:
        if index.needs_client:
            raise UsageError(f"--bits is required for {index.variant} indices")
        return None
    return read_bits_file(bits_path, index.n)


def cmd_query(args) -> int:
    index = container.load(args.index)
    client = _load_client(index, args.bits)
    if args.op == "rank":
        print(index.rank(args.arg, client))
    else:
        print(index.select(args.arg, client))
    return EXIT_OK


# ---------------------------------------------------------------- verify


def _check(index, bits, oracle, queries):
    """First mismatching query as ``(op, arg, got, expected)``, or None."""
    client = as_client(bits) if index.needs_client else None
    for op, arg in queries:
        want = oracle.rank(arg) if op == "rank" else oracle.select(arg)
        try:
            got = index.rank(arg, client) if op == "rank" else index.select(arg, client)
        except (RankSelectError, IndexError) as exc:
            got = f"error: {exc}"
        if got != want:
            return op, arg, got, want
    return None


def _all_queries(n, m):
    return [("rank", j) for j in range(n + 1)] + [("select", k) for k in range(1, m + 1)]


def _sampled_queries(n, m, count, rng):
    qs = [("rank", 0), ("rank", n)] + [("select", k) for k in (1, m) if m]
    qs += [("rank", int(j)) for j in rng.integers(0, n + 1, size=count)]
    if m:
        qs += [("select", int(k)) for k in rng.integers(1, m + 1, size=count)]
    return qs


def _report_mismatch(fields: dict) -> None:
    print("FAIL " + " ".join(f"{k}={v}" for k, v in fields.items()))


def cmd_verify(args) -> int:
    if args.index:
        return _verify_file(args)
    if args.n is None:
        raise UsageError("verify needs --n (generated inputs) or --index/--bits (a stored index)")
    if args.n < 1 or args.trials < 1:
        raise UsageError("--n and --trials must be >= 1")
    budget = _budget(args)
    variants = VARIANTS if args.variant == "all" else (args.variant,)
    plans = {v: plan(args.n, v, ell=args.ell, big_l=None if v == "simplified" else args.big_l,
                     table_budget=budget) for v in variants}
    checked = 0
    if args.n <= 12 and args.pattern is None:
        inputs = ((f"exhaustive:{x}", PackedBitArray.from_int(x, args.n)) for x in range(1 << args.n))
    else:
        pattern = args.pattern or "bernoulli:0.5"
        inputs = ((pattern, generate(PatternSpec.parse(pattern, args.seed + t), args.n))
                  for t in range(args.trials))
    for t, (label, bits) in enumerate(inputs):
        oracle = OracleBits(bits)
        rng = np.random.default_rng(args.seed + t)
        if args.n <= 12:
            queries = _all_queries(args.n, oracle.m)
        else:
            queries = _sampled_queries(args.n, oracle.m, args.queries, rng)
        for v, p in plans.items():
            index = build(BitChunkStream.from_bits(bits, args.chunk_bits), p)
            bad = _check(index, bits, oracle, queries)
            checked += len(queries)
            if bad:
                op, arg, got, want = bad
                seed = args.seed + t if not label.startswith("exhaustive") else "-"
                _report_mismatch({"variant": v, "n": args.n, "seed": seed, "pattern": label,
                                  "ell": p.ell, "L": p.big_l, "query": f"{op}({arg})",
                                  "got": got, "expected": want})
                return EXIT_MISMATCH
    print(f"PASS variants={','.join(variants)} n={args.n} inputs={t + 1} queries={checked}")
    return EXIT_OK


def _verify_file(args) -> int:
    try:
        index = container.load(args.index)
    except ContainerError as exc:
        _report_mismatch({"index": args.index, "error": exc})
        return EXIT_MISMATCH
    if args.bits is None:
        raise UsageError("--bits is required with --index")
    bits = read_bits_file(args.bits, index.n)
    oracle = OracleBits(bits)
    if index.m != oracle.m:
        _report_mismatch({"index": args.index, "n": index.n, "query": "weight",
                          "got": index.m, "expected": oracle.m})
        return EXIT_MISMATCH
    if index.n <= 4096:
        queries = _all_queries(index.n, oracle.m)
    else:
        queries = _sampled_queries(index.n, oracle.m, args.queries, np.random.default_rng(args.seed))
    bad = _check(index, bits, oracle, queries)
    if bad:
        op, arg, got, want = bad
        _report_mismatch({"index": args.index, "variant": index.variant, "n": index.n,
                          "query": f"{op}({arg})", "got": got, "expected": want})
        return EXIT_MISMATCH
    print(f"PASS index={args.index} variant={index.variant} n={index.n} queries={len(queries)}")
    return EXIT_OK


# ---------------------------------------------------------------- bench / info


def cmd_bench(args) -> int:
    ns = parse_sizes(args.n)
    if not ns or min(ns) < 2:
        raise UsageError("--n needs sizes >= 2")
    variants = VARIANTS if args.variant == "all" else tuple(args.variant.split(","))
    for v in variants:
        if v not in VARIANTS:
            raise UsageError(f"unknown variant {v!r}")
    report = run_bench(ns, variants, args.queries, parse_mix(args.mix), args.seed, args.pattern,
                       _budget(args))
    text = report.to_json() if args.out == "json" else report.to_csv()
    if args.file:
        with open(args.file, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return EXIT_OK


def cmd_info(args) -> int:
    with open(args.index, "rb") as fh:
        data = fh.read()
    header = container.read_header(data)
    sections = container.section_table(data)
    index = container.deserialize(data)
    p = index.plan
    flags = []
    if p.strategy & 1:
        flags.append("t3-table")
    if p.strategy & 2:
        flags.append("t4-table")
    _print_json({
        "file_bytes": len(data),
        "header": header,
        "plan": p.describe(),
        "strategy_flags": flags or ["direct"],
        "sections": [{k: v for k, v in s.items() if k != "start"} for s in sections],
        "section_bytes_total": sum(s["bytes"] for s in sections),
        "header_bytes": container.HEADER.size,
        "section_table_bytes": container.COUNT.size + container.SECTION.size * len(sections),
        "global_table_bits": index.global_table_bits(),
    })
    return EXIT_OK


# ---------------------------------------------------------------- parser


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rsindex", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", parser_class=_Parser)
    sub.required = True

    def params(p, variant_choices=VARIANTS, variant_default="optimal"):
        p.add_argument("--variant", choices=variant_choices, default=variant_default)
        p.add_argument("--ell", type=int)
        p.add_argument("--big-l", type=int)
        p.add_argument("--table-budget", type=int,
                       help="key+argument bit budget for T3/T4 global tables (env RSX_TABLE_BUDGET)")

    b = sub.add_parser("build", help="build an index from a raw bit file")
    b.add_argument("--input", required=True, help="raw LSB-first bit file, or - for stdin")
    b.add_argument("--n", type=int, required=True, help="number of bits to read")
    b.add_argument("--chunk-bits", type=int, default=4096)
    b.add_argument("--out", required=True)
    params(b)
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="answer one rank or select query")
    q.add_argument("--index", required=True)
    q.add_argument("--bits", help="client bit file (required for optimal and tuned)")
    q.add_argument("op", choices=("rank", "select"))
    q.add_argument("arg", type=int)
    q.set_defaults(func=cmd_query)

    v = sub.add_parser("verify", help="compare indices against the brute-force oracle")
    v.add_argument("--n", type=int)
    v.add_argument("--trials", type=int, default=3)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--pattern", help=f"one of {', '.join(PATTERN_KINDS)} (kind:arg), or sparse:p")
    v.add_argument("--queries", type=int, default=2000, help="sampled queries per kind (n > 12)")
    v.add_argument("--chunk-bits", type=int, default=4096)
    v.add_argument("--index", help="verify a stored index instead of generated inputs")
    v.add_argument("--bits", help="client bit file for --index")
    params(v, VARIANTS + ("all",), "all")
    v.set_defaults(func=cmd_verify)

    be = sub.add_parser("bench", help="space, probe and timing report")
    be.add_argument("--n", default="2^16,2^18,2^20", help="comma-separated sizes, 2^k allowed")
    be.add_argument("--queries", type=int, default=10_000)
    be.add_argument("--mix", default="1:1", help="rank:select ratio")
    be.add_argument("--out", choices=("json", "csv"), default="json")
    be.add_argument("--file", help="write the report here instead of stdout")
    be.add_argument("--variant", default="all", help="comma-separated variants or all")
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--pattern", default="bernoulli:0.5")
    be.add_argument("--table-budget", type=int)
    be.set_defaults(func=cmd_bench)

    i = sub.add_parser("info", help="dump a container's header and sections")
    i.add_argument("--index", required=True)
    i.set_defaults(func=cmd_info)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"rsindex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConstructionError, ContainerError, EncodingError, OSError) as exc:
        print(f"rsindex: malformed input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"rsindex: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
