"""Space/probe/time measurements over a range of n, as JSON or CSV."""

from __future__ import annotations

import csv
import io
import json
import statistics
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .base import as_client
from .bitcore import BitChunkStream
from .errors import UsageError
from .oracle import PatternSpec, generate
from .plan import plan
from .stream import build

# Probes per query, measured once at n = 2^16 with default plans and frozen.
# A probe is one table entry, bank slot, global-table entry or client window.
PROBE_BOUNDS = {
    "simplified": {"rank": 8, "select": 12},
    "optimal": {"rank": 15, "select": 27},
    "tuned": {"rank": 4, "select": 15},
}

# Build-cost constants, frozen the same way (measured 1.5-2.3 and 0.1-0.26).
# batch_steps <= BATCH_STEPS_PER_BATCH * n / ell, and the process registers
# plus channel buffers fit in AUX_WORDS_FACTOR * (L + AUX_WORDS_SLACK) words.
BATCH_STEPS_PER_BATCH = 3.0
AUX_WORDS_FACTOR = 1.0
AUX_WORDS_SLACK = 64

FIELDS = ("n", "variant", "total_index_bits", "bits_per_input_bit", "theory_ratio",
          "max_probes_rank", "max_probes_select", "build_seconds", "ns_per_query")


@dataclass
class BenchRow:
    n: int
    variant: str
    total_index_bits: int
    bits_per_input_bit: float
    theory_ratio: float
    max_probes_rank: int
    max_probes_select: int
    build_seconds: float
    ns_per_query: float


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"config": self.config, "rows": [asdict(r) for r in self.rows]}, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow(asdict(r))
        return buf.getvalue()

    def series(self, variant: str, key: str) -> list:
        return [getattr(r, key) for r in self.rows if r.variant == variant]


def query_stream(n: int, m: int, queries: int, mix: tuple[int, int], seed: int):
    """Deterministic ``(op, arg)`` pairs; the rank share is mix[0] / sum(mix)."""
    rng = np.random.default_rng(seed)
    rank_share = mix[0] / max(1, sum(mix))
    ops = rng.random(queries) < rank_share
    js = rng.integers(0, n + 1, size=queries)
    ks = rng.integers(1, m + 1, size=queries) if m else np.zeros(queries, dtype=np.int64)
    out = []
    for is_rank, j, k in zip(ops.tolist(), js.tolist(), ks.tolist()):
        if is_rank or not m:
            out.append(("rank", j))
        else:
            out.append(("select", k))
    return out


def measure(index, client, queries) -> tuple[int, int, float]:
    """Max rank probes, max select probes, median ns per query over ``queries``."""
    client = as_client(client) if index.needs_client else None
    max_rank = max_select = 0
    for op, arg in queries:
        _, log = index.probe(op, arg, client)
        if op == "rank":
            max_rank = max(max_rank, log.probes)
        else:
            max_select = max(max_select, log.probes)
    times = []
    rank, select = index.rank, index.select
    clock = time.perf_counter_ns
    for op, arg in queries:
        fn = rank if op == "rank" else select
        t0 = clock()
        fn(arg, client)
        times.append(clock() - t0)
    return max_rank, max_select, float(statistics.median(times)) if times else 0.0


def bench_one(n: int, variant: str, queries: int = 10_000, mix=(1, 1), seed: int = 0,
              pattern: str = "bernoulli:0.5", table_budget: int | None = None):
    bits = generate(PatternSpec.parse(pattern, seed), n)
    p = plan(n, variant, table_budget=table_budget)
    t0 = time.perf_counter()
    index = build(BitChunkStream.from_bits(bits), p)
    build_seconds = time.perf_counter() - t0
    rep = index.space_report()
    qs = query_stream(n, index.m, queries, mix, seed + 1)
    max_rank, max_select, ns = measure(index, bits, qs)
    row = BenchRow(n, variant, rep.total_bits, rep.bits_per_input_bit, rep.theory_ratio,
                   max_rank, max_select, round(build_seconds, 4), ns)
    return row, index, bits


def run_bench(ns, variants=("simplified", "optimal", "tuned"), queries: int = 10_000,
              mix=(1, 1), seed: int = 0, pattern: str = "bernoulli:0.5",
              table_budget: int | None = None) -> BenchReport:
    report = BenchReport(config={"ns": list(ns), "variants": list(variants), "queries": queries,
                                 "mix": f"{mix[0]}:{mix[1]}", "seed": seed, "pattern": pattern,
                                 "table_budget": table_budget})
    for n in ns:
        for v in variants:
            row, _, _ = bench_one(n, v, queries, mix, seed, pattern, table_budget)
            report.rows.append(row)
    return report


def parse_mix(text: str) -> tuple[int, int]:
    a, _, b = text.partition(":")
    try:
        mix = (int(a), int(b or 0))
    except ValueError:
        raise UsageError(f"bad query mix {text!r}") from None
    if min(mix) < 0 or sum(mix) == 0:
        raise UsageError(f"bad query mix {text!r}")
    return mix


def parse_sizes(text: str) -> list[int]:
    """``65536,2^20,1048576`` -> integers."""
    out = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        try:
            if "^" in part:
                base, _, exp = part.partition("^")
                out.append(int(base) ** int(exp))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"bad size {part!r}") from None
    return out
