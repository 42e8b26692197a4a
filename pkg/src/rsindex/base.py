"""Shared machinery of the three index variants: queries, probes, space accounting."""

from __future__ import annotations

import importlib
import math
from dataclasses import asdict, dataclass, field

from .bitcore import PackedBitArray, PackedClient
from .errors import QueryDomainError, UsageError
from .plan import ParameterPlan, Topology
from .tables import global_table_bits, t2_build_global
from .tree import ProbeLog, QueryContext, assemble

_REGISTRY: dict[str, type] = {}


def register(variant: str):
    def deco(cls):
        cls.variant = variant
        _REGISTRY[variant] = cls
        return cls

    return deco


def index_class(variant: str) -> type:
    if variant not in _REGISTRY:
        importlib.import_module(f".{variant}", __package__)
    return _REGISTRY[variant]


def as_client(client):
    if client is None or hasattr(client, "read_window"):
        return client
    if isinstance(client, PackedBitArray):
        return PackedClient(client)
    raise UsageError(f"cannot use {type(client).__name__} as client bit access")


def theory_ratio(total_bits: int, n: int) -> float:
    """total_bits / (n log log n / log n), logs base 2."""
    lg = math.log2(n)
    return total_bits / (n * math.log2(lg) / lg)


@dataclass
class SpaceReport:
    variant: str
    n: int
    m: int
    header_bits: int
    section_table_bits: int
    sections: list = field(default_factory=list)
    global_tables: dict = field(default_factory=dict)
    total_bits: int = 0

    @property
    def leaf_bits(self) -> int:
        return sum(s["bits"] for s in self.sections)

    @property
    def bits_per_input_bit(self) -> float:
        return self.total_bits / self.n

    @property
    def theory_ratio(self) -> float:
        return theory_ratio(self.total_bits, self.n) if self.n >= 4 else float("nan")

    def as_dict(self) -> dict:
        out = asdict(self)
        out.update(leaf_bits=self.leaf_bits, bits_per_input_bit=self.bits_per_input_bit,
                   theory_ratio=self.theory_ratio)
        return out


class TreeIndex:
    """A built reduction tree; subclasses fix the variant and the client requirement."""

    variant = ""
    needs_client = True

    def __init__(self, plan: ParameterPlan, topology: Topology, leaves: dict, m: int,
                 stats=None, masked: bool = True):
        self.plan = plan
        self.topology = topology
        self.leaves = leaves
        self.m = m
        self.stats = stats
        self.masked = masked
        self.glob = t2_build_global(plan.t2_width)
        self.root, self.nodes = assemble(topology, leaves, self.glob, masked=masked)

    @classmethod
    def from_build(cls, result, masked: bool = True):
        return cls(result.plan, result.topology, result.leaves, result.m, result.stats, masked)

    @property
    def n(self) -> int:
        return self.plan.n

    def __repr__(self):
        p = self.plan
        return f"{type(self).__name__}(n={p.n}, m={self.m}, ell={p.ell}, L={p.big_l})"

    def _context(self, client, log) -> QueryContext:
        client = as_client(client)
        if client is None and self.needs_client:
            raise UsageError(f"{self.variant} index queries need client bit access")
        if client is not None and getattr(client, "total_bits", self.n) != self.n:
            raise UsageError(f"client holds {client.total_bits} bits, index was built for {self.n}")
        return QueryContext(client, log)

    def rank(self, j: int, client=None, log: ProbeLog | None = None) -> int:
        if not 0 <= j <= self.n:
            raise QueryDomainError(f"rank({j}) outside 0..{self.n}")
        return self.root.rank(0, 0, j, self._context(client, log))

    def select(self, k: int, client=None, log: ProbeLog | None = None) -> int:
        if not 1 <= k <= self.m:
            raise QueryDomainError(f"select({k}) outside 1..{self.m}")
        return self.root.select(0, 0, k, self._context(client, log))

    def probe(self, op: str, arg: int, client=None) -> tuple[int, ProbeLog]:
        """Answer one query and return it with its probe log."""
        log = ProbeLog()
        fn = self.rank if op == "rank" else self.select
        return fn(arg, client, log), log

    def rank_all(self, client=None) -> list[int]:
        ctx = self._context(client, None)
        rank = self.root.rank
        return [rank(0, 0, j, ctx) for j in range(self.n + 1)]

    def select_all(self, client=None) -> list[int]:
        ctx = self._context(client, None)
        select = self.root.select
        return [select(0, 0, k, ctx) for k in range(1, self.m + 1)]

    # ---- storage

    def serialize(self) -> bytes:
        from .container import serialize

        return serialize(self)

    def global_table_bits(self) -> dict:
        out = {"T2": self.glob.bits()}
        p = self.plan
        if p.variant == "optimal":
            out["T3"] = global_table_bits(p.t3_codec())
        elif p.variant == "tuned":
            out["T4"] = global_table_bits(p.t4_codec())
        return out

    def space_report(self) -> SpaceReport:
        from .container import serialize_parts

        header, table, sections = serialize_parts(self)
        rep = SpaceReport(self.variant, self.n, self.m, 8 * len(header), 8 * len(table))
        for spec, body in sections:
            rep.sections.append({"leaf": spec.id, "kind": spec.kind, "role": spec.role,
                                 "bits": 8 * len(body)})
        rep.global_tables = self.global_table_bits()
        rep.total_bits = rep.header_bits + rep.section_table_bits + rep.leaf_bits
        return rep


def space_report(index: TreeIndex) -> SpaceReport:
    return index.space_report()
