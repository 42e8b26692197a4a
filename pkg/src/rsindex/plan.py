"""Parameter plans and reduction-tree topologies.

A plan fixes ``ell`` and ``L`` for a given ``n``; a topology is the tree of
reduction nodes and leaves, each annotated with the worst-case span and size
bound it must be allocated for.  Allocation depends only on ``(n, plan)``,
never on the input bits, so every index for the same plan has the same size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .algebra import ceil_div, propagate
from .bitcore import SpanDescriptor
from .errors import ConfigurationError
from .tables import DEFAULT_TABLE_BUDGET, T2_MAX_WIDTH, t3_codec, t4_codec, width_for

VARIANTS = ("simplified", "optimal", "tuned")
VARIANT_CODES = {"simplified": 1, "optimal": 2, "tuned": 3}

ELL_MIN, ELL_MAX = 4, 16

STRATEGY_T3_TABLE = 1
STRATEGY_T4_TABLE = 2

RANK = "rank"
SELECT = "select"
BOTH = frozenset({RANK, SELECT})


def default_ell(n: int) -> int:
    return min(max(ELL_MIN, int(math.log2(n + 1)) // 2), ELL_MAX)


def default_groups_per_block(ell: int) -> int:
    return min(max(math.ceil(ell / math.log2(ell)), 2), 64)


@dataclass(frozen=True)
class ParameterPlan:
    variant: str
    n: int
    ell: int
    big_l: int
    table_budget: int = DEFAULT_TABLE_BUDGET
    strategy: int = 0

    @property
    def sub_per_block(self) -> int:
        return self.big_l // self.ell if self.big_l else 0

    @property
    def blocks(self) -> int:
        return ceil_div(self.n + 1, self.big_l) if self.big_l else 0

    @property
    def root_lambda(self) -> int:
        return self.ell if self.variant == "simplified" else self.big_l

    @property
    def t3_params(self) -> tuple[int, int]:
        return self.big_l + 1, 1 + self.sub_per_block

    @property
    def t4_params(self) -> tuple[int, int]:
        return 1 + self.sub_per_block, self.big_l

    @property
    def t3_field_bits(self) -> int:
        return max(1, width_for(self.big_l))

    @property
    def t3_key_bits(self) -> int:
        return self.t3_params[1] * self.t3_field_bits

    @property
    def t2_width(self) -> int:
        """Width of the shared T2 global table: the widest T2 slot or client window."""
        if self.variant == "optimal":
            return max(self.ell, self.sub_per_block + 1)
        return self.ell

    @property
    def t3_table(self) -> bool:
        return bool(self.strategy & STRATEGY_T3_TABLE)

    @property
    def t4_table(self) -> bool:
        return bool(self.strategy & STRATEGY_T4_TABLE)

    def t3_codec(self):
        N, M = self.t3_params
        return t3_codec(N, M, self.table_budget if self.t3_table else -1)

    def t4_codec(self):
        N, M = self.t4_params
        return t4_codec(N, M, self.table_budget if self.t4_table else -1)

    def constraints(self) -> dict:
        """The asymptotic parameter constraints, reported but not enforced."""
        log_n = math.log2(max(self.n, 2))
        loglog = math.log2(max(log_n, 2))
        out = {"ell_le_half_log_n": self.ell <= log_n / 2}
        if self.big_l:
            out["groups_le_quarter_log_over_loglog"] = self.sub_per_block <= log_n / (4 * loglog)
        return out

    def describe(self) -> dict:
        out = {
            "variant": self.variant,
            "n": self.n,
            "ell": self.ell,
            "L": self.big_l,
            "table_budget": self.table_budget,
            "t2_width": self.t2_width,
        }
        if self.variant == "optimal":
            N, M = self.t3_params
            out.update(blocks=self.blocks, sub_per_block=self.sub_per_block,
                       t3_N=N, t3_M=M, t3_field_bits=self.t3_field_bits,
                       t3_key_bits=self.t3_key_bits,
                       t3_strategy="table" if self.t3_table else "direct")
        elif self.variant == "tuned":
            N, M = self.t4_params
            out.update(blocks=self.blocks, sub_per_block=self.sub_per_block,
                       t4_N=N, t4_M=M, t4_key_bits=self.t4_codec().key_bits,
                       t4_strategy="table" if self.t4_table else "direct")
        out["constraints"] = self.constraints()
        return out


def plan(n: int, variant: str = "optimal", ell: int | None = None, big_l: int | None = None,
         table_budget: int | None = None) -> ParameterPlan:
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    budget = DEFAULT_TABLE_BUDGET if table_budget is None else table_budget
    ell = default_ell(n) if ell is None else ell
    if not 1 <= ell <= ELL_MAX:
        raise ConfigurationError(f"ell must be in [1, {ELL_MAX}], got {ell}")
    if variant == "simplified":
        if ell > T2_MAX_WIDTH:
            raise ConfigurationError("ell exceeds the T2 table cap")
        return ParameterPlan(variant, n, ell, 0, budget, 0)
    if big_l is None:
        big_l = ell * default_groups_per_block(max(ell, 2))
    if big_l < ell or big_l % ell:
        raise ConfigurationError(f"L={big_l} must be a positive multiple of ell={ell}")
    p = ParameterPlan(variant, n, ell, big_l, budget, 0)
    if p.t2_width > T2_MAX_WIDTH:
        raise ConfigurationError(f"T2 width {p.t2_width} exceeds the cap {T2_MAX_WIDTH}")
    strategy = 0
    if variant == "optimal":
        N, M = p.t3_params
        if t3_codec(N, M, budget).strategy.mode == "table":
            strategy |= STRATEGY_T3_TABLE
    else:
        N, M = p.t4_params
        if t4_codec(N, M, budget).strategy.mode == "table":
            strategy |= STRATEGY_T4_TABLE
    return replace(p, strategy=strategy)


# ---------------------------------------------------------------- topology


@dataclass(frozen=True)
class NodeSpec:
    """One node of a reduction tree.

    Inner kinds: CR1, CR2, BR1, BR2D (a BR2 node whose rank side is its own
    T1 directory).  Leaf kinds: T1, T2, T3, T4, CLIENT.  ``span``/``size``
    bound the (multi)set the node handles; for ``array`` nodes they hold per
    element (one element per group of the parent).
    """

    id: int
    kind: str
    lam: int = 0
    children: tuple[int, ...] = ()
    span: int = 0
    size: int = 0
    array: bool = False
    elem_batches: int = 0
    ops: frozenset = BOTH
    input: str = "bits"  # or "ints"
    count: int = 0  # slots of a bank / elements of an array
    slot_bits: int = 0
    elem_bits: int = 0
    sentinel: bool = False
    starred: bool = False
    multiset: bool = False
    role: str = ""

    @property
    def is_leaf(self) -> bool:
        return self.kind in ("T1", "T2", "T3", "T4", "CLIENT")

    @property
    def descriptor(self) -> SpanDescriptor:
        return SpanDescriptor(0, self.span)


@dataclass(frozen=True)
class Topology:
    plan: ParameterPlan
    nodes: tuple[NodeSpec, ...]
    notes: dict = field(default_factory=dict)

    def __getitem__(self, i: int) -> NodeSpec:
        return self.nodes[i]

    def __iter__(self):
        return iter(self.nodes)

    def leaves(self) -> list[NodeSpec]:
        return [s for s in self.nodes if s.is_leaf]

    def preorder(self) -> list[int]:
        out, stack = [], [0]
        while stack:
            i = stack.pop()
            out.append(i)
            stack.extend(reversed(self.nodes[i].children))
        return out


def _t1(i, span, size, ops=BOTH, multiset=False, role=""):
    return NodeSpec(i, "T1", span=span, size=size, ops=ops, multiset=multiset,
                    input="ints" if multiset else "bits", role=role)


def _simple_size(size, span):
    return min(size, span)


def simplified_topology(p: ParameterPlan) -> Topology:
    n, ell = p.n, p.ell
    n1 = n + 1
    top = propagate(SpanDescriptor(0, n1), n, ell)
    s1 = min(top.rank_set_size, n1)
    inner = propagate(SpanDescriptor(0, n1), s1, ell)
    groups_top = ceil_div(n1, ell)
    nodes = (
        NodeSpec(0, "CR1", ell, (1, 5, 6), span=n1, size=n, role="root"),
        NodeSpec(1, "CR1", ell, (2, 3, 4), span=n1, size=s1, role="rank set of the root"),
        _t1(2, s1 + 1, min(inner.rank_set_size, s1 + 1), role="inner rank set"),
        _t1(3, inner.image.span, _simple_size(s1, inner.image.span), role="inner image"),
        NodeSpec(4, "T2", ell, count=ceil_div(n1, ell) + 1, slot_bits=ell, elem_bits=ell,
                 sentinel=True, role="inner groups"),
        _t1(5, top.image.span, _simple_size(n, top.image.span), role="root image"),
        NodeSpec(6, "T2", ell, count=groups_top + 1, slot_bits=ell, elem_bits=ell,
                 sentinel=True, role="client pieces"),
    )
    return Topology(p, nodes)


def _left_subtree_bounds(p: ParameterPlan):
    n, ell, big_l = p.n, p.ell, p.big_l
    n1 = n + 1
    top = propagate(SpanDescriptor(0, n1), n, big_l)
    s1 = min(top.rank_set_size, n1)  # |R1| bound, R1 = rank image of g_L[[S]]
    cr2 = propagate(SpanDescriptor(0, n1), s1, ell)
    span2 = cr2.image.span
    m2 = min(s1, span2)
    inner = propagate(SpanDescriptor(0, span2), m2, ell)
    return top, s1, cr2, span2, m2, inner


def optimal_topology(p: ParameterPlan) -> Topology:
    n, ell, big_l = p.n, p.ell, p.big_l
    n1 = n + 1
    top, s1, cr2, span2, m2, inner = _left_subtree_bounds(p)
    per = p.sub_per_block
    block = propagate(SpanDescriptor(0, big_l), big_l, ell)
    nodes = (
        NodeSpec(0, "CR1", big_l, (1, 8, 9), span=n1, size=n, role="root"),
        NodeSpec(1, "CR2", ell, (2, 3, 7), span=n1, size=s1, role="rank set of block counts"),
        _t1(2, s1 + 1, min(cr2.rank_set_size, s1 + 1), role="CR2 rank set"),
        NodeSpec(3, "CR1", ell, (4, 5, 6), span=span2, size=m2, role="CR2 image"),
        _t1(4, m2 + 1, min(inner.rank_set_size, m2 + 1), role="inner rank set"),
        _t1(5, inner.image.span, _simple_size(m2, inner.image.span), role="inner image"),
        NodeSpec(6, "T2", ell, count=ceil_div(span2, ell) + 1, slot_bits=ell, elem_bits=ell,
                 sentinel=True, role="inner groups"),
        NodeSpec(7, "T2", ell, count=m2, slot_bits=ell, elem_bits=ell, starred=True,
                 role="CR2 nonempty groups"),
        _t1(8, top.image.span, _simple_size(n, top.image.span), role="block image"),
        NodeSpec(9, "CR1", ell, (10, 11, 12), span=big_l, size=big_l, array=True,
                 elem_batches=per, count=p.blocks, role="per block"),
        NodeSpec(10, "T3", count=p.blocks, input="ints", role="block rank sets"),
        NodeSpec(11, "T2", ell, count=p.blocks, slot_bits=block.image.span, elem_bits=per,
                 role="block images"),
        NodeSpec(12, "CLIENT", ell, role="client windows"),
    )
    return Topology(p, nodes)


def tuned_topology(p: ParameterPlan) -> Topology:
    n, ell, big_l = p.n, p.ell, p.big_l
    n1 = n + 1
    top, s1, cr2, span2, m2, inner = _left_subtree_bounds(p)
    R = frozenset({RANK})
    S = frozenset({SELECT})
    per = p.sub_per_block
    nodes = (
        NodeSpec(0, "BR1", big_l, (1, 10), span=n1, size=n, role="root"),
        NodeSpec(1, "BR2D", 0, (2, 3, 9), span=top.image.span, size=n, multiset=True,
                 input="ints", role="block counts"),
        _t1(2, top.image.span, n, ops=R, multiset=True, role="first-level directory"),
        NodeSpec(3, "CR2", ell, (4, 5, 8), span=n1, size=s1, ops=R, role="rank set of block counts"),
        _t1(4, s1 + 1, min(cr2.rank_set_size, s1 + 1), ops=S, role="CR2 rank set"),
        NodeSpec(5, "BR1", ell, (6, 7), span=span2, size=m2, ops=R, role="CR2 image"),
        _t1(6, inner.image.span, m2, ops=R, multiset=True, role="inner group counts"),
        NodeSpec(7, "T2", ell, count=ceil_div(span2, ell) + 1, slot_bits=ell, elem_bits=ell,
                 sentinel=True, ops=R, role="inner groups"),
        NodeSpec(8, "T2", ell, count=m2, slot_bits=ell, elem_bits=ell, starred=True, ops=R,
                 role="CR2 nonempty groups"),
        _t1(9, top.image.span, _simple_size(n, top.image.span), ops=S, role="block image"),
        NodeSpec(10, "BR1", ell, (11, 12), span=big_l, size=big_l, array=True,
                 elem_batches=per, count=p.blocks, role="per block"),
        NodeSpec(11, "T4", count=p.blocks, input="ints", role="second-level directory"),
        NodeSpec(12, "CLIENT", ell, role="client windows"),
    )
    return Topology(p, nodes)


def build_topology(p: ParameterPlan) -> Topology:
    return {"simplified": simplified_topology, "optimal": optimal_topology,
            "tuned": tuned_topology}[p.variant](p)
