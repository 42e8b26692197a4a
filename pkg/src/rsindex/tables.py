"""Table-lookup leaves T1-T4 and their global tables.

T1 stores rank/select of one fixed set.  T2 answers queries about any
ell-bit pattern through one global table.  T3 packs a small simple set as a
tuple of elements (last element repeated); T4 packs a small multiset as its
tuple of prefix counts.  T3/T4 keys are decoded directly unless the plan's
table budget allows a global table over all keys.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .bitcore import WORD_BITS, SpanDescriptor
from .errors import ConfigurationError, ConstructionError, EncodingError, QueryDomainError

DEFAULT_TABLE_BUDGET = 22
T2_MAX_WIDTH = 16


def width_for(max_value: int) -> int:
    """Bits needed to store every integer in ``0..max_value``."""
    return max(0, max_value).bit_length()


def table_budget_from_env(default: int = DEFAULT_TABLE_BUDGET) -> int:
    raw = os.environ.get("RSX_TABLE_BUDGET")
    if raw is None or raw == "":
        return default
    try:
        budget = int(raw)
    except ValueError:
        raise ConfigurationError(f"RSX_TABLE_BUDGET must be an integer, got {raw!r}") from None
    if budget < 0:
        raise ConfigurationError("RSX_TABLE_BUDGET must be >= 0")
    return budget


# ---------------------------------------------------------------- T1


class T1Table:
    """rank/select table of one set (or multiset) with a fixed universe.

    ``rank_entries[i]`` is the rank at local position ``i`` (``0..span``) and
    ``select_entries[k-1]`` the local 1-based position of the k-th element.
    Either table may be empty when the owning node never asks for that query.
    """

    __slots__ = ("descriptor", "size", "rank_entries", "select_entries", "rank_bits", "select_bits")

    def __init__(self, descriptor, size, rank_entries, select_entries, rank_bits=None, select_bits=None):
        self.descriptor = descriptor
        self.size = size
        self.rank_entries = rank_entries
        self.select_entries = select_entries
        self.rank_bits = width_for(size) if rank_bits is None else rank_bits
        self.select_bits = width_for(descriptor.span) if select_bits is None else select_bits

    @property
    def span(self) -> int:
        return self.descriptor.span

    def rank(self, j: int) -> int:
        i = j - self.descriptor.offset + 1
        span = self.descriptor.span
        return self.rank_entries[0 if i < 0 else (span if i > span else i)]

    def select(self, k: int) -> int:
        if not 1 <= k <= self.size:
            raise QueryDomainError(f"select({k}) outside 1..{self.size}")
        return self.descriptor.offset - 1 + self.select_entries[k - 1]

    def payload_bits(self) -> int:
        return len(self.rank_entries) * self.rank_bits + len(self.select_entries) * self.select_bits


class T1Builder:
    """Streaming construction of a :class:`T1Table`, one input bit (or count) at a time."""

    __slots__ = ("descriptor", "size_bound", "keep_rank", "keep_select", "pos", "count", "rank", "select")

    def __init__(self, descriptor: SpanDescriptor, size_bound: int, keep_rank=True, keep_select=True):
        self.descriptor = descriptor
        self.size_bound = size_bound
        self.keep_rank = keep_rank
        self.keep_select = keep_select
        self.pos = 0
        self.count = 0
        self.rank = [0]
        self.select: list[int] = []

    def push_bits(self, value: int, nbits: int) -> None:
        if self.pos + nbits > self.descriptor.span:
            # zero padding past the allocated span is inert; anything else is a bug
            extra = self.pos + nbits - self.descriptor.span
            if value >> (nbits - extra):
                raise ConstructionError(
                    f"T1 input exceeds its span {self.descriptor.span}"
                )
            nbits -= extra
            value &= (1 << nbits) - 1
        if value == 0:
            if self.keep_rank:
                self.rank.extend([self.count] * nbits)
            self.pos += nbits
            return
        rank, select = self.rank, self.select
        keep_rank, keep_select = self.keep_rank, self.keep_select
        count, pos = self.count, self.pos
        for _ in range(nbits):
            pos += 1
            if value & 1:
                count += 1
                if keep_select:
                    select.append(pos)
            value >>= 1
            if keep_rank:
                rank.append(count)
        self.count, self.pos = count, pos

    def push_count(self, s: int) -> None:
        """Multiset mode: the next rank value (a running prefix count)."""
        self.pos += 1
        self.count = s
        self.rank.append(s)

    def finish(self) -> T1Table:
        span = self.descriptor.span
        if self.count > self.size_bound:
            raise ConstructionError(f"T1 content size {self.count} exceeds bound {self.size_bound}")
        if self.pos > span:
            raise ConstructionError(f"T1 content length {self.pos} exceeds span {span}")
        if self.keep_rank:
            rank = self.rank + [self.count] * (span + 1 - len(self.rank))
        else:
            rank = []
        if self.keep_select:
            alloc = min(self.size_bound, span)
            select = self.select + [0] * (alloc - len(self.select))
        else:
            select = []
        return T1Table(self.descriptor, self.count, rank, select, width_for(self.size_bound), width_for(span))


def t1_build(bits: Iterable[int], span: int, descriptor: SpanDescriptor | None = None) -> T1Table:
    descriptor = descriptor or SpanDescriptor(1, span)
    if descriptor.span != span:
        raise ConstructionError("descriptor span disagrees with the declared span")
    builder = T1Builder(descriptor, span)
    seen = 0
    for b in bits:
        seen += 1
        if seen > span:
            raise ConstructionError(f"stream longer than span {span}")
        builder.push_bits(1 if b else 0, 1)
    if seen != span:
        raise ConstructionError(f"stream of {seen} bits, span {span}")
    return builder.finish()


def t1_rank(t: T1Table, j: int) -> int:
    return t.rank(j)


def t1_select(t: T1Table, k: int) -> int:
    return t.select(k)


# ---------------------------------------------------------------- T2


class T2Global:
    """rank/select subtables of every ``width``-bit pattern.

    Flat layout with stride ``width + 1``: ``rank[p*(w+1) + i]`` counts the
    1-bits among the first ``i`` bits of ``p``; ``select[p*(w+1) + k]`` is the
    1-based position of the k-th 1-bit of ``p`` (entry ``k=0`` is 0).
    """

    __slots__ = ("width", "stride", "rank", "select")

    def __init__(self, width: int, rank: list[int], select: list[int]):
        self.width = width
        self.stride = width + 1
        self.rank = rank
        self.select = select

    def pattern_rank(self, p: int, i: int) -> int:
        i = 0 if i < 0 else (self.width if i > self.width else i)
        return self.rank[p * self.stride + i]

    def pattern_select(self, p: int, k: int) -> int:
        return self.select[p * self.stride + k]

    def bits(self) -> int:
        entries = (1 << self.width) * self.stride
        return entries * width_for(self.width) * 2


@lru_cache(maxsize=None)
def t2_build_global(width: int, cap: int = T2_MAX_WIDTH) -> T2Global:
    if not 1 <= width <= cap:
        raise ConfigurationError(f"T2 global table width must be in [1, {cap}], got {width}")
    patterns = np.arange(1 << width, dtype=np.int64)
    bits = (patterns[:, None] >> np.arange(width)) & 1
    prefix = np.zeros((1 << width, width + 1), dtype=np.int64)
    prefix[:, 1:] = np.cumsum(bits, axis=1)
    select = np.zeros_like(prefix)
    for k in range(1, width + 1):
        reached = prefix >= k
        select[:, k] = np.where(reached[:, -1], reached.argmax(axis=1), 0)
    return T2Global(width, prefix.ravel().tolist(), select.ravel().tolist())


@dataclass
class T2Bank:
    """Fixed-width slots, slot ``i`` holding one short bit sequence."""

    slot_bits: int
    slots: list[int]

    @property
    def count(self) -> int:
        return len(self.slots)

    def payload_bits(self) -> int:
        return self.count * self.slot_bits


# ---------------------------------------------------------------- strategy


@dataclass(frozen=True)
class LookupStrategy:
    mode: str  # "table" or "direct"
    key_bit_budget: int

    @classmethod
    def decide(cls, key_bits: int, arg_bits: int, budget: int) -> "LookupStrategy":
        return cls("table" if key_bits + arg_bits <= budget else "direct", budget)


# ---------------------------------------------------------------- T3


class T3Codec:
    """Simple sets ``⊆ {0..N-1}`` of size ``1..M`` as M-tuples, last element repeated."""

    def __init__(self, N: int, M: int, budget: int = DEFAULT_TABLE_BUDGET):
        if N < 1 or M < 1:
            raise ConfigurationError(f"T3 needs N, M >= 1 (got {N}, {M})")
        self.N, self.M = N, M
        self.field_bits = max(1, width_for(N - 1))
        self.key_bits = M * self.field_bits
        if self.key_bits > WORD_BITS:
            raise ConfigurationError(f"T3 key of {self.key_bits} bits does not fit one word")
        self.mask = (1 << self.field_bits) - 1
        self.rank_arg_bits = width_for(N)
        self.select_arg_bits = width_for(M)
        arg_bits = max(self.rank_arg_bits, self.select_arg_bits)
        self.strategy = LookupStrategy.decide(self.key_bits, arg_bits, budget)
        self.rank_table = self.select_table = None
        if self.strategy.mode == "table":
            self.rank_table, self.select_table = _t3_tables(N, M)

    def encode(self, elements: Sequence[int]) -> int:
        elements = list(elements)
        if not elements:
            raise EncodingError("T3 cannot encode the empty set")
        if len(elements) > self.M:
            raise EncodingError(f"{len(elements)} elements exceed M={self.M}")
        key = 0
        prev = -1
        for i, x in enumerate(elements):
            if not 0 <= x < self.N:
                raise EncodingError(f"element {x} outside 0..{self.N - 1}")
            if x <= prev:
                raise EncodingError("T3 elements must be strictly increasing")
            prev = x
            key |= x << (i * self.field_bits)
        for i in range(len(elements), self.M):
            key |= prev << (i * self.field_bits)
        return key

    def fields(self, key: int) -> list[int]:
        fb, mask = self.field_bits, self.mask
        return [(key >> (i * fb)) & mask for i in range(self.M)]

    def decode(self, key: int) -> list[int]:
        out = []
        for f in self.fields(key):
            if not out or f != out[-1]:
                out.append(f)
        return out

    def rank(self, key: int, j: int) -> int:
        if self.rank_table is not None:
            a = j + 1
            a = 0 if a < 0 else (self.N if a > self.N else a)
            return self.rank_table[(key << self.rank_arg_bits) | a]
        fb, mask = self.field_bits, self.mask
        r = 0
        prev = -1
        for _ in range(self.M):
            f = key & mask
            if f > j:
                break
            if f != prev:
                r += 1
                prev = f
            key >>= fb
        return r

    def select(self, key: int, k: int) -> int:
        if self.select_table is not None:
            return self.select_table[(key << self.select_arg_bits) | k]
        return (key >> ((k - 1) * self.field_bits)) & self.mask


@lru_cache(maxsize=None)
def _t3_tables(N: int, M: int):
    fb = max(1, width_for(N - 1))
    keys = np.arange(1 << (M * fb), dtype=np.int64)
    fields = np.stack([(keys >> (i * fb)) & ((1 << fb) - 1) for i in range(M)], axis=1)
    fresh = np.ones_like(fields, dtype=bool)
    fresh[:, 1:] = fields[:, 1:] != fields[:, :-1]
    rank_arg, select_arg = width_for(N), width_for(M)
    rank = np.zeros((len(keys), 1 << rank_arg), dtype=np.int64)
    for a in range(N + 1):
        rank[:, a] = (fresh & (fields <= a - 1)).sum(axis=1)
    select = np.zeros((len(keys), 1 << select_arg), dtype=np.int64)
    select[:, 1 : M + 1] = fields
    return rank.ravel().tolist(), select.ravel().tolist()


@lru_cache(maxsize=None)
def t3_codec(N: int, M: int, budget: int = DEFAULT_TABLE_BUDGET) -> T3Codec:
    return T3Codec(N, M, budget)


def t3_encode(elements: Sequence[int], N: int, M: int) -> int:
    return t3_codec(N, M).encode(elements)


def t3_rank(key: int, j: int, N: int, M: int) -> int:
    return t3_codec(N, M).rank(key, j)


def t3_select(key: int, k: int, N: int, M: int) -> int:
    return t3_codec(N, M).select(key, k)


# ---------------------------------------------------------------- T4


class T4Codec:
    """Multisets over ``{1..N}`` of size ``<= M`` as the tuple ``(rank(1), ..., rank(N))``."""

    def __init__(self, N: int, M: int, budget: int = DEFAULT_TABLE_BUDGET):
        if N < 1 or M < 0:
            raise ConfigurationError(f"T4 needs N >= 1, M >= 0 (got {N}, {M})")
        self.N, self.M = N, M
        self.field_bits = max(1, width_for(M))
        self.key_bits = N * self.field_bits
        if self.key_bits > WORD_BITS:
            raise ConfigurationError(f"T4 key of {self.key_bits} bits does not fit one word")
        self.mask = (1 << self.field_bits) - 1
        self.rank_arg_bits = width_for(N)
        self.select_arg_bits = width_for(M)
        arg_bits = max(self.rank_arg_bits, self.select_arg_bits)
        self.strategy = LookupStrategy.decide(self.key_bits, arg_bits, budget)
        self.rank_table = self.select_table = None
        if self.strategy.mode == "table":
            self.rank_table, self.select_table = _t4_tables(N, M)

    def encode(self, ranks: Sequence[int]) -> int:
        ranks = list(ranks)
        if len(ranks) != self.N:
            raise EncodingError(f"T4 tuple needs {self.N} fields, got {len(ranks)}")
        key = 0
        prev = 0
        for i, r in enumerate(ranks):
            if r < prev or r > self.M:
                raise EncodingError(f"T4 tuple {ranks} is not nondecreasing within 0..{self.M}")
            prev = r
            key |= r << (i * self.field_bits)
        return key

    def encode_multiset(self, elements: Iterable[int]) -> int:
        counts = [0] * (self.N + 1)
        for x in elements:
            if not 1 <= x <= self.N:
                raise EncodingError(f"element {x} outside 1..{self.N}")
            counts[x] += 1
        ranks, s = [], 0
        for t in range(1, self.N + 1):
            s += counts[t]
            ranks.append(s)
        return self.encode(ranks)

    def fields(self, key: int) -> list[int]:
        fb, mask = self.field_bits, self.mask
        return [(key >> (i * fb)) & mask for i in range(self.N)]

    def rank(self, key: int, t: int) -> int:
        t = 0 if t < 0 else (self.N if t > self.N else t)
        if self.rank_table is not None:
            return self.rank_table[(key << self.rank_arg_bits) | t]
        if t == 0:
            return 0
        return (key >> ((t - 1) * self.field_bits)) & self.mask

    def select(self, key: int, k: int) -> int:
        if self.select_table is not None:
            return self.select_table[(key << self.select_arg_bits) | k]
        fb, mask = self.field_bits, self.mask
        for t in range(1, self.N + 1):
            if key & mask >= k:
                return t
            key >>= fb
        raise QueryDomainError(f"select({k}) beyond multiset size")


@lru_cache(maxsize=None)
def _t4_tables(N: int, M: int):
    fb = max(1, width_for(M))
    keys = np.arange(1 << (N * fb), dtype=np.int64)
    fields = np.stack([(keys >> (i * fb)) & ((1 << fb) - 1) for i in range(N)], axis=1)
    rank_arg, select_arg = width_for(N), width_for(M)
    rank = np.zeros((len(keys), 1 << rank_arg), dtype=np.int64)
    rank[:, 1 : N + 1] = fields
    select = np.zeros((len(keys), 1 << select_arg), dtype=np.int64)
    for k in range(1, M + 1):
        reached = fields >= k
        select[:, k] = np.where(reached[:, -1], reached.argmax(axis=1) + 1, 0)
    return rank.ravel().tolist(), select.ravel().tolist()


@lru_cache(maxsize=None)
def t4_codec(N: int, M: int, budget: int = DEFAULT_TABLE_BUDGET) -> T4Codec:
    return T4Codec(N, M, budget)


def t4_encode(ranks: Sequence[int], N: int, M: int) -> int:
    return t4_codec(N, M).encode(ranks)


def t4_rank(key: int, j: int, N: int, M: int) -> int:
    return t4_codec(N, M).rank(key, j)


def t4_select(key: int, k: int, N: int, M: int) -> int:
    return t4_codec(N, M).select(key, k)


def global_table_bits(codec) -> int:
    """Stored size of a T3/T4 global table, 0 in direct mode."""
    if codec.rank_table is None:
        return 0
    entry = width_for(max(codec.N, codec.M))
    return (len(codec.rank_table) + len(codec.select_table)) * entry
