"""Brute-force ground truth and deterministic test inputs.

Nothing here is clever: sets are materialized as sorted lists and every
query is answered from the definition.  :class:`OracleBits` keeps one
prefix-sum array so that bulk verification stays tractable for large n.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .bitcore import PackedBitArray
from .errors import QueryDomainError, UsageError


def naive_rank(bits: PackedBitArray, j: int) -> int:
    if not 0 <= j <= len(bits):
        raise QueryDomainError(f"rank({j}) outside 0..{len(bits)}")
    return sum(bits[i] for i in range(j))


def naive_select(bits: PackedBitArray, k: int) -> int:
    if k < 1:
        raise QueryDomainError(f"select({k}) needs k >= 1")
    seen = 0
    for i in range(len(bits)):
        seen += bits[i]
        if seen == k:
            return i + 1
    raise QueryDomainError(f"select({k}) exceeds weight {seen}")


class IntMultiset:
    """Sorted multiset of integers with rank/select by definition."""

    __slots__ = ("elements",)

    def __init__(self, elements: Iterable[int] = ()):
        self.elements = sorted(elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __eq__(self, other):
        if isinstance(other, IntMultiset):
            return self.elements == other.elements
        return NotImplemented

    def __repr__(self):
        return f"IntMultiset({self.elements})"

    def rank(self, j: int) -> int:
        return bisect.bisect_right(self.elements, j)

    def select(self, k: int) -> int:
        if not 1 <= k <= len(self.elements):
            raise QueryDomainError(f"select({k}) outside 1..{len(self.elements)}")
        return self.elements[k - 1]


def grouping(lam: int):
    if lam < 1:
        raise UsageError(f"grouping parameter must be >= 1, got {lam}")
    return lambda i: i // lam


def support(S: Iterable[int]) -> IntMultiset:
    return IntMultiset(set(S))


def rank_image(S: Iterable[int]) -> IntMultiset:
    """Image of j -> rank_S(j) over all integers j, as a simple set."""
    S = sorted(S)
    image = {0}
    for i, x in enumerate(S):
        if i + 1 == len(S) or S[i + 1] != x:
            image.add(i + 1)
    return IntMultiset(image)


def image(S: Iterable[int], lam: int) -> IntMultiset:
    """g_lam(S) as a simple set."""
    return IntMultiset({x // lam for x in S})


def multiset_image(S: Iterable[int], lam: int) -> IntMultiset:
    """g_lam applied elementwise, multiplicities kept."""
    return IntMultiset(x // lam for x in S)


def group(S: Iterable[int], lam: int):
    """``q -> S ∩ g_lam^{-1}(q)`` as a function defined on every integer q."""
    by_q: dict[int, list[int]] = {}
    for x in S:
        by_q.setdefault(x // lam, []).append(x)
    return lambda q: IntMultiset(by_q.get(q, ()))


def nonempty_groups(S: Iterable[int], lam: int) -> list[IntMultiset]:
    """``(S|g)*`` as a list: entry r-1 is the r-th nonempty group."""
    by_q: dict[int, list[int]] = {}
    for x in S:
        by_q.setdefault(x // lam, []).append(x)
    return [IntMultiset(by_q[q]) for q in sorted(by_q)]


def bits_as_set(bits: PackedBitArray) -> IntMultiset:
    """The client set: ``{j in 1..n : b_j = 1}`` (bit 0 is the prepended 0)."""
    return IntMultiset(int(i) + 1 for i in np.flatnonzero(bits.to_numpy()))


class OracleBits:
    """rank/select of a client sequence from a materialized prefix-sum array."""

    def __init__(self, bits: PackedBitArray):
        arr = bits.to_numpy().astype(np.int64)
        self.n = len(arr)
        self.prefix = np.concatenate([[0], np.cumsum(arr)])
        self.ones = np.flatnonzero(arr) + 1
        self.m = len(self.ones)

    def rank(self, j: int) -> int:
        if not 0 <= j <= self.n:
            raise QueryDomainError(f"rank({j}) outside 0..{self.n}")
        return int(self.prefix[j])

    def select(self, k: int) -> int:
        if not 1 <= k <= self.m:
            raise QueryDomainError(f"select({k}) outside 1..{self.m}")
        return int(self.ones[k - 1])


# ---------------------------------------------------------------- generators

PATTERN_KINDS = (
    "all-zero",
    "all-one",
    "alternating",
    "single-one",
    "run-structured",
    "bernoulli",
    "clustered",
)


@dataclass(frozen=True)
class PatternSpec:
    kind: str
    seed: int = 0
    p: float = 0.5  # bernoulli density
    pos: int | None = None  # 1-based position for single-one

    def __post_init__(self):
        if self.kind not in PATTERN_KINDS:
            raise UsageError(f"unknown pattern kind {self.kind!r}; choose from {PATTERN_KINDS}")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "PatternSpec":
        """``bernoulli:0.1``, ``sparse:0.001`` (alias), ``single-one:17``, ``clustered``..."""
        name, _, arg = text.partition(":")
        if name == "sparse":
            name = "bernoulli"
        if name == "single-one" and arg:
            return cls(name, seed, pos=int(arg))
        if arg:
            return cls(name, seed, p=float(arg))
        return cls(name, seed)


def generate(spec: PatternSpec, n: int) -> PackedBitArray:
    if n < 1:
        raise UsageError("n must be >= 1")
    rng = np.random.default_rng(spec.seed)
    kind = spec.kind
    if kind == "all-zero":
        bits = np.zeros(n, dtype=np.uint8)
    elif kind == "all-one":
        bits = np.ones(n, dtype=np.uint8)
    elif kind == "alternating":
        bits = (np.arange(n) % 2 == 0).astype(np.uint8)
    elif kind == "single-one":
        bits = np.zeros(n, dtype=np.uint8)
        pos = spec.pos if spec.pos is not None else int(rng.integers(1, n + 1))
        if not 1 <= pos <= n:
            raise UsageError(f"single-one position {pos} outside 1..{n}")
        bits[pos - 1] = 1
    elif kind == "run-structured":
        # alternating runs of 0s and 1s with geometric lengths
        lengths = rng.geometric(1 / 32, size=n // 4 + 2)
        vals = np.arange(len(lengths)) % 2
        bits = np.repeat(vals, lengths)[:n].astype(np.uint8)
        if len(bits) < n:
            bits = np.concatenate([bits, np.zeros(n - len(bits), dtype=np.uint8)])
    elif kind == "bernoulli":
        bits = (rng.random(n) < spec.p).astype(np.uint8)
    else:  # clustered: a few dense windows in an otherwise sparse sequence
        bits = (rng.random(n) < 0.002).astype(np.uint8)
        clusters = max(1, n // 4096)
        for start in rng.integers(0, n, size=clusters):
            width = int(rng.integers(1, 512))
            seg = slice(int(start), int(start) + width)
            bits[seg] = (rng.random(len(bits[seg])) < 0.9).astype(np.uint8)
    return PackedBitArray.from_numpy(bits)
