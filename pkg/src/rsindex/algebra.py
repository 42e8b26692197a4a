"""Grouping, the three basic reductions and the two combined reductions.

Every function here works against abstract children: any object with
``rank(j)`` and ``select(k)`` methods, plus a callable ``Z(q)`` returning the
child for group ``q``.  The same formulas are evaluated by the stored trees
(see :mod:`rsindex.tree`); keeping them here, free of storage, lets the test
suite check each identity against brute force on its own.

Every ``rank`` accepts any integer and clamps, so boundary cases such as
``rank(q - 1)`` at the bottom of the universe need no special handling.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bitcore import SpanDescriptor
from .errors import QueryDomainError, UsageError


def g(lam: int, i: int) -> int:
    """Grouping function: floor(i / lam), floor semantics for negative i."""
    return i // lam


class _Empty:
    """The canonical empty group."""

    def rank(self, j: int) -> int:
        return 0

    def select(self, k: int) -> int:
        raise QueryDomainError("select on an empty group")

    def __repr__(self):
        return "EMPTY"


EMPTY = _Empty()


def br1_rank(G, Z, lam: int, j: int) -> int:
    q = j // lam
    return G.rank(q - 1) + Z(q).rank(j)


def br1_select(G, Z, lam: int, k: int) -> int:
    q = G.select(k)
    return Z(q).select(k - G.rank(q - 1))


def br2_rank(X, Y, j: int) -> int:
    """X answers for the rank image of S, Y for its support."""
    return X.select(Y.rank(j) + 1)


def br2_select(X, Y, k: int) -> int:
    return Y.select(X.rank(k - 1))


def br3_group(Y, Zstar, q: int):
    """Group q from the nonempty-group list; EMPTY when group q is vacant."""
    hi = Y.rank(q)
    if hi - Y.rank(q - 1) == 1:
        return Zstar(hi)
    return EMPTY


def cr1_rank(X, Y, Z, lam: int, j: int) -> int:
    q = j // lam
    return X.select(Y.rank(q - 1) + 1) + Z(q).rank(j)


def cr1_select(X, Y, Z, lam: int, k: int) -> int:
    r = X.rank(k - 1)
    q = Y.select(r)
    return Z(q).select(k - X.select(r))


def cr1_select_unoptimized(X, Y, Z, lam: int, k: int) -> int:
    q = Y.select(X.rank(k - 1))
    return Z(q).select(k - X.select(Y.rank(q - 1) + 1))


def cr2_rank(X, Y, Zstar, lam: int, j: int, masked: bool = True) -> int:
    """Zstar(r) is the r-th nonempty group (r >= 1).

    The masked form multiplies by the vacancy indicator instead of testing
    it; ``max(hi, 1)`` keeps the (discarded) product well defined.
    """
    q = j // lam
    lo = Y.rank(q - 1)
    hi = Y.rank(q)
    head = X.select(lo + 1)
    if masked:
        return head + Zstar(max(hi, 1)).rank(j) * (hi - lo)
    if hi == lo:
        return head
    return head + Zstar(hi).rank(j)


def cr2_select(X, Y, Zstar, lam: int, k: int) -> int:
    r = X.rank(k - 1)
    return Zstar(r).select(k - X.select(r))


def cr2_select_unoptimized(X, Y, Zstar, lam: int, k: int) -> int:
    q = Y.select(X.rank(k - 1))
    return Zstar(Y.rank(q)).select(k - X.select(Y.rank(q - 1) + 1))


@dataclass(frozen=True)
class Propagation:
    """Universe bookkeeping for the children of one reduction node."""

    rank_set: SpanDescriptor
    rank_set_size: int
    image: SpanDescriptor
    image_size: int
    lam: int

    def group(self, q: int) -> SpanDescriptor:
        return SpanDescriptor(self.lam * q, self.lam)

    def starred_group(self, selected_q: int) -> SpanDescriptor:
        """Offset of the r-th nonempty group, given q = select_{g(S)}(r)."""
        return SpanDescriptor(self.lam * selected_q, self.lam)

    def group_range(self, d: SpanDescriptor) -> range:
        """Groups that can be nonempty: g(a) .. g(a + n - 1)."""
        if d.span == 0:
            return range(0)
        return range(d.offset // self.lam, (d.offset + d.span - 1) // self.lam + 1)


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def propagate(d: SpanDescriptor, m: int, lam: int) -> Propagation:
    """Offsets, spans and size bounds of a reduction's children.

    ``m`` bounds the size of the set described by ``d``.
    """
    if lam < 1:
        raise UsageError(f"grouping parameter must be >= 1, got {lam}")
    groups = ceil_div(d.span, lam) + 1
    return Propagation(
        rank_set=SpanDescriptor(0, m + 1),
        rank_set_size=groups,
        image=SpanDescriptor(d.offset // lam, groups),
        image_size=m,
        lam=lam,
    )
