"""Self-contained O(n)-bit rank/select structure.

Two CR1 nodes with grouping parameter ell sit on top of T1 and T2 leaves.
The root's right leaf keeps every ell-bit piece of the input, so queries
never touch the client sequence.
"""

from __future__ import annotations

from .base import TreeIndex, register
from .bitcore import BitChunkStream
from .plan import plan
from .stream import build


@register("simplified")
class SimplifiedStructure(TreeIndex):
    needs_client = False


def simplified_build(stream: BitChunkStream, ell: int | None = None, table_budget: int | None = None) -> SimplifiedStructure:
    return build(stream, plan(stream.n, "simplified", ell=ell, table_budget=table_budget))


def simplified_rank(s: SimplifiedStructure, j: int) -> int:
    return s.rank(j)


def simplified_select(s: SimplifiedStructure, k: int) -> int:
    return s.select(k)
