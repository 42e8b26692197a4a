"""Tuned index: a two-level rank directory in front of a select-only subtree.

Rank reads the block directory (a multiset T1 over block counts), one T4
key of sub-block prefix counts, and one client window, in the manner of a
superblock/block directory.  Select walks the BR1/BR2 split of the root,
which only ever asks rank queries of the CR2 subtree below it.
"""

from __future__ import annotations

from .base import TreeIndex, register
from .bitcore import BitChunkStream
from .errors import ConfigurationError
from .plan import ParameterPlan, plan
from .stream import build

DIRECTORY_LEAF = 2
T4_LEAF = 11


@register("tuned")
class TunedIndex(TreeIndex):
    needs_client = True

    def directory(self) -> list[int]:
        """Ones before each block boundary: entry q counts blocks 0..q-1 of ``0 . B``."""
        return self.leaves[DIRECTORY_LEAF].rank_entries[: self.plan.blocks + 1]

    def block_tuple(self, block: int) -> list[int]:
        """Decoded T4 fields of ``block``: ones in its first t sub-blocks, t = 1..N."""
        return self.plan.t4_codec().fields(self.leaves[T4_LEAF][block])


def tuned_build(stream: BitChunkStream, p: ParameterPlan | None = None) -> TunedIndex:
    if p is not None and p.variant != "tuned":
        raise ConfigurationError(f"tuned_build needs a tuned plan, got {p.variant}")
    return build(stream, p or plan(stream.n, "tuned"))


def tuned_rank(index: TunedIndex, client, j: int) -> int:
    return index.rank(j, client)


def tuned_select(index: TunedIndex, client, k: int) -> int:
    return index.select(k, client)
