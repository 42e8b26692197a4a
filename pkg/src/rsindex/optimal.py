"""The o(n)-bit rank/select index over an externally stored client sequence.

Tree shape, top-down:

* root CR1(L) over blocks of L bits of ``0 . B``;
* left: CR2(ell) over the block prefix counts, with a T1 rank set, an
  inner CR1(ell) (T1, T1, T2 leaves) and a T2 bank of its nonempty groups;
* middle: T1 over the nonempty blocks;
* right: one CR1(ell) per block whose leaves are a T3 key, a T2 slot of
  sub-block occupancy bits, and a CLIENT leaf that reads ell bits on demand.
"""

from __future__ import annotations

from .base import TreeIndex, register, space_report
from .bitcore import BitChunkStream
from .plan import ParameterPlan, plan
from .stream import build


@register("optimal")
class OptimalIndex(TreeIndex):
    needs_client = True


def optimal_build(stream: BitChunkStream, p: ParameterPlan | None = None) -> OptimalIndex:
    return build(stream, p or plan(stream.n, "optimal"))


def optimal_rank(index: OptimalIndex, client, j: int) -> int:
    return index.rank(j, client)


def optimal_select(index: OptimalIndex, client, k: int) -> int:
    return index.select(k, client)


__all__ = ["OptimalIndex", "optimal_build", "optimal_rank", "optimal_select", "space_report"]
