"""Query-time reduction trees.

Every node answers ``rank(e, a, j, ctx)`` and ``select(e, a, k, ctx)`` where
``a`` is the offset of the (multi)set the parent assigned to it and ``e``
selects the slot of the bank it reads (the element index for nodes that
live in an array, the group slot for bank leaves).  Inner nodes evaluate the
combined-reduction formulas as straight-line code; leaves do one or two
primitive probes.

``ctx.log``, when set, is a per-query :class:`ProbeLog`.
"""

from __future__ import annotations

from collections import Counter

from .errors import InvariantViolation
from .plan import NodeSpec, Topology


class ProbeLog:
    """Counts primitive probes (table entries, bank slots, client windows) of one query."""

    __slots__ = ("probes", "visits", "windows")

    def __init__(self):
        self.probes = 0
        self.visits: Counter = Counter()
        self.windows: list[tuple[int, int]] = []

    def hit(self, node_id: int, op: str, probes: int = 0) -> None:
        self.probes += probes
        self.visits[node_id, op] += 1


class QueryContext:
    __slots__ = ("client", "log")

    def __init__(self, client=None, log: ProbeLog | None = None):
        self.client = client
        self.log = log


# ---------------------------------------------------------------- leaves


class T1Leaf:
    __slots__ = ("id", "spec", "table", "rank_entries", "select_entries", "span")

    def __init__(self, spec: NodeSpec, table):
        self.id = spec.id
        self.spec = spec
        self.table = table
        self.rank_entries = table.rank_entries
        self.select_entries = table.select_entries
        self.span = table.descriptor.span

    def rank(self, e, a, j, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "rank", 1)
        i = j - a + 1
        return self.rank_entries[0 if i < 0 else (self.span if i > self.span else i)]

    def select(self, e, a, k, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "select", 1)
        return a - 1 + self.select_entries[k - 1]


class T2BankLeaf:
    """Slot ``e`` holds the bit-vector representation of one small set."""

    __slots__ = ("id", "spec", "slots", "width", "stride", "grank", "gselect")

    def __init__(self, spec: NodeSpec, slots: list[int], glob):
        self.id = spec.id
        self.spec = spec
        self.slots = slots
        self.width = spec.slot_bits
        self.stride = glob.stride
        self.grank = glob.rank
        self.gselect = glob.select

    def rank(self, e, a, j, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "rank", 2)
        i = j - a + 1
        return self.grank[self.slots[e] * self.stride + (0 if i < 0 else (self.width if i > self.width else i))]

    def select(self, e, a, k, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "select", 2)
        return a - 1 + self.gselect[self.slots[e] * self.stride + k]


class T3BankLeaf:
    __slots__ = ("id", "spec", "keys", "codec", "probes")

    def __init__(self, spec: NodeSpec, keys: list[int], codec):
        self.id = spec.id
        self.spec = spec
        self.keys = keys
        self.codec = codec
        # a key is one word; table mode adds one global-table probe
        self.probes = 2 if codec.rank_table is not None else 1

    def rank(self, e, a, j, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "rank", self.probes)
        return self.codec.rank(self.keys[e], j - a)

    def select(self, e, a, k, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "select", self.probes)
        return a + self.codec.select(self.keys[e], k)


class T4BankLeaf:
    """Keys over universe {1..N}; with offset a, value t stands for a - 1 + t."""

    __slots__ = ("id", "spec", "keys", "codec", "probes")

    def __init__(self, spec: NodeSpec, keys: list[int], codec):
        self.id = spec.id
        self.spec = spec
        self.keys = keys
        self.codec = codec
        self.probes = 2 if codec.rank_table is not None else 1

    def rank(self, e, a, j, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "rank", self.probes)
        return self.codec.rank(self.keys[e], j - a + 1)

    def select(self, e, a, k, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "select", self.probes)
        return a - 1 + self.codec.select(self.keys[e], k)


class ClientLeaf:
    """Groups of ell consecutive client bits, read on demand; stores nothing.

    The client sequence is viewed with a 0 prepended, so the group at
    universe offset ``a`` is the window starting at client bit ``a - 1``.
    """

    __slots__ = ("id", "spec", "lam", "stride", "grank", "gselect")

    def __init__(self, spec: NodeSpec, glob):
        self.id = spec.id
        self.spec = spec
        self.lam = spec.lam
        self.stride = glob.stride
        self.grank = glob.rank
        self.gselect = glob.select

    def window(self, a, ctx):
        lam = self.lam
        if a:
            start, count, shift = a - 1, lam, 0
        else:
            start, count, shift = 0, lam - 1, 1
        if ctx.log is not None:
            ctx.log.windows.append((start, count))
        if count == 0:
            return 0
        return ctx.client.read_window(start, count) << shift

    def rank(self, e, a, j, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "rank", 2)
        p = self.window(a, ctx)
        i = j - a + 1
        return self.grank[p * self.stride + (0 if i < 0 else (self.lam if i > self.lam else i))]

    def select(self, e, a, k, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "select", 2)
        return a - 1 + self.gselect[self.window(a, ctx) * self.stride + k]


# ---------------------------------------------------------------- inner nodes


class CR1Node:
    """rank = X.select(Y.rank(q-1)+1) + Z[q].rank(j); select with the r-reuse."""

    __slots__ = ("id", "spec", "lam", "X", "Y", "Z", "zmult", "zadd")

    def __init__(self, spec: NodeSpec, X, Y, Z):
        self.id = spec.id
        self.spec = spec
        self.lam = spec.lam
        self.X, self.Y, self.Z = X, Y, Z
        # group slot of q: element-major inside arrays, shifted past a leading empty slot
        self.zmult = spec.elem_batches if spec.array else 0
        self.zadd = 1 if Z.spec.sentinel else 0

    def rank(self, e, a, j, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "rank")
        lam = self.lam
        q = j // lam
        ya = a // lam
        head = self.X.select(e, 0, self.Y.rank(e, ya, q - 1, ctx) + 1, ctx)
        return head + self.Z.rank(e * self.zmult + q - ya + self.zadd, lam * q, j, ctx)

    def select(self, e, a, k, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "select")
        lam = self.lam
        ya = a // lam
        r = self.X.rank(e, 0, k - 1, ctx)
        q = self.Y.select(e, ya, r, ctx)
        return self.Z.select(e * self.zmult + q - ya + self.zadd, lam * q, k - self.X.select(e, 0, r, ctx), ctx)


class CR2Node:
    """CR1 over the nonempty groups only; rank masks the vacant-group product."""

    __slots__ = ("id", "spec", "lam", "X", "Y", "Z", "masked")

    def __init__(self, spec: NodeSpec, X, Y, Z, masked: bool = True):
        if spec.array:
            raise InvariantViolation("CR2 nodes inside arrays are not supported")
        self.id = spec.id
        self.spec = spec
        self.lam = spec.lam
        self.X, self.Y, self.Z = X, Y, Z
        self.masked = masked

    def rank(self, e, a, j, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "rank")
        lam = self.lam
        q = j // lam
        ya = a // lam
        lo = self.Y.rank(e, ya, q - 1, ctx)
        hi = self.Y.rank(e, ya, q, ctx)
        head = self.X.select(e, 0, lo + 1, ctx)
        if self.masked:
            return head + self.Z.rank((hi if hi > 1 else 1) - 1, lam * q, j, ctx) * (hi - lo)
        if hi == lo:
            return head
        return head + self.Z.rank(hi - 1, lam * q, j, ctx)

    def select(self, e, a, k, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "select")
        lam = self.lam
        r = self.X.rank(e, 0, k - 1, ctx)
        q = self.Y.select(e, a // lam, r, ctx)
        return self.Z.select(r - 1, lam * q, k - self.X.select(e, 0, r, ctx), ctx)


class BR1Node:
    """G answers for the multiset image g[[S]], Z for the groups."""

    __slots__ = ("id", "spec", "lam", "G", "Z", "zmult", "zadd")

    def __init__(self, spec: NodeSpec, G, Z):
        self.id = spec.id
        self.spec = spec
        self.lam = spec.lam
        self.G, self.Z = G, Z
        self.zmult = spec.elem_batches if spec.array else 0
        self.zadd = 1 if Z.spec.sentinel else 0

    def rank(self, e, a, j, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "rank")
        lam = self.lam
        q = j // lam
        ya = a // lam
        return self.G.rank(e, ya, q - 1, ctx) + self.Z.rank(e * self.zmult + q - ya + self.zadd, lam * q, j, ctx)

    def select(self, e, a, k, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "select")
        lam = self.lam
        ya = a // lam
        q = self.G.select(e, ya, k, ctx)
        return self.Z.select(e * self.zmult + q - ya + self.zadd, lam * q, k - self.G.rank(e, ya, q - 1, ctx), ctx)


class BR2DNode:
    """BR2 whose rank side is a T1 directory; select goes through the rank image."""

    __slots__ = ("id", "spec", "D", "V", "Sup")

    def __init__(self, spec: NodeSpec, D, V, Sup):
        self.id = spec.id
        self.spec = spec
        self.D, self.V, self.Sup = D, V, Sup

    def rank(self, e, a, j, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "rank")
        return self.D.rank(e, a, j, ctx)

    def select(self, e, a, k, ctx):
        if ctx.log is not None:
            ctx.log.hit(self.id, "select")
        return self.Sup.select(e, a, self.V.rank(e, 0, k - 1, ctx), ctx)


def assemble(topology: Topology, leaves: dict, glob, masked: bool = True):
    """Wire query nodes for ``topology``; ``leaves`` maps leaf id to its payload."""
    plan = topology.plan
    built = {}

    def make(i):
        spec = topology[i]
        if spec.kind == "T1":
            node = T1Leaf(spec, leaves[i])
        elif spec.kind == "T2":
            node = T2BankLeaf(spec, leaves[i].slots, glob)
        elif spec.kind == "T3":
            node = T3BankLeaf(spec, leaves[i], plan.t3_codec())
        elif spec.kind == "T4":
            node = T4BankLeaf(spec, leaves[i], plan.t4_codec())
        elif spec.kind == "CLIENT":
            node = ClientLeaf(spec, glob)
        else:
            kids = [make(c) for c in spec.children]
            if spec.kind == "CR1":
                node = CR1Node(spec, *kids)
            elif spec.kind == "CR2":
                node = CR2Node(spec, *kids, masked=masked)
            elif spec.kind == "BR1":
                node = BR1Node(spec, *kids)
            elif spec.kind == "BR2D":
                node = BR2DNode(spec, *kids)
            else:
                raise InvariantViolation(f"unknown node kind {spec.kind}")
        built[i] = node
        return node

    root = make(0)
    return root, built
