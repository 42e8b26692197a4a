"""Single-pass construction of a reduction tree from a bit stream.

Every node of the topology becomes a process.  Parents talk to children
through bounded channels (bit channels hold a Python int plus a length, int
channels a short list).  A scheduler runs top-down sweeps in preorder: the
root takes one batch of its grouping parameter from the stream (which starts
with a prepended 0), then every other node consumes whatever complete
batches or integers its inbuffer holds.  After the stream is exhausted each
node's last partial batch is zero-filled and processed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .bitcore import BitChunkStream, build_popcount_table
from .errors import ConstructionError, EncodingError, InvariantViolation, ProtocolError
from .plan import RANK, SELECT, NodeSpec, ParameterPlan, Topology, build_topology
from .tables import T1Builder, T2Bank, width_for

INT_STATE_BITS = 64  # one machine word per process register (s, counters)


# ---------------------------------------------------------------- channels


class BitChannel:
    __slots__ = ("buf", "nbits", "capacity", "peak")

    def __init__(self, capacity: int):
        self.buf = 0
        self.nbits = 0
        self.capacity = capacity
        self.peak = 0

    def put(self, value: int, nbits: int) -> None:
        self.buf |= value << self.nbits
        self.nbits += nbits
        if self.nbits > self.peak:
            self.peak = self.nbits
            if self.nbits > self.capacity:
                raise InvariantViolation(
                    f"bit channel overflow: {self.nbits} bits, capacity {self.capacity}"
                )

    def put_int(self, x: int) -> None:
        raise ProtocolError("integer sent on a bit channel")


class IntChannel:
    __slots__ = ("items", "capacity", "peak")

    def __init__(self, capacity: int):
        self.items: list[int] = []
        self.capacity = capacity
        self.peak = 0

    def put_int(self, x: int) -> None:
        self.items.append(x)
        if len(self.items) > self.peak:
            self.peak = len(self.items)
            if self.peak > self.capacity:
                raise InvariantViolation(
                    f"int channel overflow: {self.peak} integers, capacity {self.capacity}"
                )

    def put(self, value: int, nbits: int) -> None:
        raise ProtocolError("bits sent on an integer channel")


class Recorder:
    """Channel stand-in for protocol traces: keeps every emitted bit or integer."""

    def __init__(self):
        self.items: list[int] = []

    def put(self, value: int, nbits: int) -> None:
        for i in range(nbits):
            self.items.append((value >> i) & 1)

    def put_int(self, x: int) -> None:
        self.items.append(x)

    def take(self) -> list[int]:
        out, self.items = self.items, []
        return out


class _Discard:
    def put(self, value, nbits):
        pass

    def put_int(self, x):
        pass


# ---------------------------------------------------------------- node processes


class _Counter:
    """Batch popcount through the ell-bit table, ``pieces`` lookups per batch."""

    __slots__ = ("table", "ell", "mask", "pieces")

    def __init__(self, lam: int, ell: int):
        if lam % ell:
            raise InvariantViolation(f"batch width {lam} is not a multiple of {ell}")
        self.table = build_popcount_table(ell).counts
        self.ell = ell
        self.mask = (1 << ell) - 1
        self.pieces = lam // ell

    def __call__(self, batch: int) -> int:
        if self.pieces == 1:
            return self.table[batch]
        table, mask, ell = self.table, self.mask, self.ell
        k = 0
        for _ in range(self.pieces):
            k += table[batch & mask]
            batch >>= ell
        return k


class CRProcess:
    """CR1/CR2 node: prefix counts to the left, occupancy bits to the middle, batches right."""

    def __init__(self, kind: str, lam: int, ell: int, left, middle, right, left_ints: bool):
        self.kind = kind
        self.lam = lam
        self.count = _Counter(lam, ell)
        self.left, self.middle, self.right = left, middle, right
        self.left_ints = left_ints
        self.starred = kind == "CR2"
        self.s = 0
        self.steps = 0

    def start(self) -> None:
        self.s = 0
        if self.left_ints:
            self.left.put_int(0)
        else:
            self.left.put(1, 1)

    def consume(self, batch: int) -> None:
        self.steps += 1
        k = self.count(batch)
        if k:
            self.s += k
            if self.left_ints:
                self.left.put_int(self.s)
            else:
                self.left.put(1 << (k - 1), k)
            self.middle.put(1, 1)
            self.right.put(batch, self.lam)
        else:
            self.middle.put(0, 1)
            if not self.starred:
                self.right.put(batch, self.lam)


class BR1Process:
    """BR1 node: the running count s before the first batch and after every batch."""

    def __init__(self, lam: int, ell: int, left, right):
        self.kind = "BR1"
        self.lam = lam
        self.count = _Counter(lam, ell)
        self.left, self.right = left, right
        self.s = 0
        self.steps = 0

    def start(self) -> None:
        self.s = 0
        self.left.put_int(0)

    def consume(self, batch: int) -> None:
        self.steps += 1
        self.s += self.count(batch)
        self.left.put_int(self.s)
        self.right.put(batch, self.lam)


class BR2Process:
    """BR2 node fed with a nondecreasing integer sequence starting at 0.

    The left child receives the rank image as bits, the right child the
    support as bits; ``directory`` (if any) receives the integers unchanged.
    """

    def __init__(self, left, right, directory=None):
        self.kind = "BR2"
        self.left, self.right = left, right
        self.directory = directory
        self.s = None
        self.steps = 0

    def consume_int(self, x: int) -> None:
        self.steps += 1
        if self.directory is not None:
            self.directory.put_int(x)
        s = self.s
        if s is None:
            if x != 0:
                raise ProtocolError(f"BR2 input must start with 0, got {x}")
            self.s = 0
            self.left.put(1, 1)
        elif x > s:
            k = x - s
            self.left.put(1 << (k - 1), k)
            self.right.put(1, 1)
            self.s = x
        elif x == s:
            self.right.put(0, 1)
        else:
            raise ProtocolError(f"BR2 input decreased from {s} to {x}")


# ---------------------------------------------------------------- protocol traces


@dataclass
class Emissions:
    left: list = field(default_factory=list)
    middle: list = field(default_factory=list)
    right: list = field(default_factory=list)


def _batch_value(batch) -> tuple[int, int]:
    if isinstance(batch, str):
        bits = [int(c) for c in batch]
    elif isinstance(batch, int):
        raise ProtocolError("pass batches as bit strings or sequences so their width is known")
    else:
        bits = [1 if b else 0 for b in batch]
    return sum(b << i for i, b in enumerate(bits)), len(bits)


def trace_process(kind: str, lam: int, left_ints: bool = False, s: int = 0):
    """A standalone process whose channels record emissions, for protocol traces."""
    rec = (Recorder(), Recorder(), Recorder())
    if kind in ("CR1", "CR2"):
        p = CRProcess(kind, lam, lam if lam <= 16 else 1, rec[0], rec[1], rec[2], left_ints)
    elif kind == "BR1":
        p = BR1Process(lam, lam if lam <= 16 else 1, rec[0], rec[2])
    elif kind == "BR2":
        p = BR2Process(rec[0], rec[2])
    else:
        raise ProtocolError(f"no trace process for kind {kind}")
    p.recorders = rec
    if kind != "BR2":
        p.s = s
    return p


def _collect(p) -> Emissions:
    left, middle, right = p.recorders
    return Emissions(left.take(), middle.take(), right.take())


def node_start(p) -> Emissions:
    """Emissions a CR/BR1 process makes before its first batch."""
    s = p.s
    p.start()
    p.s = s
    return _collect(p)


def _check_width(p, width):
    if width != p.lam:
        raise ProtocolError(f"batch of {width} bits for a node with lambda={p.lam}")


def cr_node_consume_batch(p: CRProcess, batch) -> Emissions:
    value, width = _batch_value(batch)
    _check_width(p, width)
    p.consume(value)
    return _collect(p)


def br1_node_consume_batch(p: BR1Process, batch) -> Emissions:
    value, width = _batch_value(batch)
    _check_width(p, width)
    p.consume(value)
    return _collect(p)


def br2_node_consume_int(p: BR2Process, s: int) -> Emissions:
    p.consume_int(s)
    return _collect(p)


# ---------------------------------------------------------------- leaf sinks


class T1BitSink:
    def __init__(self, spec: NodeSpec):
        self.spec = spec
        self.builder = T1Builder(spec.descriptor, spec.size, RANK in spec.ops, SELECT in spec.ops)

    def drain(self, ch: BitChannel) -> None:
        if ch.nbits:
            self.builder.push_bits(ch.buf, ch.nbits)
            ch.buf, ch.nbits = 0, 0

    def finish(self):
        return self.builder.finish()


class T1IntSink:
    """Multiset T1 fed with the running counts 0, s_1, s_2, ... of its parent."""

    def __init__(self, spec: NodeSpec):
        self.spec = spec
        self.builder = T1Builder(spec.descriptor, spec.size, RANK in spec.ops, SELECT in spec.ops)
        self.started = False

    def drain(self, ch: IntChannel) -> None:
        b = self.builder
        for x in ch.items:
            if not self.started:
                if x != 0:
                    raise ProtocolError("multiset T1 input must start with 0")
                self.started = True
            else:
                b.push_count(x)
        ch.items.clear()

    def finish(self):
        return self.builder.finish()


class T2Sink:
    """One fixed-width slot per ``elem_bits`` input bits, behind an optional empty sentinel."""

    def __init__(self, spec: NodeSpec):
        self.spec = spec
        self.elem_bits = spec.elem_bits
        self.mask = (1 << spec.elem_bits) - 1
        self.slots: list[int] = [0] if spec.sentinel else []
        self.buf, self.nbits = 0, 0

    def drain(self, ch: BitChannel) -> None:
        if not ch.nbits:
            return
        buf = self.buf | (ch.buf << self.nbits)
        nbits = self.nbits + ch.nbits
        ch.buf, ch.nbits = 0, 0
        e, mask, slots = self.elem_bits, self.mask, self.slots
        while nbits >= e:
            slots.append(buf & mask)
            buf >>= e
            nbits -= e
        self.buf, self.nbits = buf, nbits

    def finish(self) -> T2Bank:
        if self.nbits:
            self.slots.append(self.buf)
            self.buf, self.nbits = 0, 0
        if len(self.slots) > self.spec.count:
            raise InvariantViolation(
                f"T2 leaf {self.spec.id}: {len(self.slots)} slots exceed allocation {self.spec.count}"
            )
        self.slots.extend([0] * (self.spec.count - len(self.slots)))
        return T2Bank(self.spec.slot_bits, self.slots)


class T3Sink:
    """Packs each element's integers (an element starts at integer 0) into one key."""

    def __init__(self, spec: NodeSpec, codec):
        self.spec = spec
        self.codec = codec
        self.keys: list[int] = []
        self.current: list[int] | None = None

    def _flush(self):
        if self.current is not None:
            try:
                self.keys.append(self.codec.encode(self.current))
            except EncodingError as exc:
                raise InvariantViolation(f"T3 leaf {self.spec.id}: {exc}") from None

    def drain(self, ch: IntChannel) -> None:
        for x in ch.items:
            if x == 0:
                self._flush()
                self.current = [0]
            elif self.current is None:
                raise ProtocolError("T3 element must start with 0")
            else:
                self.current.append(x)
        ch.items.clear()

    def finish(self) -> list[int]:
        self._flush()
        self.current = None
        if len(self.keys) > self.spec.count:
            raise InvariantViolation("T3 leaf received more elements than allocated")
        # every block delivers an element, so this pads nothing on valid input
        self.keys.extend([0] * (self.spec.count - len(self.keys)))
        return self.keys


class T4Sink:
    """Per element: 0 followed by the sub-block prefix counts; stored as an N-tuple."""

    def __init__(self, spec: NodeSpec, codec, per_element: int):
        self.spec = spec
        self.codec = codec
        self.per_element = per_element
        self.keys: list[int] = []
        self.current: list[int] = []

    def drain(self, ch: IntChannel) -> None:
        cur = self.current
        for x in ch.items:
            cur.append(x)
            if len(cur) == self.per_element:
                if cur[0] != 0:
                    raise ProtocolError("T4 element must start with 0")
                tup = cur[1:]
                tup.extend([tup[-1]] * (self.codec.N - len(tup)))
                try:
                    self.keys.append(self.codec.encode(tup))
                except EncodingError as exc:
                    raise InvariantViolation(f"T4 leaf {self.spec.id}: {exc}") from None
                cur.clear()
        ch.items.clear()

    def finish(self) -> list[int]:
        if self.current:
            raise InvariantViolation("T4 leaf ended inside an element")
        if len(self.keys) > self.spec.count:
            raise InvariantViolation("T4 leaf received more elements than allocated")
        self.keys.extend([0] * (self.spec.count - len(self.keys)))
        return self.keys


class ClientSink:
    """Ignores its input and stores nothing."""

    def __init__(self, spec: NodeSpec):
        self.spec = spec

    def drain(self, ch) -> None:
        pass

    def finish(self):
        return None


# ---------------------------------------------------------------- scheduler


@dataclass
class BuildStats:
    n: int
    sweeps: int = 0
    batch_steps: int = 0
    popcount_lookups: int = 0
    chunk_requests: list = field(default_factory=list)
    channel_capacity: dict = field(default_factory=dict)
    channel_peak: dict = field(default_factory=dict)
    aux_bits: int = 0
    aligned_offsets: int = 0
    seconds: float = 0.0

    def single_pass(self) -> bool:
        log = self.chunk_requests
        return log == list(range(len(log)))

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "sweeps": self.sweeps,
            "batch_steps": self.batch_steps,
            "popcount_lookups": self.popcount_lookups,
            "chunks": len(self.chunk_requests),
            "single_pass": self.single_pass(),
            "aux_bits": self.aux_bits,
            "channel_peak": {str(k): v for k, v in self.channel_peak.items()},
            "seconds": round(self.seconds, 4),
        }


@dataclass
class BuildResult:
    plan: ParameterPlan
    topology: Topology
    leaves: dict
    m: int
    stats: BuildStats


class _RootReader:
    """Hands out ``lam``-bit batches of ``0 . B`` from a chunk stream."""

    def __init__(self, stream: BitChunkStream, lam: int):
        self.stream = stream
        self.lam = lam
        self.acc, self.accn = 0, 1  # the prepended 0
        self.chunk = b""
        self.clen = 0
        self.cpos = 0
        self.done = False

    def _pull(self) -> bool:
        chunk = self.stream.next_chunk()
        if chunk is None:
            self.done = True
            return False
        self.chunk = chunk.payload + bytes(16)
        self.clen = chunk.length_bits
        self.cpos = 0
        return True

    def next_batch(self) -> int | None:
        lam = self.lam
        while self.accn < lam:
            if self.cpos >= self.clen:
                if self.done or not self._pull():
                    break
                continue
            want = lam - self.accn
            got = min(want, self.clen - self.cpos)
            pos = self.cpos
            lo = pos >> 3
            v = int.from_bytes(self.chunk[lo : lo + ((pos & 7) + got + 7) // 8], "little") >> (pos & 7)
            self.acc |= (v & ((1 << got) - 1)) << self.accn
            self.accn += got
            self.cpos += got
        if self.accn == 0:
            return None
        batch = self.acc  # a short final batch is zero-filled
        self.acc, self.accn = 0, 0
        return batch


class _BitsNode:
    """Drives a CR/BR1 process from a bit channel, batch by batch."""

    def __init__(self, proc, inp: BitChannel):
        self.proc = proc
        self.inp = inp
        self.mask = (1 << proc.lam) - 1

    def run(self) -> None:
        ch = self.inp
        lam = self.proc.lam
        if ch.nbits < lam:
            return
        consume, mask = self.proc.consume, self.mask
        buf, nb = ch.buf, ch.nbits
        while nb >= lam:
            consume(buf & mask)
            buf >>= lam
            nb -= lam
        ch.buf, ch.nbits = buf, nb

    def flush(self) -> None:
        self.run()
        if self.inp.nbits:
            self.proc.consume(self.inp.buf)
            self.inp.buf, self.inp.nbits = 0, 0


class _ArrayNode:
    """One process instance restarted per element; each element is one parent batch."""

    def __init__(self, proc, inp: BitChannel, elem_bits: int, stats: BuildStats):
        self.proc = proc
        self.inp = inp
        self.elem_bits = elem_bits
        self.gpe = elem_bits // proc.lam
        self.stats = stats
        self.offset = 0

    def run(self) -> None:
        ch = self.inp
        E = self.elem_bits
        lam = self.proc.lam
        mask = (1 << lam) - 1
        consume, start = self.proc.consume, self.proc.start
        while ch.nbits >= E:
            block = ch.buf & ((1 << E) - 1)
            ch.buf >>= E
            ch.nbits -= E
            if self.offset % lam:
                raise InvariantViolation(f"array element offset {self.offset} not aligned to {lam}")
            self.stats.aligned_offsets += 1
            self.offset += E
            start()
            for _ in range(self.gpe):
                consume(block & mask)
                block >>= lam
        if ch.nbits:
            raise InvariantViolation("array node received a partial element")

    flush = run


class _IntNode:
    def __init__(self, proc, inp: IntChannel):
        self.proc = proc
        self.inp = inp

    def run(self) -> None:
        consume = self.proc.consume_int
        for x in self.inp.items:
            consume(x)
        self.inp.items.clear()

    flush = run


class _LeafNode:
    def __init__(self, sink, inp):
        self.sink = sink
        self.inp = inp

    def run(self) -> None:
        self.sink.drain(self.inp)

    flush = run


def build(stream: BitChunkStream, p: ParameterPlan, topology: Topology | None = None):
    """Run the single-pass construction and wrap the result in the plan's index class."""
    from .base import index_class

    result = build_leaves(stream, p, topology)
    return index_class(p.variant).from_build(result)


def build_leaves(stream: BitChunkStream, p: ParameterPlan, topology: Topology | None = None) -> BuildResult:
    if stream.n != p.n:
        raise ConstructionError(f"stream declares {stream.n} bits, plan expects {p.n}")
    topology = topology or build_topology(p)
    if topology.plan != p:
        raise ConstructionError("topology was derived from a different plan")
    t0 = time.perf_counter()
    stats = BuildStats(p.n)
    ell = p.ell
    root_lam = p.root_lambda
    bit_cap = root_lam + ell
    int_cap = 1 + (p.sub_per_block if p.big_l else 1)

    channels: dict[int, object] = {}
    drivers: dict[int, object] = {}
    sinks: dict[int, object] = {}
    procs: dict[int, object] = {}

    def channel_for(child: NodeSpec):
        kind = child.kind
        ints = kind in ("T3", "T4", "BR2D") or (kind == "T1" and child.multiset)
        if kind == "CLIENT":
            ch = _Discard()
        elif ints:
            ch = IntChannel(int_cap)
        else:
            ch = BitChannel(bit_cap)
        channels[child.id] = ch
        return ch

    def wire(spec: NodeSpec, inp):
        kids = [topology[c] for c in spec.children]
        outs = [channel_for(c) for c in kids]
        for c, ch in zip(kids, outs):
            if not c.is_leaf:
                wire(c, ch)
        if spec.kind in ("CR1", "CR2"):
            left_ints = isinstance(outs[0], IntChannel)
            proc = CRProcess(spec.kind, spec.lam, ell, outs[0], outs[1], outs[2], left_ints)
        elif spec.kind == "BR1":
            proc = BR1Process(spec.lam, ell, outs[0], outs[1])
        elif spec.kind == "BR2D":
            proc = BR2Process(outs[1], outs[2], directory=outs[0])
        else:
            raise InvariantViolation(f"no process for {spec.kind}")
        procs[spec.id] = proc
        if spec.id == 0:
            drivers[0] = None
        elif spec.kind == "BR2D":
            drivers[spec.id] = _IntNode(proc, inp)
        elif spec.array:
            drivers[spec.id] = _ArrayNode(proc, inp, spec.span, stats)
        else:
            drivers[spec.id] = _BitsNode(proc, inp)
        for c, ch in zip(kids, outs):
            if c.is_leaf:
                sinks[c.id] = _make_sink(c, p)
                drivers[c.id] = _LeafNode(sinks[c.id], ch)

    wire(topology[0], None)
    order = [i for i in topology.preorder() if i != 0]
    root = procs[0]
    reader = _RootReader(stream, root_lam)

    for i in topology.preorder():
        spec = topology[i]
        if not spec.is_leaf and not spec.array and spec.kind != "BR2D":
            procs[i].start()
    run_list = [drivers[i].run for i in order]
    while True:
        batch = reader.next_batch()
        if batch is None:
            break
        root.consume(batch)
        stats.sweeps += 1
        for run in run_list:
            run()
    for i in order:
        drivers[i].flush()

    leaves = {i: sinks[i].finish() for i in sorted(sinks)}
    stats.chunk_requests = list(stream.request_log)
    stats.batch_steps = sum(pr.steps for pr in procs.values())
    stats.popcount_lookups = sum(
        pr.steps * pr.count.pieces for pr in procs.values() if hasattr(pr, "count")
    )
    for i, ch in channels.items():
        if isinstance(ch, _Discard):
            continue
        stats.channel_capacity[i] = ch.capacity
        stats.channel_peak[i] = ch.peak
        stats.aux_bits += ch.capacity * (width_for(p.n) if isinstance(ch, IntChannel) else 1)
    # registers: s and a batch word per process, plus the T3/T4 element being packed
    stats.aux_bits += len(procs) * 2 * INT_STATE_BITS
    stats.aux_bits += int_cap * INT_STATE_BITS
    stats.seconds = time.perf_counter() - t0
    return BuildResult(p, topology, leaves, root.s, stats)


def _make_sink(spec: NodeSpec, p: ParameterPlan):
    if spec.kind == "T1":
        return T1IntSink(spec) if spec.multiset else T1BitSink(spec)
    if spec.kind == "T2":
        return T2Sink(spec)
    if spec.kind == "T3":
        return T3Sink(spec, p.t3_codec())
    if spec.kind == "T4":
        return T4Sink(spec, p.t4_codec(), 1 + p.sub_per_block)
    if spec.kind == "CLIENT":
        return ClientSink(spec)
    raise InvariantViolation(f"no sink for leaf kind {spec.kind}")
