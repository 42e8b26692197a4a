"""Bit-sequence primitives.

Bit ``i`` of a :class:`PackedBitArray` lives in byte ``i // 8`` at bit
position ``i % 8`` (LSB-first).  Every multi-bit value read out of a bit
sequence has its first bit in the least significant position, and every
multi-byte integer written by this package is little-endian.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import BinaryIO, Iterable, Iterator, Protocol

import numpy as np

from .errors import ConfigurationError, ConstructionError, InvariantViolation, UsageError

WORD_BITS = 64


@dataclass(frozen=True)
class SpanDescriptor:
    """Universe ``{offset, ..., offset + span - 1}`` of a bit-vector representation.

    Bit ``i`` (1-based) of the representation stands for the integer
    ``offset - 1 + i``.
    """

    offset: int
    span: int

    def __post_init__(self):
        if self.span < 0:
            raise UsageError(f"span must be >= 0, got {self.span}")

    @property
    def stop(self) -> int:
        return self.offset + self.span

    def __contains__(self, x: int) -> bool:
        return self.offset <= x < self.stop


class PackedBitArray:
    """Immutable packed bit sequence, LSB-first inside each byte."""

    __slots__ = ("length_bits", "payload")

    def __init__(self, length_bits: int, payload: bytes | bytearray = b""):
        nbytes = (length_bits + 7) // 8
        payload = bytes(payload[:nbytes]).ljust(nbytes, b"\0")
        tail = length_bits % 8
        if tail and payload[-1] >> tail:
            # trailing padding bits are always 0
            payload = payload[:-1] + bytes([payload[-1] & ((1 << tail) - 1)])
        self.length_bits = length_bits
        self.payload = payload

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "PackedBitArray":
        bits = np.fromiter((1 if b else 0 for b in bits), dtype=np.uint8)
        return cls(len(bits), np.packbits(bits, bitorder="little").tobytes())

    @classmethod
    def from_string(cls, s: str) -> "PackedBitArray":
        """``"0110"`` -> b1=0, b2=1, b3=1, b4=0."""
        s = "".join(s.split())
        if set(s) - {"0", "1"}:
            raise UsageError(f"not a bit string: {s!r}")
        return cls.from_bits(c == "1" for c in s)

    @classmethod
    def from_int(cls, value: int, length_bits: int) -> "PackedBitArray":
        return cls(length_bits, value.to_bytes((length_bits + 7) // 8 or 1, "little"))

    @classmethod
    def from_numpy(cls, bits: np.ndarray) -> "PackedBitArray":
        bits = np.asarray(bits, dtype=np.uint8)
        return cls(len(bits), np.packbits(bits, bitorder="little").tobytes())

    def to_numpy(self) -> np.ndarray:
        raw = np.frombuffer(self.payload, dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.length_bits]

    def to_int(self) -> int:
        return int.from_bytes(self.payload, "little")

    def __len__(self) -> int:
        return self.length_bits

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length_bits:
            raise IndexError(i)
        return (self.payload[i >> 3] >> (i & 7)) & 1

    def __iter__(self) -> Iterator[int]:
        return iter(self.to_numpy().tolist())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PackedBitArray)
            and self.length_bits == other.length_bits
            and self.payload == other.payload
        )

    def __hash__(self):
        return hash((self.length_bits, self.payload))

    def __repr__(self):
        if self.length_bits <= 64:
            return f"PackedBitArray({self.to_string()!r})"
        return f"PackedBitArray(<{self.length_bits} bits>)"

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.to_numpy())

    def read(self, start: int, count: int) -> int:
        """Bits ``start .. start+count-1``; positions past the end read as 0."""
        if start < 0 or count < 0:
            raise UsageError(f"bad window ({start}, {count})")
        lo = start >> 3
        hi = (start + count + 7) >> 3
        word = int.from_bytes(self.payload[lo:hi], "little") >> (start & 7)
        return word & ((1 << count) - 1)

    def weight(self) -> int:
        return int(np.unpackbits(np.frombuffer(self.payload, dtype=np.uint8)).sum())

    def slice(self, start: int, count: int) -> "PackedBitArray":
        count = max(0, min(count, self.length_bits - start))
        if start % 8 == 0:
            return PackedBitArray(count, self.payload[start // 8 : (start + count + 7) // 8])
        return PackedBitArray.from_numpy(self.to_numpy()[start : start + count])


class ClientBitAccess(Protocol):
    """Constant-time access to a window of at most 64 consecutive client bits."""

    total_bits: int

    def read_window(self, start: int, count: int) -> int: ...


class PackedClient:
    """:class:`ClientBitAccess` over an in-memory :class:`PackedBitArray`."""

    __slots__ = ("bits", "total_bits", "_payload")

    def __init__(self, bits: PackedBitArray):
        self.bits = bits
        self.total_bits = bits.length_bits
        # 8 zero bytes of slack so every window can be sliced without bounds checks
        self._payload = bits.payload + bytes(8)

    def read_window(self, start: int, count: int) -> int:
        if not 0 < count <= WORD_BITS:
            raise UsageError(f"window length must be in (0, {WORD_BITS}], got {count}")
        if start < 0:
            raise UsageError(f"window start must be >= 0, got {start}")
        lo = start >> 3
        word = int.from_bytes(self._payload[lo : lo + 9], "little") >> (start & 7)
        return word & ((1 << count) - 1)


def read_window(access: ClientBitAccess, start: int, count: int) -> int:
    """Bits ``start .. start+count-1`` of ``access``, bit ``start`` least significant."""
    if not 0 < count <= WORD_BITS:
        raise UsageError(f"window length must be in (0, {WORD_BITS}], got {count}")
    if start < 0:
        raise UsageError(f"window start must be >= 0, got {start}")
    return access.read_window(start, count)


class BitChunkStream:
    """Single-consumer, in-order delivery of a bit sequence in chunks.

    ``request_log`` records the index of every chunk handed out, so callers can
    check that a build read its input exactly once and in order.
    """

    def __init__(self, chunks: Iterable[PackedBitArray], n: int):
        self.n = n
        self._chunks = iter(chunks)
        self.request_log: list[int] = []
        self.delivered_bits = 0
        self._exhausted = False

    @classmethod
    def from_bits(cls, bits: PackedBitArray, chunk_bits: int = 4096) -> "BitChunkStream":
        return cls(iter_chunks(bits, chunk_bits), bits.length_bits)

    @classmethod
    def from_chunk_sizes(cls, bits: PackedBitArray, sizes: Iterable[int]) -> "BitChunkStream":
        def gen():
            pos = 0
            for size in sizes:
                if pos >= bits.length_bits:
                    return
                yield bits.slice(pos, size)
                pos += size
            if pos < bits.length_bits:
                yield bits.slice(pos, bits.length_bits - pos)

        return cls(gen(), bits.length_bits)

    @classmethod
    def from_reader(cls, reader: BinaryIO, n: int, chunk_bits: int = 4096) -> "BitChunkStream":
        return cls(iter_reader_chunks(reader, n, chunk_bits), n)

    def next_chunk(self) -> PackedBitArray | None:
        """Next chunk, or ``None`` once ``n`` bits have been delivered."""
        if self._exhausted:
            return None
        chunk = next(self._chunks, None)
        if chunk is None:
            self._exhausted = True
            if self.delivered_bits != self.n:
                raise ConstructionError(
                    f"stream ended after {self.delivered_bits} bits, expected {self.n}"
                )
            return None
        self.request_log.append(len(self.request_log))
        self.delivered_bits += chunk.length_bits
        if self.delivered_bits > self.n:
            raise ConstructionError(f"stream delivered more than the declared {self.n} bits")
        return chunk


def iter_chunks(bits: PackedBitArray, chunk_bits: int) -> Iterator[PackedBitArray]:
    if chunk_bits <= 0:
        raise UsageError("chunk size must be positive")
    for start in range(0, bits.length_bits, chunk_bits):
        yield bits.slice(start, chunk_bits)


def iter_reader_chunks(reader: BinaryIO, n: int, chunk_bits: int) -> Iterator[PackedBitArray]:
    """Cut the first ``n`` bits of a raw LSB-first bit file into chunks."""
    if chunk_bits <= 0:
        raise UsageError("chunk size must be positive")
    need = n
    pending, pending_len = 0, 0
    read_size = max(4096, (chunk_bits + 7) // 8)
    while need > 0:
        while pending_len < chunk_bits and pending_len < need:
            data = reader.read(read_size)
            if not data:
                break
            pending |= int.from_bytes(data, "little") << pending_len
            pending_len += 8 * len(data)
        if pending_len == 0:
            raise ConstructionError(f"input ended {need} bits short of the declared {n}")
        take = min(chunk_bits, need, pending_len)
        if take < chunk_bits and take < need:
            raise ConstructionError(f"input ended {need - take} bits short of the declared {n}")
        yield PackedBitArray.from_int(pending & ((1 << take) - 1), take)
        pending >>= take
        pending_len -= take
        need -= take


def read_bits_file(path, n: int) -> PackedBitArray:
    with open(path, "rb") as fh:
        data = fh.read((n + 7) // 8)
    if len(data) * 8 < n:
        raise ConstructionError(f"{path}: holds {len(data) * 8} bits, {n} requested")
    return PackedBitArray(n, data)


def write_bits_file(path, bits: PackedBitArray) -> None:
    with open(path, "wb") as fh:
        fh.write(bits.payload)


class PopcountTable:
    """``counts[p]`` is the number of 1-bits in the ``ell``-bit pattern ``p``."""

    __slots__ = ("ell", "counts")

    def __init__(self, ell: int, counts: list[int]):
        self.ell = ell
        self.counts = counts

    def __getitem__(self, p: int) -> int:
        return self.counts[p]


@lru_cache(maxsize=None)
def build_popcount_table(ell: int) -> PopcountTable:
    if not 1 <= ell <= 24:
        raise ConfigurationError(f"popcount table width must be in [1, 24], got {ell}")
    counts = np.zeros(1 << ell, dtype=np.int64)
    for b in range(ell):
        # counts[p] = counts[p >> 1] + (p & 1), filled one doubling at a time
        half = 1 << b
        counts[half : 2 * half] = counts[:half] + 1
    return PopcountTable(ell, counts.tolist())


def set_to_bits(elements: Iterable[int], d: SpanDescriptor) -> PackedBitArray:
    bits = np.zeros(d.span, dtype=np.uint8)
    for x in elements:
        if x not in d:
            raise InvariantViolation(f"{x} outside universe [{d.offset}, {d.stop})")
        bits[x - d.offset] = 1
    return PackedBitArray.from_numpy(bits)


def bits_to_set(bits: PackedBitArray, d: SpanDescriptor) -> set[int]:
    return {d.offset + int(i) for i in np.flatnonzero(bits.to_numpy())}


def pack_fixed(values, width: int) -> bytes:
    """Pack unsigned integers into consecutive ``width``-bit fields, LSB-first."""
    arr = np.asarray(values, dtype=np.uint64)
    if width == 0 or arr.size == 0:
        return b""
    if width > 64:
        raise UsageError("field width above 64 bits")
    bits = ((arr[:, None] >> np.arange(width, dtype=np.uint64)) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits.ravel(), bitorder="little").tobytes()


def unpack_fixed(data: bytes, count: int, width: int) -> list[int]:
    if width == 0 or count == 0:
        return [0] * count
    raw = np.frombuffer(data, dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")[: count * width]
    if bits.size < count * width:
        raise UsageError("packed payload too short")
    bits = bits.reshape(count, width).astype(np.uint64)
    weights = np.uint64(1) << np.arange(width, dtype=np.uint64)
    return (bits * weights).sum(axis=1, dtype=np.uint64).tolist()


def packed_bytes(count: int, width: int) -> int:
    return (count * width + 7) // 8


__all__ = [
    "WORD_BITS",
    "SpanDescriptor",
    "PackedBitArray",
    "ClientBitAccess",
    "PackedClient",
    "read_window",
    "BitChunkStream",
    "iter_chunks",
    "iter_reader_chunks",
    "read_bits_file",
    "write_bits_file",
    "PopcountTable",
    "build_popcount_table",
    "set_to_bits",
    "bits_to_set",
    "pack_fixed",
    "unpack_fixed",
    "packed_bytes",
]
