"""On-disk container: fixed header, section table, one section per leaf.

Layout (all integers little-endian)::

    magic "RSIX" | version u16 | variant u8 | flags u8 | n u64 | m u64
    ell u16 | L u32 | strategy u16 | section count u16
    per section: leaf id u16 | kind u8 | byte length u64
    section payloads, in table order

A payload is one or two packed arrays, each ``count u64 | width u32`` followed
by ``count`` fixed-width fields (LSB-first, padded to a byte).  T1 sections
hold the rank array then the select array; T2 the slots; T3/T4 the keys.
CLIENT sections are empty.  Global lookup tables are not stored: they are a
function of the parameters and are rebuilt on load.
"""

from __future__ import annotations

import struct
from dataclasses import replace

from .bitcore import SpanDescriptor, pack_fixed, packed_bytes, unpack_fixed
from .errors import ConfigurationError, ContainerError, RankSelectError
from .plan import VARIANT_CODES, build_topology, plan
from .tables import T1Table, T2Bank

MAGIC = b"RSIX"
VERSION = 1
HEADER = struct.Struct("<4sHBBQQHIH")
COUNT = struct.Struct("<H")
SECTION = struct.Struct("<HBQ")
ARRAY = struct.Struct("<QI")

KIND_CODES = {"T1": 1, "T2": 2, "T3": 3, "T4": 4, "CLIENT": 5}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}
VARIANT_NAMES = {v: k for k, v in VARIANT_CODES.items()}

FLAG_CR2_BRANCH = 1


def _array(values, width: int) -> bytes:
    return ARRAY.pack(len(values), width) + pack_fixed(values, width)


def _read_array(data: bytes, pos: int, end: int):
    if pos + ARRAY.size > end:
        raise ContainerError("section truncated inside an array header")
    count, width = ARRAY.unpack_from(data, pos)
    pos += ARRAY.size
    if width > 64:
        raise ContainerError(f"array field width {width} exceeds 64")
    nbytes = packed_bytes(count, width)
    if pos + nbytes > end:
        raise ContainerError("section truncated inside an array payload")
    values = unpack_fixed(data[pos : pos + nbytes], count, width)
    return values, width, pos + nbytes


def section_payload(spec, payload, p) -> bytes:
    kind = spec.kind
    if kind == "T1":
        return _array(payload.rank_entries, payload.rank_bits) + _array(payload.select_entries, payload.select_bits)
    if kind == "T2":
        return _array(payload.slots, payload.slot_bits)
    if kind == "T3":
        return _array(payload, p.t3_codec().key_bits)
    if kind == "T4":
        return _array(payload, p.t4_codec().key_bits)
    return b""


def header_bytes(index) -> bytes:
    p = index.plan
    flags = 0 if index.masked else FLAG_CR2_BRANCH
    return HEADER.pack(MAGIC, VERSION, VARIANT_CODES[p.variant], flags, p.n, index.m,
                       p.ell, p.big_l, p.strategy)


def serialize_parts(index):
    """``(header, section_table, [(spec, payload_bytes), ...])`` of ``index``."""
    sections = [(spec, section_payload(spec, index.leaves[spec.id], index.plan))
                for spec in index.topology.leaves()]
    table = COUNT.pack(len(sections)) + b"".join(
        SECTION.pack(spec.id, KIND_CODES[spec.kind], len(body)) for spec, body in sections
    )
    return header_bytes(index), table, sections


def serialize(index) -> bytes:
    header, table, sections = serialize_parts(index)
    return header + table + b"".join(body for _, body in sections)


def read_header(data: bytes) -> dict:
    if len(data) < HEADER.size:
        raise ContainerError(f"container of {len(data)} bytes is shorter than its header")
    magic, version, variant, flags, n, m, ell, big_l, strategy = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ContainerError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    if variant not in VARIANT_NAMES:
        raise ContainerError(f"unknown variant code {variant}")
    return dict(variant=VARIANT_NAMES[variant], flags=flags, n=n, m=m, ell=ell, L=big_l,
                strategy=strategy)


def _plan_from_header(h: dict):
    try:
        big_l = h["L"] if h["variant"] != "simplified" else None
        p = plan(h["n"], h["variant"], ell=h["ell"], big_l=big_l)
    except ConfigurationError as exc:
        raise ContainerError(f"header parameters are invalid: {exc}") from None
    if p.strategy != h["strategy"]:
        # the build used another table budget; pick the smallest one that reproduces it
        need = 0
        probe = replace(p, strategy=h["strategy"], table_budget=64 + 16)
        for flag_on, make in ((probe.t3_table, probe.t3_codec), (probe.t4_table, probe.t4_codec)):
            if flag_on:
                c = make()
                need = max(need, c.key_bits + max(c.rank_arg_bits, c.select_arg_bits))
        p = replace(p, strategy=h["strategy"], table_budget=need)
    return p


def section_table(data: bytes) -> list[dict]:
    pos = HEADER.size
    if pos + COUNT.size > len(data):
        raise ContainerError("container truncated before its section table")
    (count,) = COUNT.unpack_from(data, pos)
    pos += COUNT.size
    out = []
    for _ in range(count):
        if pos + SECTION.size > len(data):
            raise ContainerError("container truncated inside its section table")
        leaf, kind, length = SECTION.unpack_from(data, pos)
        pos += SECTION.size
        if kind not in KIND_NAMES:
            raise ContainerError(f"unknown section kind {kind}")
        out.append(dict(leaf=leaf, kind=KIND_NAMES[kind], bytes=length))
    start = pos
    for sec in out:
        sec["start"] = start
        start += sec["bytes"]
    if start != len(data):
        raise ContainerError(f"sections cover {start} bytes, file has {len(data)}")
    return out


def deserialize(data: bytes):
    from .base import index_class

    h = read_header(data)
    p = _plan_from_header(h)
    topology = build_topology(p)
    sections = section_table(data)
    specs = topology.leaves()
    if [(s["leaf"], s["kind"]) for s in sections] != [(s.id, s.kind) for s in specs]:
        raise ContainerError("section table does not match the variant's topology")
    leaves = {}
    try:
        for spec, sec in zip(specs, sections):
            leaves[spec.id] = _decode_section(spec, data, sec["start"], sec["start"] + sec["bytes"], p)
    except RankSelectError as exc:
        if isinstance(exc, ContainerError):
            raise
        raise ContainerError(f"malformed section: {exc}") from None
    return index_class(p.variant)(p, topology, leaves, h["m"],
                                  masked=not h["flags"] & FLAG_CR2_BRANCH)


def _decode_section(spec, data, pos, end, p):
    kind = spec.kind
    if kind == "CLIENT":
        if pos != end:
            raise ContainerError("CLIENT section must be empty")
        return None
    if kind == "T1":
        rank, rbits, pos = _read_array(data, pos, end)
        select, sbits, pos = _read_array(data, pos, end)
        if rank and len(rank) != spec.span + 1:
            raise ContainerError(f"T1 leaf {spec.id}: {len(rank)} rank entries, span {spec.span}")
        size = rank[-1] if rank else sum(1 for x in select if x)
        payload = T1Table(SpanDescriptor(0, spec.span), size, rank, select, rbits, sbits)
    elif kind == "T2":
        slots, width, pos = _read_array(data, pos, end)
        if len(slots) != spec.count or width != spec.slot_bits:
            raise ContainerError(f"T2 leaf {spec.id}: unexpected shape ({len(slots)} x {width})")
        payload = T2Bank(width, slots)
    else:
        keys, width, pos = _read_array(data, pos, end)
        codec = p.t3_codec() if kind == "T3" else p.t4_codec()
        if len(keys) != spec.count or width != codec.key_bits:
            raise ContainerError(f"{kind} leaf {spec.id}: unexpected shape ({len(keys)} x {width})")
        payload = keys
    if pos != end:
        raise ContainerError(f"leaf {spec.id}: {end - pos} trailing bytes in section")
    return payload


def load(path):
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def save(index, path) -> int:
    data = serialize(index)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)
