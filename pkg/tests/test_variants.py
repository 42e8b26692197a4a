from __future__ import annotations

import pytest

from conftest import answers, make_index, random_bits
from rsindex import (OptimalIndex, SimplifiedStructure, TunedIndex, optimal_build, optimal_rank,
                     optimal_select, simplified_build, simplified_rank, simplified_select,
                     space_report, tuned_build, tuned_rank, tuned_select)
from rsindex.base import as_client
from rsindex.bitcore import BitChunkStream, PackedBitArray, PackedClient
from rsindex.errors import ConfigurationError, QueryDomainError, UsageError
from rsindex.oracle import OracleBits, PatternSpec, generate
from rsindex.plan import VARIANTS, plan
from rsindex.stream import build, build_leaves

SMALL = dict(ell=4, big_l=8)


def oracle_answers(bits):
    o = OracleBits(bits)
    return [o.rank(j) for j in range(o.n + 1)], [o.select(k) for k in range(1, o.m + 1)]


# ---- worked examples


def test_simplified_examples(example_bits):
    s = simplified_build(BitChunkStream.from_bits(example_bits), ell=2)
    assert isinstance(s, SimplifiedStructure)
    assert simplified_rank(s, 4) == 2
    assert simplified_select(s, 5) == 8
    assert simplified_rank(s, 7) == 4
    assert simplified_select(s, 1) == 2
    assert simplified_rank(s, 0) == 0
    log = s.probe("rank", 4)[1]
    assert log.windows == []


def test_simplified_degenerate_inputs():
    zeros, _ = make_index("0" * 16, "simplified", ell=4)
    assert zeros.m == 0
    with pytest.raises(QueryDomainError):
        zeros.select(1)
    ones, _ = make_index("1" * 16, "simplified", ell=4)
    assert ones.rank_all() == list(range(17))


def test_optimal_examples(example_bits):
    p = plan(8, "optimal", ell=2, big_l=4)
    index = optimal_build(BitChunkStream.from_bits(example_bits), p)
    assert isinstance(index, OptimalIndex)
    client = PackedClient(example_bits)
    assert optimal_rank(index, client, 4) == 2
    assert optimal_rank(index, client, 0) == 0
    assert optimal_select(index, client, 3) == 5
    assert optimal_select(index, client, 5) == 8
    ones = PackedBitArray.from_string("1" * 64)
    index = optimal_build(BitChunkStream.from_bits(ones), plan(64, "optimal", **SMALL))
    assert optimal_rank(index, ones, 37) == 37
    single = PackedBitArray.from_string("00010000" * 4)
    index = optimal_build(BitChunkStream.from_bits(single), plan(32, "optimal", **SMALL))
    assert index.m == 4 and optimal_select(index, single, 1) == 4


def test_tuned_examples(example_bits):
    p = plan(8, "tuned", ell=2, big_l=4)
    index = tuned_build(BitChunkStream.from_bits(example_bits), p)
    assert isinstance(index, TunedIndex)
    # blocks of 0.B are 0011, 0101, 1000: ones before each block boundary
    assert index.directory() == [0, 2, 4, 5]
    assert [index.block_tuple(b) for b in range(3)] == [[0, 2, 2], [1, 2, 2], [1, 1, 1]]
    assert tuned_rank(index, example_bits, 5) == 3
    assert tuned_rank(index, example_bits, 8) == 5
    assert tuned_rank(index, example_bits, 0) == 0
    assert tuned_select(index, example_bits, 4) == 7
    assert tuned_select(index, example_bits, 5) == 8
    single = PackedBitArray.from_string("000000100")
    index = tuned_build(BitChunkStream.from_bits(single), plan(9, "tuned", ell=2, big_l=4))
    assert tuned_select(index, single, 1) == 7


def test_tuned_build_needs_tuned_plan(example_bits):
    with pytest.raises(ConfigurationError):
        tuned_build(BitChunkStream.from_bits(example_bits), plan(8, "optimal"))


# ---- oracle equivalence


@pytest.mark.parametrize("variant", VARIANTS)
def test_exhaustive_up_to_eight_bits(variant):
    """All 2^n inputs for n <= 8; the n <= 12 sweep is acceptance criterion 1."""
    for n in range(1, 9):
        p = plan(n, variant, ell=4, big_l=None if variant == "simplified" else 8)
        for x in range(1 << n):
            bits = PackedBitArray.from_int(x, n)
            index = build(BitChunkStream.from_bits(bits, 3), p)
            assert answers(index, bits) == oracle_answers(bits), (variant, bits)


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("kind", ["all-zero", "all-one", "alternating", "single-one",
                                  "run-structured", "bernoulli", "clustered"])
def test_patterns_match_oracle(variant, kind):
    bits = generate(PatternSpec(kind, seed=4), 5000)
    index, _ = make_index(bits, variant)
    assert answers(index, bits) == oracle_answers(bits)


@pytest.mark.parametrize("variant", VARIANTS)
def test_table_mode_matches_direct_mode(variant, rng):
    bits = random_bits(rng, 3000, 0.5)
    direct, _ = make_index(bits, variant, ell=5, big_l=15, table_budget=0)
    table, _ = make_index(bits, variant, ell=5, big_l=15, table_budget=64)
    if variant != "simplified":
        assert direct.plan.strategy == 0 and table.plan.strategy != 0
    assert answers(direct, bits) == answers(table, bits) == oracle_answers(bits)


def test_cr2_branch_form_matches_masked(rng):
    bits = random_bits(rng, 2000, 0.05)
    res = build_leaves(BitChunkStream.from_bits(bits), plan(2000, "optimal", **SMALL))
    masked = OptimalIndex.from_build(res)
    branch = OptimalIndex.from_build(res, masked=False)
    assert answers(masked, bits) == answers(branch, bits) == oracle_answers(bits)


# ---- query-time behaviour


@pytest.mark.parametrize("variant", ["optimal", "tuned"])
def test_client_access_is_one_short_window(variant, rng):
    bits = random_bits(rng, 4000, 0.5)
    index, _ = make_index(bits, variant)
    client = as_client(bits)
    for op, arg in [("rank", int(j)) for j in rng.integers(0, 4001, 300)] + \
                   [("select", int(k)) for k in rng.integers(1, index.m + 1, 300)]:
        _, log = index.probe(op, arg, client)
        assert len(log.windows) <= 1
        assert all(0 < c <= index.plan.ell for _, c in log.windows)


@pytest.mark.parametrize("variant", VARIANTS)
def test_queries_only_reach_provisioned_structures(variant, rng):
    bits = random_bits(rng, 3000, 0.3)
    index, _ = make_index(bits, variant)
    client = as_client(bits) if index.needs_client else None
    for j in range(0, 3001, 7):
        for node, op in index.probe("rank", j, client)[1].visits:
            assert op in index.topology[node].ops
    for k in range(1, index.m + 1, 5):
        for node, op in index.probe("select", k, client)[1].visits:
            assert op in index.topology[node].ops


def test_tuned_leaves_store_one_query_kind():
    index, _ = make_index("0110" * 1000, "tuned")
    topo = index.topology
    assert index.leaves[2].select_entries == [] and index.leaves[2].rank_entries
    assert index.leaves[4].rank_entries == [] and index.leaves[4].select_entries
    assert index.leaves[9].rank_entries == []
    assert topo[1].kind == "BR2D" and topo[11].kind == "T4"


def test_tuned_rank_probes_never_exceed_optimal(rng):
    bits = random_bits(rng, 5000, 0.5)
    opt, _ = make_index(bits, "optimal")
    tun, _ = make_index(bits, "tuned")
    client = as_client(bits)
    for j in range(5001):
        assert tun.probe("rank", j, client)[1].probes <= opt.probe("rank", j, client)[1].probes


# ---- errors


def test_query_errors(example_bits):
    index, _ = make_index(example_bits, "optimal", ell=2, big_l=4)
    with pytest.raises(UsageError):
        index.rank(3)  # no client
    with pytest.raises(UsageError):
        index.rank(3, PackedBitArray.from_string("0110"))
    with pytest.raises(QueryDomainError):
        index.rank(9, example_bits)
    with pytest.raises(QueryDomainError):
        index.select(0, example_bits)
    with pytest.raises(QueryDomainError):
        index.select(6, example_bits)
    with pytest.raises(UsageError):
        index.rank(1, object())


@pytest.mark.parametrize("variant", VARIANTS)
def test_space_report_is_exact(variant, rng):
    bits = random_bits(rng, 2500)
    index, _ = make_index(bits, variant)
    rep = space_report(index)
    assert rep.total_bits == 8 * len(index.serialize())
    assert rep.total_bits == rep.header_bits + rep.section_table_bits + sum(s["bits"] for s in rep.sections)
    assert rep.bits_per_input_bit == rep.total_bits / 2500
    client_sections = [s for s in rep.sections if s["kind"] == "CLIENT"]
    assert all(s["bits"] == 0 for s in client_sections)
    assert len(client_sections) == (0 if variant == "simplified" else 1)


@pytest.mark.parametrize("variant", VARIANTS)
def test_allocation_depends_only_on_plan(variant):
    p_bits = [generate(PatternSpec(k, seed=2), 4000) for k in ("all-zero", "all-one", "clustered")]
    sizes = {len(make_index(b, variant)[0].serialize()) for b in p_bits}
    assert len(sizes) == 1


def test_tuned_is_smaller_than_optimal():
    bits = generate(PatternSpec("bernoulli", seed=9), 1 << 16)
    assert len(make_index(bits, "tuned")[0].serialize()) <= len(make_index(bits, "optimal")[0].serialize())
