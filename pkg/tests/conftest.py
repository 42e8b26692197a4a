from __future__ import annotations

import numpy as np
import pytest

from rsindex.base import as_client
from rsindex.bitcore import BitChunkStream, PackedBitArray
from rsindex.plan import plan
from rsindex.stream import build

EXAMPLE = "01101011"  # b1..b8


def make_index(bits, variant, ell=None, big_l=None, chunk_bits=4096, table_budget=None):
    if isinstance(bits, str):
        bits = PackedBitArray.from_string(bits)
    if variant == "simplified":
        big_l = None
    p = plan(len(bits), variant, ell=ell, big_l=big_l, table_budget=table_budget)
    return build(BitChunkStream.from_bits(bits, chunk_bits), p), bits


def answers(index, bits):
    """Every rank and select answer, as two lists."""
    client = as_client(bits) if index.needs_client else None
    return index.rank_all(client), index.select_all(client)


def random_bits(rng, n, density=None):
    density = rng.random() if density is None else density
    return PackedBitArray.from_numpy((rng.random(n) < density).astype(np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def example_bits():
    return PackedBitArray.from_string(EXAMPLE)


# ---- acceptance report: one line per criterion at the end of the run

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[c]
        terminalreporter.write_line(f"criterion {c:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
