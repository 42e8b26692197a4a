"""Brute-force check of every reduction identity on one (S, lambda) pair.

Children are built with the oracle's set helpers, then each formula of
:mod:`rsindex.algebra` is compared with rank/select of S itself.
"""

from __future__ import annotations

from rsindex import algebra as A
from rsindex.oracle import (IntMultiset, group, image, multiset_image, nonempty_groups,
                            rank_image, support)


def _starred(S, lam):
    groups = nonempty_groups(S, lam)
    # slots past the last nonempty group read as empty, as in a zero-filled bank
    return lambda r: groups[r - 1] if r <= len(groups) else A.EMPTY


def violations(S, lam, universe) -> list[str]:
    """Every identity that fails for S and lambda, as readable strings."""
    S = IntMultiset(S)
    out = []
    js = range(-2, universe + 2)
    ks = range(1, len(S) + 1)
    Z = group(S, lam)
    Zs = _starred(S, lam)
    G = multiset_image(S, lam)
    Y = image(S, lam)
    X = rank_image(G)

    def bad(name, arg, got, want):
        out.append(f"{name}({arg}) = {got}, want {want} (S={list(S)}, lam={lam})")

    for j in js:
        want = S.rank(j)
        for name, got in (
            ("br1_rank", A.br1_rank(G, Z, lam, j)),
            ("cr1_rank", A.cr1_rank(X, Y, Z, lam, j)),
            ("cr2_rank", A.cr2_rank(X, Y, Zs, lam, j)),
            ("cr2_rank_branch", A.cr2_rank(X, Y, Zs, lam, j, masked=False)),
        ):
            if got != want:
                bad(name, j, got, want)
    for k in ks:
        want = S.select(k)
        for name, fn in (
            ("br1_select", lambda: A.br1_select(G, Z, lam, k)),
            ("cr1_select", lambda: A.cr1_select(X, Y, Z, lam, k)),
            ("cr1_select_unoptimized", lambda: A.cr1_select_unoptimized(X, Y, Z, lam, k)),
            ("cr2_select", lambda: A.cr2_select(X, Y, Zs, lam, k)),
            ("cr2_select_unoptimized", lambda: A.cr2_select_unoptimized(X, Y, Zs, lam, k)),
        ):
            got = fn()
            if got != want:
                bad(name, k, got, want)
    # group access through the nonempty-group list
    for q in range(-1, universe // lam + 2):
        got = list(A.br3_group(Y, Zs, q)) if A.br3_group(Y, Zs, q) is not A.EMPTY else []
        if got != list(Z(q)):
            bad("br3_group", q, got, list(Z(q)))
    # the support/rank-image split, on the multiset of group indices
    RX, RY = rank_image(G), support(G)
    for j in range(-2, universe // lam + 2):
        if A.br2_rank(RX, RY, j) != G.rank(j):
            bad("br2_rank", j, A.br2_rank(RX, RY, j), G.rank(j))
    for k in range(1, len(G) + 1):
        if A.br2_select(RX, RY, k) != G.select(k):
            bad("br2_select", k, A.br2_select(RX, RY, k), G.select(k))
    # BR1 again with the multiset G as the grouped set (the identity does not need simplicity)
    mu = max(1, lam // 2)
    GG, GZ = multiset_image(G, mu), group(G, mu)
    for j in range(-2, universe // lam + 2):
        if A.br1_rank(GG, GZ, mu, j) != G.rank(j):
            bad("br1_rank_multiset", j, A.br1_rank(GG, GZ, mu, j), G.rank(j))
    for k in range(1, len(G) + 1):
        if A.br1_select(GG, GZ, mu, k) != G.select(k):
            bad("br1_select_multiset", k, A.br1_select(GG, GZ, mu, k), G.select(k))
    return out
