"""Permutations on ``n`` positions with the card-to-position convention.

A permutation stores ``map[i]`` = position of card ``i``.  The product
``compose(p, q)`` applies ``p`` first and then ``q``, so advancing a deck
state ``p`` by one shuffle step ``s`` is ``compose(p, s)``.  Cards and
positions are both 0-based throughout.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations as _lex_permutations

import numpy as np

DEFAULT_EXACT_CAP = 8


def exact_cap() -> int:
    """Deck-size cap for n!-sized exact computations.

    The default keeps one exact evolution step under a second.  The
    environment variable ``MONTEMIX_EXACT_CAP`` overrides it (at the
    caller's own risk).
    """
    raw = os.environ.get("MONTEMIX_EXACT_CAP")
    return DEFAULT_EXACT_CAP if raw is None else int(raw)


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0..n-1}; ``map[i]`` is the position of card ``i``.

    >>> Permutation((1, 2, 0)).n
    3
    """

    map: tuple[int, ...]

    def __post_init__(self):
        normalized = tuple(int(v) for v in self.map)
        object.__setattr__(self, "map", normalized)
        n = len(normalized)
        seen = [False] * n
        for v in normalized:
            if not 0 <= v < n or seen[v]:
                raise ValueError(f"not a permutation of 0..{n - 1}: {normalized!r}")
            seen[v] = True

    @property
    def n(self) -> int:
        return len(self.map)

    def position_of(self, card: int) -> int:
        return self.map[card]

    def as_array(self) -> np.ndarray:
        return np.array(self.map, dtype=np.int64)

    def to_json(self) -> list[int]:
        """JSON form is simply the map as a list, e.g. ``[1, 2, 0]``."""
        return list(self.map)


def identity(n: int) -> Permutation:
    return Permutation(tuple(range(n)))


def transposition(n: int, a: int, b: int) -> Permutation:
    """The permutation swapping positions ``a`` and ``b``."""
    if a == b:
        raise ValueError("transposition needs two distinct positions")
    m = list(range(n))
    m[a], m[b] = m[b], m[a]
    return Permutation(tuple(m))


def compose(p: Permutation, q: Permutation) -> Permutation:
    """Apply ``p`` first, then ``q``: result.map[i] = q.map[p.map[i]].

    >>> compose(Permutation((1, 2, 0)), Permutation((1, 0, 2))).map
    (0, 2, 1)
    """
    if p.n != q.n:
        raise ValueError(f"size mismatch: {p.n} vs {q.n}")
    return Permutation(tuple(q.map[v] for v in p.map))


def invert(p: Permutation) -> Permutation:
    """Inverse permutation: invert(p).map[p.map[i]] = i."""
    inv = [0] * p.n
    for card, pos in enumerate(p.map):
        inv[pos] = card
    return Permutation(tuple(inv))


def reversal(n: int, v: int, l: int) -> Permutation:
    """Reverse the cyclic interval of positions v, v+1, ..., v+l (mod n).

    The card at position v+s moves to position v+l-s for 0 <= s <= l; all
    other positions are fixed.  ``l`` must be < n so the interval does not
    self-overlap.

    >>> reversal(6, 4, 3).map
    (5, 4, 2, 3, 1, 0)
    """
    if not 0 <= v < n:
        raise ValueError(f"start position {v} out of range for n={n}")
    if not 0 <= l < n:
        raise ValueError(f"interval length offset {l} out of range for n={n}")
    m = list(range(n))
    for s in range(l + 1):
        m[(v + s) % n] = (v + l - s) % n
    return Permutation(tuple(m))


def rank_permutation(p: Permutation) -> int:
    """Lexicographic (Lehmer) rank of ``p`` within S_n, in [0, n!-1].

    >>> rank_permutation(identity(4))
    0
    >>> rank_permutation(Permutation((3, 2, 1, 0)))
    23
    """
    m = p.map
    n = len(m)
    rank = 0
    for i in range(n - 1):
        smaller_after = sum(1 for j in range(i + 1, n) if m[j] < m[i])
        rank += smaller_after * math.factorial(n - 1 - i)
    return rank


def unrank_permutation(n: int, rank: int) -> Permutation:
    """Inverse of :func:`rank_permutation`."""
    if not 0 <= rank < math.factorial(n):
        raise ValueError(f"rank {rank} out of range for n={n}")
    remaining = list(range(n))
    out = []
    r = rank
    for i in range(n):
        f = math.factorial(n - 1 - i)
        digit, r = divmod(r, f)
        out.append(remaining.pop(digit))
    return Permutation(tuple(out))


@lru_cache(maxsize=None)
def all_permutation_maps(n: int) -> np.ndarray:
    """All of S_n as an (n!, n) array; row r is unrank_permutation(n, r)."""
    if n > exact_cap():
        raise ValueError(f"n={n} exceeds the exact-analysis cap {exact_cap()}")
    arr = np.array(list(_lex_permutations(range(n))), dtype=np.int64)
    arr.flags.writeable = False
    return arr


def rank_rows(maps: np.ndarray) -> np.ndarray:
    """Vectorized Lehmer rank of each row of an (m, n) array of maps."""
    maps = np.asarray(maps)
    m, n = maps.shape
    ranks = np.zeros(m, dtype=np.int64)
    for i in range(n - 1):
        smaller_after = (maps[:, i + 1 :] < maps[:, i : i + 1]).sum(axis=1)
        ranks += smaller_after * math.factorial(n - 1 - i)
    return ranks


def right_multiply_ranks(n: int, q: Permutation) -> np.ndarray:
    """Index array idx with idx[r] = rank(compose(unrank(r), q))."""
    if q.n != n:
        raise ValueError(f"size mismatch: {q.n} vs {n}")
    maps = all_permutation_maps(n)
    return rank_rows(q.as_array()[maps])
