"""Shuffle step samplers in base-then-collisions form, plus exact one-step kernels.

Every supported shuffle factors one step as a base rearrangement followed by
independent fair collisions on disjoint position pairs.  A collision either
transposes its pair or leaves it alone, each with probability 1/2.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse

from .perms import (
    Permutation,
    all_permutation_maps,
    exact_cap,
    identity,
    rank_rows,
    reversal,
    transposition,
)

THORP_FORWARD = "thorp_forward"
THORP_REVERSE = "thorp_reverse"
LREV_PLAIN = "lrev_plain"
LREV_MONTE = "lrev_monte"
MODEL_KINDS = (THORP_FORWARD, THORP_REVERSE, LREV_PLAIN, LREV_MONTE)


@dataclass(frozen=True)
class MonteStep:
    """One shuffle step: base permutation, disjoint collision pairs, resolved coins."""

    n: int
    base: Permutation
    pairs: tuple[tuple[int, int], ...] = ()
    coins: tuple[int, ...] = ()

    def __post_init__(self):
        if self.base.n != self.n:
            raise ValueError("base permutation size does not match n")
        if len(self.pairs) != len(self.coins):
            raise ValueError("one coin per collision pair required")
        seen = set()
        for a, b in self.pairs:
            if a == b:
                raise ValueError("collision pair must have distinct positions")
            for x in (a, b):
                if not 0 <= x < self.n or x in seen:
                    raise ValueError("collision positions must be disjoint and in range")
                seen.add(x)
        if any(c not in (0, 1) for c in self.coins):
            raise ValueError("coins must be 0 or 1")

    def to_json_dict(self) -> dict:
        return {
            "base": list(self.base.map),
            "pairs": [list(p) for p in self.pairs],
            "coins": list(self.coins),
        }


def realize(step: MonteStep) -> Permutation:
    """Compose the base with every transposition whose coin came up 1."""
    swap = np.arange(step.n)
    for (a, b), coin in zip(step.pairs, step.coins):
        if coin:
            swap[a], swap[b] = swap[b], swap[a]
    return Permutation(tuple(int(swap[v]) for v in step.base.map))


@dataclass(frozen=True)
class ShuffleModel:
    """A shuffle family member: kind plus deck size, and L for reversal chains."""

    kind: str
    n: int
    L: int | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown shuffle kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("need at least 2 cards")
        if self.kind in (THORP_FORWARD, THORP_REVERSE):
            if self.n % 2:
                raise ValueError("Thorp shuffles need an even number of cards")
            if self.L is not None:
                raise ValueError("L applies only to reversal chains")
        else:
            if self.L is None or not 1 <= self.L <= self.n - 1:
                raise ValueError("reversal chains need 1 <= L <= n-1")
            if self.n < 4 * self.L:
                warnings.warn(
                    f"n={self.n} < 4L={4 * self.L}: outside the analyzed regime",
                    stacklevel=2,
                )

    def label(self) -> str:
        return self.kind if self.L is None else f"{self.kind}(L={self.L})"

    def sample_step(self, rng: np.random.Generator) -> MonteStep:
        if self.kind == THORP_FORWARD:
            return thorp_step(self.n, "forward", rng)
        if self.kind == THORP_REVERSE:
            return thorp_step(self.n, "reverse", rng)
        form = "plain" if self.kind == LREV_PLAIN else "monte"
        return lrev_step(self.n, self.L, form, rng)


def sample_collision(n: int, a: int, b: int, rng: np.random.Generator) -> Permutation:
    """Identity or the transposition of positions (a, b), each with probability 1/2."""
    if a == b:
        raise ValueError("a collision needs two distinct positions")
    if rng.integers(2):
        return transposition(n, a, b)
    return identity(n)


@lru_cache(maxsize=None)
def _thorp_layout(n: int, direction: str):
    """Base map and collision pairs shared by every step of a Thorp shuffle.

    Forward: the cards at x and x+n/2 land at 2x and 2x+1.  Reverse: the
    cards at even x and x+1 land at x/2 and x/2 + n/2.  Pairs are listed by
    ascending smaller element, the order coins are drawn in.
    """
    half = n // 2
    base = np.zeros(n, dtype=np.int64)
    if direction == "forward":
        for x in range(half):
            base[x] = (2 * x) % n
            base[x + half] = (2 * x + 1) % n
        pairs = tuple((2 * x, 2 * x + 1) for x in range(half))
    elif direction == "reverse":
        for x in range(0, n, 2):
            base[x] = x // 2
            base[x + 1] = x // 2 + half
        pairs = tuple((y, y + half) for y in range(half))
    else:
        raise ValueError(f"unknown direction {direction!r}")
    base.flags.writeable = False
    return Permutation(tuple(int(v) for v in base)), pairs


def thorp_step(n: int, direction: str, rng: np.random.Generator) -> MonteStep:
    """One Thorp step with n/2 fresh coins; n must be even."""
    if n % 2:
        raise ValueError("Thorp shuffles need an even number of cards")
    base, pairs = _thorp_layout(n, direction)
    coins = tuple(int(c) for c in rng.integers(0, 2, size=n // 2))
    return MonteStep(n, base, pairs, coins)


def lrev_step(n: int, L: int, form: str, rng: np.random.Generator) -> MonteStep:
    """One step of the L-reversal chain.

    The plain form reverses the interval v..v+l for uniform v and uniform
    l in {0..L}; it has no collision factors.  The monte form draws a uniform
    code over the 2(L+1) equally likely branches: the two long reversals of
    length offsets L and L-1, or a reversal of offset Z in {1..L} followed by
    a collision of its endpoints (v, v+Z).  Both forms realize the same
    one-step law.
    """
    if not 1 <= L <= n - 1:
        raise ValueError("need 1 <= L <= n-1")
    v = int(rng.integers(n))
    if form == "plain":
        l = int(rng.integers(L + 1))
        return MonteStep(n, reversal(n, v, l))
    if form != "monte":
        raise ValueError(f"unknown form {form!r}")
    code = int(rng.integers(2 * (L + 1)))
    if code == 0:
        return MonteStep(n, reversal(n, v, L))
    if code == 1:
        return MonteStep(n, reversal(n, v, L - 1))
    z = (code - 2) // 2 + 1
    coin = (code - 2) % 2
    return MonteStep(n, reversal(n, v, z), ((v, (v + z) % n),), (coin,))


def step_perm_law(model: ShuffleModel) -> tuple[np.ndarray, np.ndarray]:
    """Exact law of one realized step: distinct permutation maps and their probabilities."""
    n = model.n
    acc: dict[tuple[int, ...], float] = {}

    def add(perm: Permutation, w: float):
        acc[perm.map] = acc.get(perm.map, 0.0) + w

    if model.kind in (THORP_FORWARD, THORP_REVERSE):
        direction = "forward" if model.kind == THORP_FORWARD else "reverse"
        base, pairs = _thorp_layout(n, direction)
        w = 0.5 ** len(pairs)
        for coins in itertools.product((0, 1), repeat=len(pairs)):
            add(realize(MonteStep(n, base, pairs, coins)), w)
    elif model.kind == LREV_PLAIN:
        w = 1.0 / (n * (model.L + 1))
        for v in range(n):
            for l in range(model.L + 1):
                add(reversal(n, v, l), w)
    else:
        w = 1.0 / (n * 2 * (model.L + 1))
        for v in range(n):
            add(reversal(n, v, model.L), w)
            add(reversal(n, v, model.L - 1), w)
            for z in range(1, model.L + 1):
                for coin in (0, 1):
                    step = MonteStep(n, reversal(n, v, z), ((v, (v + z) % n),), (coin,))
                    add(realize(step), w)
    maps = np.array(sorted(acc), dtype=np.int64)
    probs = np.array([acc[tuple(row)] for row in maps])
    return maps, probs


def one_step_distribution(model: ShuffleModel):
    """The law of a single step as a distribution over S_n (point mass start)."""
    from .entropy import SnDistribution

    maps, probs = step_perm_law(model)
    out = np.zeros(math.factorial(model.n))
    out[rank_rows(maps)] = probs
    return SnDistribution(model.n, out)


def step_kernel(model: ShuffleModel) -> sparse.csr_array:
    """Exact one-step transition matrix on S_n (doubly stochastic, sparse).

    Row r holds the law of compose(unrank(r), step).
    """
    n = model.n
    if n > exact_cap():
        raise ValueError(f"n={n} exceeds the exact-analysis cap {exact_cap()}")
    maps, probs = step_perm_law(model)
    perms = all_permutation_maps(n)
    size = perms.shape[0]
    rows, cols, data = [], [], []
    base_rows = np.arange(size, dtype=np.int64)
    for step_map, w in zip(maps, probs):
        rows.append(base_rows)
        cols.append(rank_rows(step_map[perms]))
        data.append(np.full(size, w))
    coo = sparse.coo_array(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )
    return coo.tocsr()
