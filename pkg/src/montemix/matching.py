"""Collision logging along trajectories and the match construction.

A card's match is its first collision partner after the cut time, provided
the two cards are mutually each other's first partners; otherwise the card
matches itself.  Collision pairs are read off the positions right after a
step's base rearrangement, and a collision event is logged whether or not
its coin actually transposes the pair.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .parallel import as_seed_key, run_chunked
from .perms import Permutation, identity, invert
from .shuffles import (
    LREV_MONTE,
    LREV_PLAIN,
    THORP_FORWARD,
    THORP_REVERSE,
    MonteStep,
    ShuffleModel,
    _thorp_layout,
)
from .stats import wilson_interval


@dataclass(frozen=True)
class CollisionLog:
    """Time-ordered collision events (step m, unordered card pair)."""

    t: int
    events: tuple[tuple[int, tuple[int, int]], ...]


@dataclass(frozen=True)
class MatchRecord:
    """The involution card -> match(card) extracted from a collision log."""

    n: int
    T: int
    match: tuple[int, ...]

    def __post_init__(self):
        for x, m in enumerate(self.match):
            if self.match[m] != x:
                raise ValueError("match map must be an involution")


def run_with_log(
    model: ShuffleModel,
    t: int,
    rng: np.random.Generator,
    start: Permutation | None = None,
) -> tuple[Permutation, CollisionLog]:
    """Simulate t steps, logging the card pair of every collision factor."""
    if t < 1:
        raise ValueError("need at least one step")
    n = model.n
    arrangement = identity(n) if start is None else start
    card_at = list(invert(arrangement).map)
    events = []
    for m in range(1, t + 1):
        step = model.sample_step(rng)
        moved = [0] * n
        for p, c in enumerate(card_at):
            moved[step.base.map[p]] = c
        card_at = moved
        for (a, b), coin in zip(step.pairs, step.coins):
            x, y = card_at[a], card_at[b]
            events.append((m, (min(x, y), max(x, y))))
            if coin:
                card_at[a], card_at[b] = card_at[b], card_at[a]
    position_of = [0] * n
    for p, c in enumerate(card_at):
        position_of[c] = p
    return Permutation(tuple(position_of)), CollisionLog(t, tuple(events))


def compute_matches(log: CollisionLog, T: int, t: int) -> MatchRecord:
    """Match map from first collision partners strictly after time T, up to t."""
    if not 0 <= T <= t:
        raise ValueError("need 0 <= T <= t")
    if t > log.t:
        raise ValueError("horizon exceeds the logged trajectory")
    n = 0
    first: dict[int, int] = {}
    for m, (x, y) in sorted(log.events):
        n = max(n, x + 1, y + 1)
        if T < m <= t:
            first.setdefault(x, y)
            first.setdefault(y, x)
    n = max(n, max(first, default=-1) + 1)
    match = []
    for x in range(n):
        bx = first.get(x, x)
        match.append(bx if first.get(bx, bx) == x else x)
    return MatchRecord(n, T, tuple(match))


def sample_T_thorp(m: int, rng: np.random.Generator, size=None):
    """Cut time on {0..m} with P(T=r) = 2^(r-m-1) for r < m and the rest on m.

    Every point satisfies P(T=r) >= 2^(r-m-1); the leftover mass 2^(-m-1)
    sits on r = m, the latest cut.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    probs = np.array([2.0 ** (r - m - 1) for r in range(m)] + [0.5 + 2.0 ** (-m - 1)])
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    draws = np.searchsorted(cdf, rng.random(size), side="right")
    return int(draws) if size is None else draws.astype(np.int64)


def thorp_cut_sampler(m: int):
    """Cut-time sampler callable(rng, size) for interval level m."""

    def sampler(rng: np.random.Generator, size: int) -> np.ndarray:
        return sample_T_thorp(m, rng, size)

    sampler.spec = {"kind": "thorp", "m": m}
    return sampler


def fixed_cut_sampler(T: int):
    """Degenerate cut-time sampler that always returns T."""

    def sampler(rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, T, dtype=np.int64)

    sampler.spec = {"kind": "fixed", "T": T}
    return sampler


def thorp_match_bound(i: int, j: int) -> float:
    """Claimed lower bound 2^(-m-2) on P(match(i) = j) for j < i, i in level m."""
    if j >= i or i < 1:
        return 0.0
    m = i.bit_length()
    return 2.0 ** (-m - 2)


def lrev_match_bound(t: int, n: int, L: int, alpha: float = 1.0):
    """Bound family alpha * (t/n ^ 1) * L / i for the reversal-chain experiments."""

    def bound(i: int, j: int) -> float:
        if j >= i or i < 1:
            return 0.0
        return alpha * min(t / n, 1.0) * L / i

    return bound


@dataclass(frozen=True)
class AUniformityReport:
    """Empirical law of match(card) with 99% Wilson intervals and claimed bounds."""

    card: int
    trials: int
    counts: np.ndarray
    bounds: np.ndarray

    @property
    def freqs(self) -> np.ndarray:
        return self.counts / self.trials

    def ci99(self) -> tuple[np.ndarray, np.ndarray]:
        return wilson_interval(self.counts, self.trials)

    def meets_bound(self) -> np.ndarray:
        """Per target: the 99% upper confidence bound does not sit below the claim."""
        _, high = self.ci99()
        return high >= self.bounds

    def implied_uniformity(self) -> float:
        """Largest A with the observed law A-uniform over the cards below this one."""
        if self.card < 1:
            return 0.0
        freqs = self.freqs[: self.card]
        return float(min(1.0, self.card * freqs.min()))

    def rows(self):
        low, high = self.ci99()
        half = (high - low) / 2.0
        ok = self.meets_bound()
        for j in range(self.counts.shape[0]):
            yield (
                self.card,
                j,
                int(self.counts[j]),
                float(self.freqs[j]),
                float(half[j]),
                float(self.bounds[j]),
                bool(ok[j]),
            )


def _thorp_match_chunk(model, t, cut_sampler, rng, size):
    n = model.n
    half = n // 2
    direction = "forward" if model.kind == THORP_FORWARD else "reverse"
    base, pairs = _thorp_layout(n, direction)
    src = np.argsort(base.as_array())  # src[p] = position whose card lands at p
    a_idx = np.array([p[0] for p in pairs])
    b_idx = np.array([p[1] for p in pairs])

    cut = cut_sampler(rng, size)
    rows = np.arange(size)
    card_at = np.tile(np.arange(n, dtype=np.int32), (size, 1))
    partner = np.full((size, n), -1, dtype=np.int32)
    for m in range(1, t + 1):
        coins = rng.integers(0, 2, size=(size, half), dtype=np.int8)
        card_at = card_at[:, src]
        open_time = m > cut
        xs = card_at[:, a_idx]
        ys = card_at[:, b_idx]
        for k in range(half):
            x, y = xs[:, k], ys[:, k]
            upd = open_time & (partner[rows, x] < 0)
            partner[rows[upd], x[upd]] = y[upd]
            upd = open_time & (partner[rows, y] < 0)
            partner[rows[upd], y[upd]] = x[upd]
        flip = coins == 1
        card_at[:, a_idx] = np.where(flip, ys, xs)
        card_at[:, b_idx] = np.where(flip, xs, ys)
    return partner


def _lrev_monte_match_chunk(model, t, cut_sampler, rng, size):
    n, L = model.n, model.L
    cut = cut_sampler(rng, size)
    rows = np.arange(size)
    grid = np.arange(n)
    card_at = np.tile(np.arange(n, dtype=np.int32), (size, 1))
    partner = np.full((size, n), -1, dtype=np.int32)
    for m in range(1, t + 1):
        v = rng.integers(0, n, size=size)
        code = rng.integers(0, 2 * (L + 1), size=size)
        collide = code >= 2
        z = np.where(collide, (code - 2) // 2 + 1, np.where(code == 0, L, L - 1))
        coin = np.where(collide, (code - 2) % 2, 0)
        offs = (grid[None, :] - v[:, None]) % n
        inside = offs <= z[:, None]
        src = np.where(inside, (2 * v[:, None] + z[:, None] - grid[None, :]) % n, grid[None, :])
        card_at = np.take_along_axis(card_at, src, axis=1)
        va = v
        vb = (v + z) % n
        x = card_at[rows, va]
        y = card_at[rows, vb]
        open_time = collide & (m > cut)
        upd = open_time & (partner[rows, x] < 0)
        partner[rows[upd], x[upd]] = y[upd]
        upd = open_time & (partner[rows, y] < 0)
        partner[rows[upd], y[upd]] = x[upd]
        flip = collide & (coin == 1)
        card_at[rows[flip], va[flip]] = y[flip]
        card_at[rows[flip], vb[flip]] = x[flip]
    return partner


def _match_from_partner(partner: np.ndarray) -> np.ndarray:
    n = partner.shape[1]
    base = np.arange(n, dtype=partner.dtype)[None, :]
    b = np.where(partner < 0, base, partner)
    mutual = np.take_along_axis(b, b, axis=1) == base
    match = np.where(mutual, b, base)
    if __debug__:
        assert (np.take_along_axis(match, match, axis=1) == base).all()
    return match


def estimate_match_probs(
    model: ShuffleModel,
    cards,
    cut_sampler,
    t: int,
    trials: int,
    seed: int = 0,
    workers: int = 1,
    bound=None,
) -> dict[int, AUniformityReport]:
    """Empirical match laws over independent trajectories with independent cuts.

    One trajectory per trial serves every requested card; the per-card
    marginals are what the reports summarize.  ``bound`` is an optional
    callable (i, j) -> claimed lower bound on P(match(i) = j).
    """
    cards = [int(c) for c in cards]
    if not cards:
        raise ValueError("need at least one card")
    n = model.n
    if any(not 0 <= c < n for c in cards):
        raise ValueError("cards out of range")
    if trials < 10_000:
        warnings.warn("fewer than 1e4 trials gives weak confidence intervals", stacklevel=2)

    card_pos = {c: k for k, c in enumerate(cards)}

    if model.kind == LREV_PLAIN:
        counts = np.zeros((len(cards), n), dtype=np.int64)
        for c in cards:
            counts[card_pos[c], c] = trials  # no collision factors: every card self-matches
    else:
        if model.kind in (THORP_FORWARD, THORP_REVERSE):
            simulate = _thorp_match_chunk
        elif model.kind == LREV_MONTE:
            simulate = _lrev_monte_match_chunk
        else:
            raise ValueError(f"unsupported model kind {model.kind!r}")

        def chunk_fn(rng, size):
            partner = simulate(model, t, cut_sampler, rng, size)
            match = _match_from_partner(partner)
            out = np.zeros((len(cards), n), dtype=np.int64)
            for c in cards:
                out[card_pos[c]] = np.bincount(match[:, c], minlength=n)
            return (out,)

        (counts,) = run_chunked(trials, as_seed_key(seed), chunk_fn, workers=workers)

    reports = {}
    for c in cards:
        bounds = np.zeros(n)
        if bound is not None:
            bounds = np.array([bound(c, j) for j in range(n)])
        reports[c] = AUniformityReport(c, trials, counts[card_pos[c]], bounds)
    return reports


def match_uniformity_weights(reports: dict[int, AUniformityReport], n: int) -> np.ndarray:
    """Per-card empirical uniformity levels A_k, zero where unreported."""
    weights = np.zeros(n)
    for c, report in reports.items():
        weights[c] = report.implied_uniformity()
    return weights
