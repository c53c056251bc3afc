"""Monte Carlo estimators for deck sizes beyond exact reach.

Full total-variation distance is not estimable at large n, so everything
here projects the deck state onto a small statistic (one tracked card, a
pair, or a retention indicator).  Projected TV never exceeds the true TV,
which makes these estimates honest lower-bound proxies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entropy import point_mass
from .parallel import as_seed_key, run_chunked
from .perms import all_permutation_maps
from .shuffles import (
    LREV_MONTE,
    LREV_PLAIN,
    THORP_FORWARD,
    THORP_REVERSE,
    ShuffleModel,
    _thorp_layout,
)
from .stats import MCEstimate, freq_stderr, l1_distance_with_se

MAX_PROJECTED_STATES = 1_000_000

SINGLE_CARD = "single_card"
CARD_PAIR = "card_pair"
RETENTION_SET = "retention_set"


@dataclass(frozen=True)
class ProjectionSpec:
    """What to observe: one card's position, a pair's positions, or retention."""

    kind: str
    cards: tuple[int, ...] = ()

    @staticmethod
    def single_card(card: int = 0) -> "ProjectionSpec":
        return ProjectionSpec(SINGLE_CARD, (card,))

    @staticmethod
    def card_pair(a: int = 0, b: int = 1) -> "ProjectionSpec":
        if a == b:
            raise ValueError("a card pair needs two distinct cards")
        return ProjectionSpec(CARD_PAIR, (a, b))

    @staticmethod
    def retention_set() -> "ProjectionSpec":
        """Indicator that cards 0..n/2-1 sit in positions 0..n/2-1 (any order)."""
        return ProjectionSpec(RETENTION_SET)

    def tracked_cards(self, n: int) -> tuple[int, ...]:
        if self.kind == RETENTION_SET:
            return tuple(range(n // 2))
        return self.cards

    def state_count(self, n: int) -> int:
        if self.kind == SINGLE_CARD:
            return n
        if self.kind == CARD_PAIR:
            return n * (n - 1)
        if self.kind == RETENTION_SET:
            return 2
        raise ValueError(f"unknown projection kind {self.kind!r}")


def _lrev_displacement_law(n: int, L: int):
    """Per-hit displacement law of one tracked card under the reversal chain.

    A step touches a fixed card with probability (L+2)/(2n); given a touch,
    the signed displacement d has weight floor((L-|d|)/2)+1 on each
    d in {-L..L}.  Binomial hit counts plus i.i.d. displacements reproduce
    the single-card chain exactly.
    """
    deltas = np.arange(-L, L + 1)
    weights = (L - np.abs(deltas)) // 2 + 1
    probs = weights / weights.sum()
    hit_prob = (L + 2) / (2 * n)
    return hit_prob, deltas, probs


def lrev_single_card_kernel(n: int, L: int) -> np.ndarray:
    """Exact n-state transition matrix of one card's position under the reversal chain."""
    hit_prob, deltas, probs = _lrev_displacement_law(n, L)
    kernel = np.eye(n) * (1.0 - hit_prob)
    rows = np.arange(n)
    for delta, p in zip(deltas, probs):
        kernel[rows, (rows + delta) % n] += hit_prob * p
    return kernel


def _simulate_tracked(model: ShuffleModel, cards, t: int, rng, size: int) -> np.ndarray:
    """Positions of the tracked cards after t steps, one row per trial."""
    n = model.n
    pos = np.tile(np.array(cards, dtype=np.int64), (size, 1))
    if t == 0:
        return pos
    if model.kind in (LREV_PLAIN, LREV_MONTE):
        # Realized steps of both reversal forms share one law.
        if len(cards) == 1:
            hit_prob, deltas, probs = _lrev_displacement_law(n, model.L)
            cdf = np.cumsum(probs)
            cdf[-1] = 1.0
            moves = rng.binomial(t, hit_prob, size=size)
            flat = pos[:, 0]
            for k in range(int(moves.max()) if size else 0):
                active = moves > k
                draws = deltas[np.searchsorted(cdf, rng.random(int(active.sum())), side="right")]
                flat[active] = (flat[active] + draws) % n
            return flat[:, None]
        L = model.L
        for _ in range(t):
            code = rng.integers(0, n * (L + 1), size=size)
            v = code // (L + 1)
            l = code % (L + 1)
            off = (pos - v[:, None]) % n
            inside = off <= l[:, None]
            pos = np.where(inside, (v[:, None] + l[:, None] - off) % n, pos)
        return pos
    direction = "forward" if model.kind == THORP_FORWARD else "reverse"
    base, _ = _thorp_layout(n, direction)
    base_map = base.as_array()
    half = n // 2
    for _ in range(t):
        coins = rng.integers(0, 2, size=(size, half), dtype=np.int8)
        pos = base_map[pos]
        if model.kind == THORP_FORWARD:
            partner = pos ^ 1
            coin_idx = pos >> 1
        else:
            partner = (pos + half) % n
            coin_idx = pos % half
        flip = np.take_along_axis(coins, coin_idx, axis=1) == 1
        pos = np.where(flip, partner, pos)
    return pos


def _projected_counts(projection: ProjectionSpec, n: int, pos: np.ndarray) -> np.ndarray:
    if projection.kind == SINGLE_CARD:
        return np.bincount(pos[:, 0], minlength=n)
    if projection.kind == CARD_PAIR:
        return np.bincount(pos[:, 0] * n + pos[:, 1], minlength=n * n)
    inside = (pos < n // 2).all(axis=1)
    return np.array([int(inside.sum()), pos.shape[0] - int(inside.sum())], dtype=np.int64)


def _projected_target(projection: ProjectionSpec, n: int) -> np.ndarray:
    if projection.kind == SINGLE_CARD:
        return np.full(n, 1.0 / n)
    if projection.kind == CARD_PAIR:
        target = np.full((n, n), 1.0 / (n * (n - 1)))
        np.fill_diagonal(target, 0.0)
        return target.ravel()
    p_retained = 1.0 / math.comb(n, n // 2)
    return np.array([p_retained, 1.0 - p_retained])


def estimate_projected_tv(
    model: ShuffleModel,
    projection: ProjectionSpec,
    t: int,
    trials: int,
    seed: int = 0,
    workers: int = 1,
) -> MCEstimate:
    """Empirical L1 distance between the projected t-step law and its uniform law.

    Started from the identity arrangement.  A lower-bound proxy for the full
    total-variation distance on the same [0, 2] scale.
    """
    n = model.n
    if projection.state_count(n) > MAX_PROJECTED_STATES:
        raise ValueError("projected state space too large")
    cards = projection.tracked_cards(n)

    def chunk_fn(rng, size):
        pos = _simulate_tracked(model, cards, t, rng, size)
        return (_projected_counts(projection, n, pos),)

    (counts,) = run_chunked(trials, as_seed_key(seed), chunk_fn, workers=workers)
    value, stderr = l1_distance_with_se(counts, _projected_target(projection, n), trials)
    return MCEstimate(value, stderr, trials)


def exact_projected_tv(model: ShuffleModel, projection: ProjectionSpec, t: int) -> float:
    """The same projected TV computed from the exact t-step law (small n only)."""
    from .exact import _advance
    from .shuffles import step_kernel

    n = model.n
    probs = point_mass(n).probs
    kernel = step_kernel(model)
    for _ in range(t):
        probs = _advance(probs, kernel)
    maps = all_permutation_maps(n)
    cards = projection.tracked_cards(n)
    if projection.kind == SINGLE_CARD:
        law = np.bincount(maps[:, cards[0]], weights=probs, minlength=n)
    elif projection.kind == CARD_PAIR:
        states = maps[:, cards[0]] * n + maps[:, cards[1]]
        law = np.bincount(states, weights=probs, minlength=n * n)
    else:
        inside = (maps[:, : n // 2] < n // 2).all(axis=1)
        p = float(probs[inside].sum())
        law = np.array([p, 1.0 - p])
    return float(np.abs(law - _projected_target(projection, n)).sum())


def estimate_retention(
    n: int, L: int, t: int, trials: int, seed: int = 0, workers: int = 1
) -> MCEstimate:
    """P(cards 0..n/2-1 all occupy positions 0..n/2-1 after t reversal steps)."""
    if n % 2:
        raise ValueError("retention needs an even deck")
    model = ShuffleModel(LREV_PLAIN, n, L)
    cards = tuple(range(n // 2))

    def chunk_fn(rng, size):
        pos = _simulate_tracked(model, cards, t, rng, size)
        inside = (pos < n // 2).all(axis=1)
        return (np.array([int(inside.sum())], dtype=np.int64),)

    (hits,) = run_chunked(trials, as_seed_key(seed), chunk_fn, workers=workers)
    count = int(hits[0])
    return MCEstimate(count / trials, freq_stderr(count, trials), trials)


@dataclass(frozen=True)
class SweepRow:
    param_name: str
    param_value: float
    t_star: int | None
    tv_at_t_star: float
    stderr: float
    trials: int
    seed: int


def scaling_sweep(
    entries,
    projection: ProjectionSpec,
    tv_target: float,
    trials: int,
    seed: int = 0,
    workers: int = 1,
    horizon: int = 1 << 22,
) -> list[SweepRow]:
    """Smallest t with projected TV <= tv_target, per parameter point.

    ``entries`` is a sequence of (param_name, param_value, model).  The search
    doubles t until the target is met, bisects on the bracket, then re-checks
    the answer with an independent batch; every probe uses a fresh seed
    stream to avoid adaptive bias.  Rows whose search exhausts the horizon
    carry t_star = None.
    """
    rows = []
    for entry_idx, (name, value, model) in enumerate(entries):
        probe_counter = 0

        def probe(t: int) -> MCEstimate:
            nonlocal probe_counter
            probe_counter += 1
            return estimate_projected_tv(
                model, projection, t, trials,
                seed=[seed, entry_idx, probe_counter], workers=workers,
            )

        hi, lo = 1, 0
        est = probe(1)
        while est.value > tv_target:
            lo, hi = hi, hi * 2
            if hi > horizon:
                rows.append(SweepRow(name, value, None, est.value, est.stderr, trials, seed))
                break
            est = probe(hi)
        else:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if probe(mid).value <= tv_target:
                    hi = mid
                else:
                    lo = mid
            check = probe(hi)
            rows.append(SweepRow(name, value, hi, check.value, check.stderr, trials, seed))
    return rows
