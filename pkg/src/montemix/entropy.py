"""Distributions over S_n and their entropy functionals.

Everything is measured in nats against the uniform distribution.  The
divergence ``collision_divergence(p, q)`` is the entropy a fair collision
erases when it averages two probability values; summed coordinatewise it
gives :func:`distribution_divergence`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import xlog1py, xlogy

from .perms import Permutation, all_permutation_maps, exact_cap, rank_permutation

MASS_TOL = 1e-12
GROUP_MASS_FLOOR = 1e-15
MIXED_ENTROPY_THRESHOLD = 0.125


@dataclass(frozen=True)
class SnDistribution:
    """Dense probability vector over all n! permutations, Lehmer-ranked."""

    n: int
    probs: np.ndarray

    def __post_init__(self):
        if self.n > exact_cap():
            raise ValueError(f"n={self.n} exceeds the exact-analysis cap {exact_cap()}")
        probs = np.array(self.probs, dtype=np.float64)
        if probs.shape != (math.factorial(self.n),):
            raise ValueError(f"expected {math.factorial(self.n)} probabilities")
        if probs.min() < 0:
            raise ValueError("negative probability entry")
        if abs(probs.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return self.probs.shape[0]


def uniform_distribution(n: int) -> SnDistribution:
    size = math.factorial(n)
    return SnDistribution(n, np.full(size, 1.0 / size))


def point_mass(n: int, perm: Permutation | None = None) -> SnDistribution:
    probs = np.zeros(math.factorial(n))
    probs[0 if perm is None else rank_permutation(perm)] = 1.0
    return SnDistribution(n, probs)


def random_distribution(n: int, rng: np.random.Generator) -> SnDistribution:
    """A uniformly random point of the probability simplex over S_n."""
    return SnDistribution(n, rng.dirichlet(np.ones(math.factorial(n))))


def _probs_of(dist) -> np.ndarray:
    return np.asarray(getattr(dist, "probs", dist), dtype=np.float64)


def _raw_entropy(probs: np.ndarray) -> float:
    """Relative entropy of a probability vector against uniform on its support set."""
    total = probs.sum()
    if total <= 0:
        return 0.0
    ent = float(xlogy(probs, probs).sum() + total * math.log(probs.shape[0] / total))
    return ent if ent > 0.0 else 0.0


def relative_entropy(dist: SnDistribution | np.ndarray) -> float:
    """ENT(p) = sum_i p_i log(N p_i) in nats; 0 iff uniform, log N at a point mass."""
    probs = _probs_of(dist)
    if probs.min() < 0:
        raise ValueError("negative probability entry")
    return _raw_entropy(probs)


def tv_distance(p, q) -> float:
    """Total variation as the full L1 sum, in [0, 2]; mixing threshold is 1/4."""
    pa, qa = _probs_of(p), _probs_of(q)
    if pa.shape != qa.shape:
        raise ValueError(f"size mismatch: {pa.shape} vs {qa.shape}")
    return float(np.abs(pa - qa).sum())


def collision_divergence(p, q):
    """Elementwise p/2 log p + q/2 log q - m log m with m = (p+q)/2.

    Nonnegative, and zero exactly where p == q.  Accepts scalars or arrays.
    """
    pa, qa = np.asarray(p, dtype=np.float64), np.asarray(q, dtype=np.float64)
    if (pa < 0).any() or (qa < 0).any():
        raise ValueError("collision_divergence needs nonnegative inputs")
    m = 0.5 * (pa + qa)
    out = 0.5 * xlogy(pa, pa) + 0.5 * xlogy(qa, qa) - xlogy(m, m)
    if out.ndim == 0:
        return float(out)
    return out


def distribution_divergence(p, q) -> float:
    """Coordinatewise collision divergence summed over a shared index set."""
    pa, qa = _probs_of(p), _probs_of(q)
    if pa.shape != qa.shape:
        raise ValueError(f"size mismatch: {pa.shape} vs {qa.shape}")
    return float(np.maximum(collision_divergence(pa, qa), 0.0).sum())


def imbalance_divergence(delta):
    """f(D) = (1+D)/2 log(1+D) + (1-D)/2 log(1-D) on [-1, 1].

    Satisfies collision_divergence(p, q) == (p+q)/2 * f((p-q)/(p+q)); f is
    convex with f(0) = 0 and f(+-1) = log 2.
    """
    d = np.asarray(delta, dtype=np.float64)
    if (np.abs(d) > 1 + 1e-12).any():
        raise ValueError("imbalance_divergence is defined on [-1, 1]")
    d = np.clip(d, -1.0, 1.0)
    out = 0.5 * xlog1py(1.0 + d, d) + 0.5 * xlog1py(1.0 - d, -d)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class PositionEntropyProfile:
    """values[k] = expected conditional entropy of the card at position k.

    Position k is conditioned on the cards at positions k+1..n-1 and measured
    against uniform over the k+1 cards not yet placed; the values sum to the
    relative entropy of the source distribution.
    """

    n: int
    values: np.ndarray

    def total(self) -> float:
        return float(self.values.sum())

    def to_json(self) -> dict:
        return {"n": self.n, "entropy_nats": [float(v) for v in self.values]}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("position,entropy_nats\n")
            for k, v in enumerate(self.values):
                fh.write(f"{k},{float(v):.17g}\n")


@lru_cache(maxsize=None)
def _suffix_tables(n: int):
    """Per-position grouping of S_n by the cards at positions k+1..n-1.

    For each position k returns (group_id per rank, group count, one
    representative rank per group).  Group ids are stable across calls.
    """
    maps = all_permutation_maps(n)
    inv = np.argsort(maps, axis=1)  # inv[r, pos] = card at pos
    tables = {}
    for k in range(n):
        if k == n - 1:
            gid = np.zeros(maps.shape[0], dtype=np.int64)
            reps = np.zeros(1, dtype=np.int64)
            tables[k] = (gid, 1, reps)
            continue
        code = np.zeros(maps.shape[0], dtype=np.int64)
        for p in range(k + 1, n):
            code = code * n + inv[:, p]
        _, reps, gid = np.unique(code, return_index=True, return_inverse=True)
        tables[k] = (gid.astype(np.int64), int(reps.shape[0]), reps.astype(np.int64))
    return inv, tables


def _conditional_table(dist: SnDistribution, k: int):
    """Mass of each card at position k within each suffix group.

    Returns (counts (G, n), group mass (G,), remaining-card mask (G, n)).
    The remaining mask marks the k+1 cards not pinned by the group's suffix,
    whether or not the distribution puts mass on them.
    """
    n = dist.n
    inv, tables = _suffix_tables(n)
    gid, groups, reps = tables[k]
    counts = np.bincount(gid * n + inv[:, k], weights=dist.probs, minlength=groups * n)
    counts = counts.reshape(groups, n)
    mass = counts.sum(axis=1)
    remaining = np.zeros((groups, n), dtype=bool)
    rows = np.repeat(np.arange(groups), k + 1)
    remaining[rows, inv[reps, : k + 1].ravel()] = True
    return counts, mass, remaining


def position_entropy(dist: SnDistribution) -> PositionEntropyProfile:
    """Split relative entropy into per-position conditional contributions."""
    n = dist.n
    values = np.zeros(n)
    for k in range(1, n):
        counts, mass, _ = _conditional_table(dist, k)
        live = mass >= GROUP_MASS_FLOOR
        if not live.any():
            continue
        c, w = counts[live], mass[live]
        per_group = xlogy(c, c).sum(axis=1) - xlogy(w, w) + w * math.log(k + 1)
        values[k] = float(np.maximum(per_group, 0.0).sum())
    return PositionEntropyProfile(n, values)


def entropy_ratio(x):
    """Pointwise entropy g(x) = x log x - (x - 1) over its collision divergence from 1.

    The denominator is ((x+1)/2) f((x-1)/(x+1)).  The x = 1 singularity is
    removable with limit 4; points within 1e-6 of it use the first-order
    expansion 4 + 2(x-1)/3 to dodge cancellation.
    """
    x = np.asarray(x, dtype=np.float64)
    if (x < 0).any():
        raise ValueError("entropy_ratio is defined on x >= 0")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    near = np.abs(x - 1.0) < 1e-6
    out[near] = 4.0 + 2.0 * (x[near] - 1.0) / 3.0
    far = ~near
    xf = x[far]
    u = xf - 1.0
    g = xlog1py(1.0 + u, u) - u
    denom = 0.5 * (xf + 1.0) * imbalance_divergence(u / (xf + 1.0))
    out[far] = g / denom
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class RatioScan:
    v_size: int
    grid: int
    max_ratio: float
    argmax: float
    implied_constant: float


def scan_entropy_ratio(v_size: int, grid: int = 4096) -> RatioScan:
    """Grid maximum of entropy_ratio on [0, v_size] and the implied constant.

    A divergence-to-entropy comparison d(mu, U) >= c ENT(mu)/log|V| holds with
    any c <= log(v_size) / max ratio, so the scan reports that quotient.
    """
    if v_size < 2:
        raise ValueError("v_size must be at least 2")
    if grid < 2:
        raise ValueError("grid must have at least 2 points")
    xs = np.linspace(0.0, float(v_size), grid)
    rs = entropy_ratio(xs)
    imax = int(np.argmax(rs))
    max_ratio = float(rs[imax])
    return RatioScan(v_size, grid, max_ratio, float(xs[imax]), math.log(v_size) / max_ratio)


def entropy_certifies_mixed(ent: float) -> bool:
    """True when relative entropy alone forces TV distance <= 1/4.

    sqrt(ent/2) bounds the TV distance, so ent <= 1/8 suffices.
    """
    if ent < 0:
        raise ValueError("entropy must be nonnegative")
    return ent <= MIXED_ENTROPY_THRESHOLD
