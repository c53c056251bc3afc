"""Exact distribution evolution at small deck sizes.

Evolution multiplies the dense distribution vector by the sparse one-step
kernel, so trajectories, mixing times and entropy-contraction measurements
are exact up to float64 roundoff.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entropy import (
    SnDistribution,
    _conditional_table,
    _raw_entropy,
    collision_divergence,
    point_mass,
    position_entropy,
    relative_entropy,
    tv_distance,
    uniform_distribution,
)
from .perms import right_multiply_ranks, transposition, unrank_permutation
from .shuffles import ShuffleModel, step_kernel


@dataclass(frozen=True)
class TrajectoryReport:
    """Per-step metrics of an exact evolution, including the t = 0 state."""

    model: ShuffleModel
    steps: int
    tv: np.ndarray
    entropy: np.ndarray
    position_profiles: np.ndarray

    def to_csv(self, path) -> None:
        n = self.model.n
        header = "t,tv,entropy," + ",".join(f"ent_pos_{k}" for k in range(n))
        with open(path, "w", newline="") as fh:
            fh.write(header + "\n")
            for t in range(self.steps + 1):
                cells = [str(t), f"{self.tv[t]:.17g}", f"{self.entropy[t]:.17g}"]
                cells += [f"{v:.17g}" for v in self.position_profiles[t]]
                fh.write(",".join(cells) + "\n")


def _advance(probs: np.ndarray, kernel) -> np.ndarray:
    return kernel.T @ probs


def evolve_exact(dist: SnDistribution, model: ShuffleModel, steps: int) -> TrajectoryReport:
    """Apply the exact one-step kernel ``steps`` times, recording metrics each step."""
    if model.n != dist.n:
        raise ValueError("distribution and model deck sizes differ")
    kernel = step_kernel(model)
    uniform = uniform_distribution(model.n).probs
    tv = np.zeros(steps + 1)
    entropy = np.zeros(steps + 1)
    profiles = np.zeros((steps + 1, model.n))
    probs = dist.probs
    for t in range(steps + 1):
        snapshot = SnDistribution(model.n, np.maximum(probs, 0.0))
        tv[t] = tv_distance(snapshot.probs, uniform)
        entropy[t] = relative_entropy(snapshot)
        profiles[t] = position_entropy(snapshot).values
        if t < steps:
            probs = _advance(probs, kernel)
    return TrajectoryReport(model, steps, tv, entropy, profiles)


def _tv_trajectory(model: ShuffleModel, start: SnDistribution, horizon: int, threshold: float):
    kernel = step_kernel(model)
    uniform = uniform_distribution(model.n).probs
    probs = start.probs
    for t in range(horizon + 1):
        if float(np.abs(probs - uniform).sum()) <= threshold:
            return t
        probs = _advance(probs, kernel)
    return None


def mixing_time_exact(
    model: ShuffleModel,
    threshold: float = 0.25,
    horizon: int = 4096,
    spot_starts: int = 3,
    seed: int = 0,
) -> int:
    """Smallest t with TV(t-step law, uniform) <= threshold from every start.

    These walks are start-invariant (left translation relabels states), so the
    identity start decides the answer; a few random starts are re-checked to
    back that reduction with evidence rather than assumption.
    """
    t_mix = _tv_trajectory(model, point_mass(model.n), horizon, threshold)
    if t_mix is None:
        raise RuntimeError(f"no mixing within horizon {horizon} for {model.label()}")
    if spot_starts and t_mix > 0:
        rng = np.random.default_rng(seed)
        kernel = step_kernel(model)
        uniform = uniform_distribution(model.n).probs
        for rank in rng.integers(math.factorial(model.n), size=spot_starts):
            probs = point_mass(model.n, unrank_permutation(model.n, int(rank))).probs
            for _ in range(t_mix):
                probs = _advance(probs, kernel)
            if float(np.abs(probs - uniform).sum()) > threshold + 1e-9:
                raise RuntimeError("start-invariance spot check failed")
    return t_mix


def entropy_trajectory(
    model: ShuffleModel,
    start: SnDistribution | None = None,
    ent_floor: float = 1e-9,
    horizon: int = 4096,
    extra_steps: int = 0,
) -> np.ndarray:
    """Entropies of an exact trajectory until they fall below ``ent_floor``."""
    dist = point_mass(model.n) if start is None else start
    kernel = step_kernel(model)
    probs = dist.probs
    ents = [_raw_entropy(np.maximum(probs, 0.0))]
    tail = extra_steps
    for _ in range(horizon):
        probs = _advance(probs, kernel)
        ents.append(_raw_entropy(np.maximum(probs, 0.0)))
        if ents[-1] <= ent_floor:
            if tail == 0:
                break
            tail -= 1
    return np.array(ents)


def contraction_estimate(
    model: ShuffleModel,
    block: int | None = None,
    ent_floor: float = 1e-9,
    horizon: int = 4096,
    start: SnDistribution | None = None,
) -> float:
    """Worst observed entropy contraction factor ENT(t+block)/ENT(t).

    Measured along the exact trajectory from a point mass (or ``start``) over
    every t with ENT(t) above ``ent_floor``; the default block is
    ceil(log2 n).  Strictly below 1 for any ergodic collision shuffle.
    """
    if block is None:
        block = max(1, math.ceil(math.log2(model.n)))
    if block < 1:
        raise ValueError("block must be at least 1")
    ents = entropy_trajectory(model, start, ent_floor, horizon, extra_steps=block)
    if ents[0] <= ent_floor:
        raise ValueError("starting entropy is already ~0: contraction not applicable")
    factors = [
        ents[t + block] / ents[t]
        for t in range(len(ents) - block)
        if ents[t] > ent_floor
    ]
    if not factors:
        raise ValueError("no usable contraction window before the entropy floor")
    return float(max(factors))


def implied_contraction_constant(factor: float, n: int) -> float:
    """Constant C with factor = 1 - C/log^2 n."""
    return (1.0 - factor) * math.log(n) ** 2


@dataclass(frozen=True)
class WarmupResult:
    position: int
    lhs: float
    rhs: float
    passed: bool


def warmup_check(dist: SnDistribution, j: int, tol: float = 1e-10) -> WarmupResult:
    """Average-entropy inequality for collisions aimed at position j.

    lhs averages ENT(mu c(i, j)) over i = 0..j, where c(i, j) is a fair
    collision of positions i and j (the i = j term is the identity).  rhs is
    ENT(mu) minus the expected collision divergence between the uniform law
    on the not-yet-placed cards and the conditional law of the card at
    position j given the cards above it.  The inequality lhs <= rhs holds for
    every distribution; both sides are computed exactly.
    """
    n = dist.n
    if not 0 <= j < n:
        raise ValueError(f"position {j} out of range")
    size = dist.size
    base_ent = relative_entropy(dist)

    total = base_ent  # the i = j collision leaves the distribution unchanged
    for i in range(j):
        idx = right_multiply_ranks(n, transposition(n, i, j))
        swapped = np.zeros(size)
        swapped[idx] = dist.probs
        total += _raw_entropy(0.5 * (dist.probs + swapped))
    lhs = total / (j + 1)

    counts, mass, remaining = _conditional_table(dist, j)
    live = mass >= 1e-15
    expected_gap = 0.0
    u = 1.0 / (j + 1)
    for g in np.nonzero(live)[0]:
        cond = counts[g] / mass[g]
        gap = collision_divergence(np.full(j + 1, u), cond[remaining[g]]).sum()
        expected_gap += mass[g] * gap
    rhs = base_ent - expected_gap
    return WarmupResult(j, lhs, rhs, lhs <= rhs + tol)


def main_theorem_ratio(
    dist: SnDistribution,
    model: ShuffleModel,
    t: int,
    weights: np.ndarray | None = None,
    cut_sampler=None,
    trials: int = 100_000,
    seed: int = 0,
) -> float | None:
    """Implied constant in the entropy-loss bound after t steps.

    With E_k the per-position entropy profile of ``dist`` and weights A_k in
    [0, 1], returns C = -(ENT(mu pi_(t)) - ENT(mu)) log n / sum_k A_k E_k.
    When ``weights`` is omitted they are estimated from match frequencies of
    the shuffle itself (A_k = k min_{j<k} P(match(k) = j)).  Returns None when
    the weighted entropy sum vanishes, e.g. for a uniform ``dist``.
    """
    from .matching import estimate_match_probs, fixed_cut_sampler, match_uniformity_weights

    n = model.n
    if weights is None:
        sampler = cut_sampler if cut_sampler is not None else fixed_cut_sampler(t // 2)
        reports = estimate_match_probs(
            model, range(n), sampler, t, trials=trials, seed=seed
        )
        weights = match_uniformity_weights(reports, n)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (n,) or (weights < 0).any() or (weights > 1).any():
        raise ValueError("weights must be n values in [0, 1]")

    profile = position_entropy(dist).values
    denom = float((weights * profile).sum())
    if denom <= 1e-15:
        return None
    kernel = step_kernel(model)
    probs = dist.probs
    for _ in range(t):
        probs = _advance(probs, kernel)
    ent_after = _raw_entropy(np.maximum(probs, 0.0))
    drop = relative_entropy(dist) - ent_after
    return drop * math.log(n) / denom
