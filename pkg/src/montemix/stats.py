"""Small statistics helpers shared by the Monte Carlo estimators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Z99 = 2.5758293035489004  # two-sided 99% normal quantile


@dataclass(frozen=True)
class MCEstimate:
    """A Monte Carlo point estimate with its standard error."""

    value: float
    stderr: float
    trials: int

    def ci99(self) -> tuple[float, float]:
        return self.value - Z99 * self.stderr, self.value + Z99 * self.stderr


def wilson_interval(count, trials: int, z: float = Z99):
    """Wilson score interval for a binomial proportion.

    Returns (low, high); reliable even when the observed count is 0 or
    ``trials``.  ``count`` may be an array.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = np.asarray(count, dtype=np.float64) / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    margin = z * np.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    return center - margin, center + margin


def freq_stderr(count: int, trials: int) -> float:
    """Normal-approximation standard error of a frequency, Wilson-backed at the edges."""
    p = count / trials
    if count == 0 or count == trials:
        low, high = wilson_interval(count, trials)
        return float(high - low) / (2.0 * Z99)
    return float(np.sqrt(p * (1.0 - p) / trials))


def l1_distance_with_se(counts: np.ndarray, target: np.ndarray, trials: int):
    """Empirical L1 distance between a multinomial sample and a fixed law.

    The standard error comes from the delta method applied to the signed sum
    sum_i s_i p_hat_i with s_i = sign(p_hat_i - q_i).
    """
    p_hat = np.asarray(counts, dtype=np.float64) / trials
    diff = p_hat - np.asarray(target, dtype=np.float64)
    value = float(np.abs(diff).sum())
    s = np.sign(diff)
    m = float((s * p_hat).sum())
    var = max(float((s * s * p_hat).sum()) - m * m, 0.0) / trials
    return value, float(np.sqrt(var))
