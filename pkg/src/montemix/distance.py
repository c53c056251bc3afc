"""The two-card distance chain of the L-reversal shuffle.

Tracks the cycle distance between two tagged cards: closed-form interval
counting, the distance transition matrix, stochastic-dominance checks, and
the cut-stopped variant that absorbs when either card gets new neighbors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .parallel import as_seed_key, run_chunked
from .stats import MCEstimate, freq_stderr


def _cycle_dist(a: int, b: int, n: int) -> int:
    d = (a - b) % n
    return min(d, n - d)


def _reversal_image(p, v, l, n):
    """New position of the card at p under the reversal of v..v+l (mod n)."""
    off = (p - v) % n
    return (v + l - off) % n if off <= l else p


def count_landing_intervals(n: int, L: int, a: int, u: int) -> int:
    """Closed-form count of intervals moving the card at a to u while fixing 0.

    Valid in the regime n >= 4L for landing positions u other than a and n-a
    (a reversal centred on 0 fixes 0 while reflecting a to n-a, a case the
    closed form does not cover).  Use the enumeration oracle outside the
    regime.
    """
    _validate_counting_args(n, L, a, u)
    if n < 4 * L:
        raise ValueError("closed form is unreliable for n < 4L; use the oracle")
    if u == (n - a) % n:
        raise ValueError("landing at the reflection n-a is not covered; use the oracle")
    if u < a:
        value = min(u, (L - a + u) // 2 + 1)
    else:
        value = min(a, (L - u + a) // 2 + 1)
    return max(0, value)


def count_landing_intervals_oracle(n: int, L: int, a: int, u: int) -> int:
    """The same count by enumerating all n(L+1) interval choices."""
    _validate_counting_args(n, L, a, u)
    total = 0
    for v in range(n):
        for l in range(L + 1):
            if _reversal_image(a, v, l, n) == u and _reversal_image(0, v, l, n) == 0:
                total += 1
    return total


def _validate_counting_args(n, L, a, u):
    if not 1 <= L <= n - 1:
        raise ValueError("need 1 <= L <= n-1")
    if not 1 <= a <= n // 2:
        raise ValueError("need 1 <= a <= n/2")
    if not 0 <= u <= n - 1:
        raise ValueError("landing position out of range")
    if u == a:
        raise ValueError("landing position must differ from a")


STATE_ABSORB_NEAR = "S0"
STATE_ABSORB_FAR = "Sinf"


@dataclass(frozen=True)
class DistanceKernel:
    """Row-stochastic transition matrix of the two-card distance chain."""

    n: int
    L: int
    states: tuple
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64)
        if matrix.shape != (len(self.states), len(self.states)):
            raise ValueError("matrix shape does not match the state list")
        if np.abs(matrix.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("rows must sum to 1")
        if matrix.min() < 0:
            raise ValueError("negative transition probability")
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "states", tuple(self.states))

    def index_of(self, state) -> int:
        return self.states.index(state)

    def to_csv(self, path) -> None:
        names = [str(s) for s in self.states]
        with open(path, "w", newline="") as fh:
            fh.write("state," + ",".join(names) + "\n")
            for name, row in zip(names, self.matrix):
                fh.write(name + "," + ",".join(f"{v:.17g}" for v in row) + "\n")


def _pair_move_count(n: int, L: int, a: int, u: int) -> int:
    """Intervals moving exactly one tagged card so the distance becomes u."""
    landings = [u] if 2 * u == n else [u, n - u]
    total = 0
    for w in landings:
        if w != a and w != (n - a) % n:
            total += count_landing_intervals(n, L, a, w)
    return 2 * total


def distance_kernel(n: int, L: int) -> DistanceKernel:
    """Distance-chain kernel on states 1..n/2 via the closed-form counts.

    Outside the n >= 4L regime the closed form is unreliable, so the kernel
    falls back to brute-force enumeration there.
    """
    if n < 4 * L:
        return brute_force_distance_kernel(n, L)
    states = tuple(range(1, n // 2 + 1))
    size = len(states)
    total = n * (L + 1)
    matrix = np.zeros((size, size))
    for ia, a in enumerate(states):
        for iu, u in enumerate(states):
            if u != a:
                matrix[ia, iu] = _pair_move_count(n, L, a, u) / total
        matrix[ia, ia] = 1.0 - matrix[ia].sum()
    return DistanceKernel(n, L, states, matrix)


def brute_force_distance_kernel(n: int, L: int, offset: int = 0) -> DistanceKernel:
    """Distance-chain kernel by enumerating every interval on explicit cards.

    The tagged cards start at positions (offset, offset + a); the result is
    independent of the offset by rotation invariance.
    """
    states = tuple(range(1, n // 2 + 1))
    size = len(states)
    total = n * (L + 1)
    matrix = np.zeros((size, size))
    for ia, a in enumerate(states):
        x, y = offset % n, (offset + a) % n
        for v in range(n):
            for l in range(L + 1):
                d = _cycle_dist(
                    _reversal_image(x, v, l, n), _reversal_image(y, v, l, n), n
                )
                matrix[ia, d - 1] += 1.0 / total
    return DistanceKernel(n, L, states, matrix)


def _is_cut(p: int, v: int, l: int, n: int) -> bool:
    """Whether the card at p sits where the reversal of v..v+l changes neighbours."""
    if l == 0:
        return False
    q = (p - (v - 1)) % n
    return q in (0, 1, l + 1, l + 2)


def cut_stopped_kernel(n: int, L: int) -> DistanceKernel:
    """Distance chain absorbed at the first cut of either tagged card.

    Built purely by interval enumeration.  A step that cuts either card
    absorbs to S0 when the post-move distance is at most L and to Sinf
    otherwise; the published counting display for this chain is inconsistent,
    so no closed form is used.  States are ordered S0 < 1 < ... < n/2 < Sinf.
    """
    states = (STATE_ABSORB_NEAR,) + tuple(range(1, n // 2 + 1)) + (STATE_ABSORB_FAR,)
    size = len(states)
    total = n * (L + 1)
    matrix = np.zeros((size, size))
    matrix[0, 0] = 1.0
    matrix[size - 1, size - 1] = 1.0
    for a in range(1, n // 2 + 1):
        row = matrix[a]
        x, y = 0, a
        for v in range(n):
            for l in range(L + 1):
                nx = _reversal_image(x, v, l, n)
                ny = _reversal_image(y, v, l, n)
                d = _cycle_dist(nx, ny, n)
                if _is_cut(x, v, l, n) or _is_cut(y, v, l, n):
                    target = 0 if d <= L else size - 1
                else:
                    target = d
                row[target] += 1.0 / total
    return DistanceKernel(n, L, states, matrix)


@dataclass(frozen=True)
class MonotoneResult:
    ok: bool
    violation: tuple | None = None  # (lower state, higher state, threshold state)

    def __bool__(self) -> bool:
        return self.ok


def check_monotone(kernel: DistanceKernel, tol: float = 1e-12) -> MonotoneResult:
    """Stochastic dominance of rows: higher states give stochastically larger steps.

    Checks every pair a <= b of states and every threshold z that the upper
    cumulative sum from b dominates the one from a, up to ``tol``.
    """
    upper = np.cumsum(kernel.matrix[:, ::-1], axis=1)[:, ::-1]
    size = len(kernel.states)
    for ia in range(size):
        for ib in range(ia + 1, size):
            deficits = upper[ib] - upper[ia]
            bad = np.nonzero(deficits < -tol)[0]
            if bad.size:
                z = int(bad[0])
                return MonotoneResult(
                    False, (kernel.states[ia], kernel.states[ib], kernel.states[z])
                )
    return MonotoneResult(True)


def first_cut_proximity_estimate(
    n: int,
    L: int,
    initial_distance: int,
    m_prime: int,
    t_prime: int,
    trials: int,
    seed: int = 0,
    workers: int = 1,
) -> MCEstimate:
    """P(first cut after m' lands within t' steps with the pair at distance <= L).

    Monte Carlo over explicit two-card trajectories: run m' free steps, then
    watch for the first step that cuts either card.  Success means that cut
    happens by m' + t' and leaves the cards within distance L.
    """
    if not 1 <= initial_distance <= n // 2:
        raise ValueError("initial distance out of range")

    def chunk_fn(rng, size):
        pos = np.tile(np.array([0, initial_distance], dtype=np.int64), (size, 1))
        active = np.ones(size, dtype=bool)
        success = np.zeros(size, dtype=bool)
        for m in range(1, m_prime + t_prime + 1):
            v = rng.integers(0, n, size=size)
            l = rng.integers(0, L + 1, size=size)
            off = (pos - v[:, None]) % n
            inside = off <= l[:, None]
            new_pos = np.where(inside, (v[:, None] + l[:, None] - off) % n, pos)
            if m > m_prime:
                q = (pos - (v[:, None] - 1)) % n
                cut = (l[:, None] > 0) & (
                    (q == 0) | (q == 1) | (q == l[:, None] + 1) | (q == l[:, None] + 2)
                )
                stopped = active & cut.any(axis=1)
                dd = (new_pos[:, 0] - new_pos[:, 1]) % n
                dist = np.minimum(dd, n - dd)
                success[stopped] = dist[stopped] <= L
                active &= ~stopped
            pos = new_pos
        return (np.array([int(success.sum())], dtype=np.int64),)

    (hits,) = run_chunked(trials, as_seed_key(seed), chunk_fn, workers=workers)
    count = int(hits[0])
    return MCEstimate(count / trials, freq_stderr(count, trials), trials)
