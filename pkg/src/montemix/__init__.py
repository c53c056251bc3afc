"""Exact and Monte Carlo mixing-time experiments for collision-based card shuffles.

Covers the Thorp shuffle (forward and reverse) and the L-reversal chain:
exact small-deck distribution evolution with entropy diagnostics, match
statistics of collision partners, the two-card distance chain with its
cut-stopped variant, and seeded, reproducible Monte Carlo estimators.
"""

__version__ = "0.1.0"

from .distance import (
    DistanceKernel,
    MonotoneResult,
    brute_force_distance_kernel,
    check_monotone,
    count_landing_intervals,
    count_landing_intervals_oracle,
    cut_stopped_kernel,
    distance_kernel,
    first_cut_proximity_estimate,
)
from .entropy import (
    PositionEntropyProfile,
    RatioScan,
    SnDistribution,
    collision_divergence,
    distribution_divergence,
    entropy_certifies_mixed,
    entropy_ratio,
    imbalance_divergence,
    point_mass,
    position_entropy,
    random_distribution,
    relative_entropy,
    scan_entropy_ratio,
    tv_distance,
    uniform_distribution,
)
from .exact import (
    TrajectoryReport,
    WarmupResult,
    contraction_estimate,
    entropy_trajectory,
    evolve_exact,
    implied_contraction_constant,
    main_theorem_ratio,
    mixing_time_exact,
    warmup_check,
)
from .matching import (
    AUniformityReport,
    CollisionLog,
    MatchRecord,
    compute_matches,
    estimate_match_probs,
    fixed_cut_sampler,
    lrev_match_bound,
    match_uniformity_weights,
    run_with_log,
    sample_T_thorp,
    thorp_cut_sampler,
    thorp_match_bound,
)
from .montecarlo import (
    MCEstimate,
    ProjectionSpec,
    SweepRow,
    estimate_projected_tv,
    estimate_retention,
    exact_projected_tv,
    lrev_single_card_kernel,
    scaling_sweep,
)
from .perms import (
    Permutation,
    compose,
    exact_cap,
    identity,
    invert,
    rank_permutation,
    reversal,
    transposition,
    unrank_permutation,
)
from .shuffles import (
    LREV_MONTE,
    LREV_PLAIN,
    THORP_FORWARD,
    THORP_REVERSE,
    MonteStep,
    ShuffleModel,
    lrev_step,
    one_step_distribution,
    realize,
    sample_collision,
    step_kernel,
    step_perm_law,
    thorp_step,
)
