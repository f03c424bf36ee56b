"""Exact statistics of the prime-divisor count over smooth integers."""

from .errors import BracketError, CapacityError, ConsistencyError
from .model import (
    BernoulliEnsemble,
    PoissonBinomialDist,
    build_ensemble,
    centered_indicator_moments,
    centered_moment_bound,
    exact_distribution,
    moment_bound_combinatorial,
    sample_moments,
)
from .saddle import (
    PrimeSumReport,
    SaddlePoint,
    XiValue,
    expected_mean_prediction,
    prime_sum_M,
    solve_alpha,
    solve_xi,
)
from .scan import OmegaScan, omega_scan
from .sieve import (
    LpfTable,
    SmoothContext,
    UltraBoundTable,
    build_lpf,
    count_smooth_recurrence,
    count_smooth_sieve,
    count_ultra,
    is_smooth,
    is_ultra_smooth,
    lpf,
    omega,
    omega_t,
    primes_up_to,
    smooth_count_table,
    smooth_counts_at_floors,
)
from .stats import (
    EkReport,
    MomentGaps,
    MomentReport,
    Z_GRID,
    ek_distribution,
    empirical_moments,
    gaussian_moment,
    ks_distance,
    moment_gaps,
    moments_from_histogram,
    phi_cdf,
    slutsky_transfer_slack,
)

__version__ = "0.1.0"
