"""Independent Bernoulli model of prime divisibility below the truncation.

One indicator per prime p <= Y.  In exact mode the success probability is
the exact count ratio Psi(x/p, y)/Psi(x, y); in approximate mode it is
p^-alpha.  The partial-sum distribution is Poisson-binomial and is computed
by exact sequential convolution; Monte Carlo sampling exists only for scale
regimes beyond the convolution budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ConsistencyError
from .sieve import SmoothContext, primes_up_to, smooth_counts_at_floors

CONVOLUTION_BUDGET = 100_000  # number of indicators; pmf cost is O(m^2)
DEFAULT_MOMENT_CAP = 10
CANCELLATION_RTOL = 1e-3


@dataclass(frozen=True)
class BernoulliEnsemble:
    """Primes p <= Y with per-prime success probabilities q_p."""

    primes: np.ndarray
    probs: np.ndarray
    mode: str  # "exact" | "approximate" | "synthetic"

    def __post_init__(self):
        q = self.probs
        if len(q) and (q.min() < 0.0 or q.max() > 1.0):
            raise ConsistencyError(
                f"probability outside [0,1]: min={q.min()}, max={q.max()}"
            )

    @property
    def m(self) -> int:
        return len(self.probs)

    @property
    def mean(self) -> float:
        return float(np.sum(self.probs))

    @property
    def variance(self) -> float:
        return float(np.sum(self.probs * (1.0 - self.probs)))


@dataclass(frozen=True)
class PoissonBinomialDist:
    """Exact pmf of the indicator sum, with moments derived from it."""

    pmf: np.ndarray  # P(S = k) for k = 0..m
    mean: float
    variance: float
    raw_moments: np.ndarray  # E[S^j], j = 0..K
    centered_moments: np.ndarray  # E[(S-mean)^j], j = 0..K
    cancellation_flags: np.ndarray  # True where relative cancellation > 1e-3

    def raw_moment(self, j: int) -> float:
        return float(self.raw_moments[j])

    def centered_moment(self, j: int) -> float:
        return float(self.centered_moments[j])


def build_ensemble(
    ctx: SmoothContext,
    mode: str = "exact",
    alpha: float | None = None,
    psi_at: dict[int, int] | None = None,
    prime_limit: int | None = None,
) -> BernoulliEnsemble:
    """Ensemble over primes <= ctx.Y (or `prime_limit` if given).

    exact mode: q_p = Psi(x//p, y) / Psi(x, y), exact integer counts; the
    counts come from `psi_at` when supplied (e.g. out of an omega_scan),
    otherwise from the counting recurrence.
    approximate mode: q_p = p^-alpha for the solved saddle point.
    """
    limit = prime_limit if prime_limit is not None else ctx.Y
    primes = primes_up_to(min(limit, ctx.x))
    if mode == "approximate":
        if alpha is None:
            raise ValueError("approximate mode needs alpha")
        probs = np.exp(-alpha * np.log(primes.astype(np.float64)))
        return BernoulliEnsemble(primes=primes, probs=probs, mode=mode)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    needed = {ctx.x} | {ctx.x // int(p) for p in primes}
    if psi_at is None or not needed <= psi_at.keys():
        psi_at = smooth_counts_at_floors(ctx.x, ctx.y)
    denom = psi_at[ctx.x]
    probs = np.array(
        [psi_at[ctx.x // int(p)] / denom for p in primes], dtype=np.float64
    )
    return BernoulliEnsemble(primes=primes, probs=probs, mode=mode)


def exact_distribution(
    e: BernoulliEnsemble,
    moment_cap: int = DEFAULT_MOMENT_CAP,
    budget: int = CONVOLUTION_BUDGET,
) -> PoissonBinomialDist:
    """Poisson-binomial pmf by sequential convolution of (1-q, q) kernels."""
    if e.m > budget:
        raise CapacityError(
            f"{e.m} indicators exceed convolution budget {budget}; sample instead"
        )
    pmf = np.array([1.0], dtype=np.float64)
    for q in e.probs:
        pmf = np.convolve(pmf, [1.0 - q, q])
    total = float(pmf.sum())
    if abs(total - 1.0) > 1e-12:
        raise ConsistencyError(f"pmf sums to {total}, not 1")

    k = np.arange(len(pmf), dtype=np.longdouble)
    pl = pmf.astype(np.longdouble)
    raw = np.array([float(np.sum(pl * k**j)) for j in range(moment_cap + 1)])
    mean = float(np.sum(pl * k))
    dev = k - np.longdouble(mean)
    centered_ld = [np.sum(pl * dev**j) for j in range(moment_cap + 1)]
    # flag orders where the signed terms nearly cancel
    flags = np.zeros(moment_cap + 1, dtype=bool)
    for j in range(moment_cap + 1):
        gross = float(np.sum(pl * np.abs(dev) ** j))
        net = abs(float(centered_ld[j]))
        flags[j] = gross > 0 and net / gross < CANCELLATION_RTOL
    centered = np.array([float(c) for c in centered_ld])
    variance = float(centered[2]) if moment_cap >= 2 else float(
        np.sum(pl * dev**2)
    )
    # cross-check the closed forms against the pmf-derived values
    if abs(mean - e.mean) > 1e-9 * max(1.0, e.mean):
        raise ConsistencyError(f"mean mismatch: pmf {mean} vs sum q {e.mean}")
    if abs(variance - e.variance) > 1e-9 * max(1.0, e.variance):
        raise ConsistencyError(
            f"variance mismatch: pmf {variance} vs sum q(1-q) {e.variance}"
        )
    return PoissonBinomialDist(
        pmf=pmf,
        mean=mean,
        variance=variance,
        raw_moments=raw,
        centered_moments=centered,
        cancellation_flags=flags,
    )


def sample_moments(
    e: BernoulliEnsemble,
    n_samples: int,
    seed: int,
    moment_cap: int = DEFAULT_MOMENT_CAP,
    n_streams: int = 1,
    chunk: int = 1 << 16,
) -> np.ndarray:
    """Raw sample moments E_hat[S^j], j = 0..K, from Monte Carlo draws.

    Streams derive from (seed, stream-index) via numpy SeedSequence spawning
    over the PCG64 generator, so results are reproducible for a given
    (seed, n_streams) regardless of chunking.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    seqs = np.random.SeedSequence(seed).spawn(n_streams)
    per = [n_samples // n_streams] * n_streams
    per[0] += n_samples - sum(per)
    sums = np.zeros(moment_cap + 1, dtype=np.longdouble)
    q = e.probs
    for seq, count in zip(seqs, per):
        rng = np.random.Generator(np.random.PCG64(seq))
        left = count
        while left > 0:
            c = min(chunk, left)
            s = (rng.random((c, e.m)) < q).sum(axis=1).astype(np.float64)
            for j in range(moment_cap + 1):
                sums[j] += np.sum(np.longdouble(s) ** j)
            left -= c
    return (sums / n_samples).astype(np.float64)


def _compositions(k: int, min_part: int = 2):
    """Ordered tuples (k_1..k_j) of parts >= min_part summing to k."""
    if k == 0:
        yield ()
        return
    for first in range(min_part, k + 1):
        for rest in _compositions(k - first, min_part):
            yield (first,) + rest


def moment_bound_combinatorial(k: int) -> float:
    """sum over compositions of k into parts >= 2 of k!/(k_1! ... k_j!).

    Dominates the standardized centered k-th moment of the indicator sum
    for any ensemble whose variance is at least 1.
    """
    total = 0
    for parts in _compositions(k):
        c = math.factorial(k)
        for part in parts:
            c //= math.factorial(part)
        total += c
    return float(total)


def centered_moment_bound(
    e: BernoulliEnsemble, k: int, dist: PoissonBinomialDist | None = None
) -> tuple[float, float]:
    """(standardized centered k-th moment, combinatorial bound).

    The first component is E[(S-mean)^k]/variance^(k/2); the bound holds
    whenever the ensemble variance is >= 1 (each term of the moment
    expansion contributes variance^(j - k/2) <= 1 then).
    """
    if dist is None:
        dist = exact_distribution(e, moment_cap=max(k, 2))
    std = dist.centered_moment(k) / dist.variance ** (k / 2)
    return std, moment_bound_combinatorial(k)


def centered_indicator_moments(e: BernoulliEnsemble, k_max: int) -> np.ndarray:
    """E[(X_p - q_p)^k] for k = 0..k_max, one row per prime.

    E of the centered indicator is 0 exactly; |E[.^k]| <= E[.^2] <= 1/4.
    """
    q = e.probs[:, None]
    k = np.arange(k_max + 1)[None, :]
    return q * (1.0 - q) ** k + (1.0 - q) * (-q) ** k
