"""Per-element omega statistics over smooth populations, at scale.

A segmented kernel accumulates, for every n <= x, the count of distinct
prime divisors (total, and restricted to p <= Y), a log-sum smoothness
classifier, and an ultra-smoothness flag.  Smoothness detection works by
comparing the accumulated sum of log p over prime-power hits with log n:
for a non-smooth n the deficit is at least log(y+1), so a coarse threshold
separates the classes with a huge margin and float32 accumulation error is
irrelevant.

Only joint histograms over (omega, omega_Y) leave the kernel, so memory is
flat in x.  All reductions are integer sums, hence order-independent and
bit-identical across segmentations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import CapacityError
from .sieve import SmoothContext, UltraBoundTable, primes_up_to

SCAN_SEGMENT_LEN = 1 << 19
SCAN_BUDGET = 1 << 35
_OMAX = 64  # distinct prime divisors of n <= 2^63 stay far below this


@njit(cache=True)
def _scan_segment(
    lo,
    hi,
    primes,
    logp,
    n_trunc,
    qbad,
    thr,
    delta,
    use_exact_log,
    thresholds,
    logsum,
    omega,
    omega_y,
    flags,
    hist_smooth,
    hist_ultra,
    thr_counts,
):
    n = hi - lo + 1
    for i in range(n):
        logsum[i] = 0.0
        omega[i] = 0
        omega_y[i] = 0
        flags[i] = 0
    for j in range(primes.shape[0]):
        p = primes[j]
        lp = logp[j]
        start = ((lo + p - 1) // p) * p - lo
        if j < n_trunc:
            for i in range(start, n, p):
                logsum[i] += lp
                omega[i] += 1
                omega_y[i] += 1
        else:
            for i in range(start, n, p):
                logsum[i] += lp
                omega[i] += 1
        q = p * p
        while q <= hi:
            start = ((lo + q - 1) // q) * q - lo
            for i in range(start, n, q):
                logsum[i] += lp
            q *= p
        qb = qbad[j]
        if qb != 0 and qb <= hi:
            start = ((lo + qb - 1) // qb) * qb - lo
            for i in range(start, n, qb):
                flags[i] = 1
    psi_seg = 0
    ups_seg = 0
    for i in range(n):
        if use_exact_log:
            smooth = logsum[i] > math.log(lo + i) - delta
        else:
            smooth = logsum[i] > thr
        if smooth:
            psi_seg += 1
            k = omega[i]
            ky = omega_y[i]
            hist_smooth[k, ky] += 1
            if flags[i] == 0:
                ups_seg += 1
                hist_ultra[k, ky] += 1
            flags[i] |= 2
        else:
            flags[i] &= 1
    for t in range(thresholds.shape[0]):
        T = thresholds[t]
        if T < lo:
            continue
        if T >= hi:
            thr_counts[t] += psi_seg
        else:
            c = 0
            for i in range(T - lo + 1):
                if flags[i] & 2:
                    c += 1
            thr_counts[t] += c
    return psi_seg, ups_seg


@dataclass
class OmegaScan:
    """Exact joint (omega, omega_Y) histograms over S(x,y) and U(x,y)."""

    ctx: SmoothContext
    psi: int
    upsilon: int
    hist_smooth: np.ndarray  # shape (_OMAX, _OMAX), [omega, omega_Y] -> count
    hist_ultra: np.ndarray
    psi_at: dict[int, int] = field(default_factory=dict)  # T -> Psi(T, y)

    def marginal(self, population: str = "smooth", variable: str = "omega") -> np.ndarray:
        hist = self.hist_smooth if population == "smooth" else self.hist_ultra
        axis = 1 if variable == "omega" else 0
        return hist.sum(axis=axis)

    def h_histogram(self, population: str = "smooth") -> np.ndarray:
        """Histogram of h(n) = omega(n) - omega_Y(n) over the population."""
        hist = self.hist_smooth if population == "smooth" else self.hist_ultra
        out = np.zeros(_OMAX, dtype=np.int64)
        k, ky = np.nonzero(hist)
        np.add.at(out, k - ky, hist[k, ky])
        return out


def omega_scan(
    ctx: SmoothContext,
    thresholds: tuple[int, ...] = (),
    segment_len: int = SCAN_SEGMENT_LEN,
    budget: int = SCAN_BUDGET,
) -> OmegaScan:
    """Single pass over [1, x] producing exact population histograms.

    `thresholds` requests exact Psi(T, y) values for the given T (used for
    the local-ratio checks and exact-mode ensemble probabilities).
    """
    x, y = ctx.x, ctx.y
    if x > budget:
        raise CapacityError(f"x={x} exceeds scan budget {budget}")
    primes = primes_up_to(y).astype(np.int64)
    logp = np.log(primes.astype(np.float64)).astype(np.float32)
    n_trunc = int(np.searchsorted(primes, ctx.Y, side="right"))
    qbad = UltraBoundTable.build(y).violation_powers(x)
    thr_arr = np.asarray(sorted(thresholds), dtype=np.int64)
    if len(thr_arr) and (thr_arr[0] < 1 or thr_arr[-1] > x):
        raise ValueError("thresholds must lie in [1, x]")

    logsum = np.empty(segment_len, dtype=np.float32)
    om = np.empty(segment_len, dtype=np.uint8)
    om_y = np.empty(segment_len, dtype=np.uint8)
    flags = np.empty(segment_len, dtype=np.uint8)
    hist_smooth = np.zeros((_OMAX, _OMAX), dtype=np.int64)
    hist_ultra = np.zeros((_OMAX, _OMAX), dtype=np.int64)
    thr_counts = np.zeros(len(thr_arr), dtype=np.int64)

    gap = math.log(y + 1)
    delta = 0.5 * gap
    psi = 0
    ups = 0
    lo = 1
    while lo <= x:
        hi = min(x, lo + segment_len - 1)
        # constant-threshold classification is valid once the segment spans
        # less than a factor (y+1) in value, with margin for float32 error
        exact = math.log(hi / lo) + 0.2 > gap
        thr = 0.5 * (math.log(lo) + math.log(hi) - gap)
        p_seg, u_seg = _scan_segment(
            lo,
            hi,
            primes,
            logp,
            n_trunc,
            qbad,
            np.float32(thr),
            delta,
            exact,
            thr_arr,
            logsum,
            om,
            om_y,
            flags,
            hist_smooth,
            hist_ultra,
            thr_counts,
        )
        psi += int(p_seg)
        ups += int(u_seg)
        lo = hi + 1
    return OmegaScan(
        ctx=ctx,
        psi=psi,
        upsilon=ups,
        hist_smooth=hist_smooth,
        hist_ultra=hist_ultra,
        psi_at={int(t): int(c) for t, c in zip(thr_arr, thr_counts)},
    )
