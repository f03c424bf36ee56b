"""Saddle-point and xi equations, and prime power-law sums with their targets.

All prime sums are exact finite sums over a sieved prime list; no analytic
approximation is substituted.  Root solving is bisection to a safe window
followed by Newton polish, so bracketing is guaranteed and convergence fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketError
from .sieve import SmoothContext, primes_up_to

XI_RTOL = 1e-12
ALPHA_RESIDUAL_RTOL = 1e-10  # times log x, absolute residual


@dataclass(frozen=True)
class XiValue:
    """Root of e^xi = 1 + u*xi, with the asymptotic comparison value."""

    u: float
    xi: float
    degenerate: bool  # u == 1 limit, where the non-zero root collapses to 0

    @property
    def xi_asymptotic(self) -> float:
        # log(u log u); meaningful for u >= 3 only
        return math.log(self.u * math.log(self.u))


@dataclass(frozen=True)
class SaddlePoint:
    """Solved alpha(x, y) with its residual and the closed-form comparison."""

    alpha: float
    residual: float
    alpha_approx: float
    degenerate: bool


@dataclass(frozen=True)
class PrimeSumReport:
    """M(t) = sum_{p<=t} p^-alpha next to the asymptotic comparison targets."""

    t: int
    alpha: float
    M_t: float
    n_primes: int
    lemma41_target: float  # log log y + u*y/(y + log x)
    sumybig_target: float  # log log y + u
    loglog_t_target: float  # log log t
    trunc_target: float  # log log y - log phi(y)


def solve_xi(u: float) -> XiValue:
    """The unique positive root of e^xi = 1 + u*xi (xi -> 0 as u -> 1+)."""
    if u < 1:
        raise ValueError(f"u must be >= 1, got {u}")
    if u == 1:
        return XiValue(u=u, xi=0.0, degenerate=True)

    def f(t):
        return math.expm1(t) - u * t

    lo = 1e-30
    hi = 3.0 * math.log(u + 2.0)
    while f(hi) <= 0:
        hi *= 2.0
    # bisect into the region where the root is isolated, then Newton
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-4 * max(1.0, lo):
            break
    t = 0.5 * (lo + hi)
    for _ in range(100):
        ft = f(t)
        dft = math.exp(t) - u
        step = ft / dft
        t -= step
        if abs(step) <= XI_RTOL * 0.1 * max(t, 1e-300):
            break
    return XiValue(u=u, xi=t, degenerate=False)


def _saddle_lhs(alpha: float, logp: np.ndarray) -> float:
    return float(np.sum(logp / np.expm1(alpha * logp)))


def solve_alpha(ctx: SmoothContext, primes: np.ndarray | None = None) -> SaddlePoint:
    """Solve sum_{p<=y} log p / (p^alpha - 1) = log x for alpha.

    Bracketing is guaranteed: the left side diverges as alpha -> 0+ and
    vanishes as alpha -> infinity.
    """
    if primes is None:
        primes = primes_up_to(ctx.y)
    logp = np.log(primes.astype(np.float64))
    target = math.log(ctx.x)
    tol = ALPHA_RESIDUAL_RTOL * target

    lo, hi = 1e-6, 2.0
    f_lo = _saddle_lhs(lo, logp) - target
    while f_lo <= 0:
        lo *= 0.5
        if lo < 1e-18:
            raise BracketError("no sign change for alpha", lo, f_lo, hi,
                               _saddle_lhs(hi, logp) - target)
        f_lo = _saddle_lhs(lo, logp) - target
    f_hi = _saddle_lhs(hi, logp) - target
    while f_hi >= 0:
        hi *= 2.0
        if hi > 64.0:
            raise BracketError("no sign change for alpha", lo, f_lo, hi, f_hi)
        f_hi = _saddle_lhs(hi, logp) - target
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _saddle_lhs(mid, logp) - target >= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-4 * lo:
            break
    a = 0.5 * (lo + hi)
    for _ in range(100):
        f = _saddle_lhs(a, logp) - target
        if abs(f) <= tol:
            break
        e = np.exp(a * logp)
        df = float(-np.sum(logp * logp * e / np.square(np.expm1(a * logp))))
        a_next = a - f / df
        if not lo * 0.5 <= a_next <= hi * 2.0:
            a_next = 0.5 * (lo + hi)  # fall back to the bisection window
        a = a_next
    residual = abs(_saddle_lhs(a, logp) - target)
    xi = solve_xi(ctx.u)
    return SaddlePoint(
        alpha=a,
        residual=residual,
        alpha_approx=1.0 - xi.xi / math.log(ctx.y),
        degenerate=xi.degenerate,
    )


def prime_sum_M(
    t: int,
    alpha: float,
    ctx: SmoothContext,
    primes: np.ndarray | None = None,
) -> PrimeSumReport:
    """Exact M(t) = sum_{p<=t} p^-alpha with all comparison targets."""
    if not 2 <= t <= ctx.y:
        raise ValueError(f"need 2 <= t <= y, got t={t}")
    if primes is None:
        primes = primes_up_to(t)
    else:
        primes = primes[primes <= t]
    logp = np.log(primes.astype(np.float64))
    m_t = float(np.sum(np.exp(-alpha * logp)))
    lly = math.log(math.log(ctx.y))
    return PrimeSumReport(
        t=t,
        alpha=alpha,
        M_t=m_t,
        n_primes=len(primes),
        lemma41_target=lly + ctx.u * ctx.y / (ctx.y + math.log(ctx.x)),
        sumybig_target=lly + ctx.u,
        loglog_t_target=math.log(math.log(t)),
        trunc_target=lly - math.log(ctx.phi_y),
    )


def expected_mean_prediction(
    ctx: SmoothContext,
    sp: SaddlePoint | None = None,
    primes: np.ndarray | None = None,
) -> tuple[float, float]:
    """(M(y), log log y + u): the O(1)-accurate and leading-order predictions
    of the mean number of distinct prime divisors over S(x, y)."""
    if sp is None:
        sp = solve_alpha(ctx, primes)
    rep = prime_sum_M(ctx.y, sp.alpha, ctx, primes)
    return rep.M_t, rep.sumybig_target
