"""Prime generation, largest-prime-factor tables, and smooth/ultra-smooth counting.

Two independent algorithms compute the smooth counting function: a segmented
largest-prime-factor sieve (`count_smooth_sieve`) and the Buchstab-style
recurrence over primes (`count_smooth_recurrence`, `smooth_count_table`).
They must agree exactly wherever both run; the test suite enforces this.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import CapacityError

# Default per-segment entry count for LPF tables and the memory budget for
# whole-range sieving.  Both overridable per call.
DEFAULT_SEGMENT_LEN = 1 << 22
SIEVE_BUDGET = 1 << 28

LPF_CACHE_ENV = "SMOOTHSTATS_LPF_CACHE"
_LPF_MAGIC = b"SSLPF1\n"
_LPF_VERSION = 1

_prime_cache = {"limit": 0, "primes": np.empty(0, dtype=np.int64)}


def primes_up_to(n: int) -> np.ndarray:
    """All primes <= n, ascending, as an int64 array (cached module-wide)."""
    n = int(n)
    if n < 2:
        return np.empty(0, dtype=np.int64)
    if n > _prime_cache["limit"]:
        limit = max(n, 1 << 16)
        mask = np.ones(limit + 1, dtype=bool)
        mask[:2] = False
        for p in range(2, math.isqrt(limit) + 1):
            if mask[p]:
                mask[p * p :: p] = False
        _prime_cache["primes"] = np.nonzero(mask)[0].astype(np.int64)
        _prime_cache["limit"] = limit
    pr = _prime_cache["primes"]
    return pr[: np.searchsorted(pr, n, side="right")]


def prime_count(n: int) -> int:
    """pi(n), the number of primes <= n."""
    return len(primes_up_to(n))


def _phi_y(y: float) -> float:
    # (log log y)^sqrt(log log log y); below the triple-log threshold the
    # expression leaves the reals, so clamp the exponent at 0 and the base
    # at 1 (making the truncation a no-op for very small y).
    lly = math.log(math.log(y)) if y > math.e else 0.0
    if lly <= 1.0:
        return 1.0
    return lly ** math.sqrt(math.log(lly))


@dataclass(frozen=True)
class SmoothContext:
    """The parameter pair (x, y) with its derived quantities.

    `trunc_exponent` overrides the default truncation exponent 1/phi_y used
    to form Y; at desk scale phi_y is O(1)-small and experiments sweep it.
    """

    x: int
    y: int
    trunc_exponent: float | None = None
    u: float = field(init=False)
    u_y: float = field(init=False)
    phi_y: float = field(init=False)
    Y: int = field(init=False)

    def __post_init__(self):
        if self.y < 2:
            raise ValueError("y must be >= 2")
        if self.x < self.y:
            raise ValueError("x must be >= y")
        u = math.log(self.x) / math.log(self.y)
        phi = _phi_y(self.y)
        expo = self.trunc_exponent if self.trunc_exponent is not None else 1.0 / phi
        Y = max(2, int(self.y**expo))
        # integer rounding guard: keep Y such that Y <= y
        Y = min(Y, self.y)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "u_y", u + math.log(self.y) / math.log(u + 2))
        object.__setattr__(self, "phi_y", phi)
        object.__setattr__(self, "Y", Y)

    @property
    def loglog_y(self) -> float:
        return math.log(math.log(self.y))


@dataclass(frozen=True)
class UltraBoundTable:
    """Per-prime exponent caps v_p = max{v : p^v <= y}, by integer powering."""

    y: int
    primes: np.ndarray
    vpow: np.ndarray  # v_p for each prime

    @classmethod
    def build(cls, y: int) -> "UltraBoundTable":
        pr = primes_up_to(y)
        vp = np.empty(len(pr), dtype=np.int64)
        for i, p in enumerate(pr):
            p = int(p)
            v, q = 1, p * p
            while q <= y:
                v += 1
                q *= p
            vp[i] = v
        return cls(y=y, primes=pr, vpow=vp)

    def violation_powers(self, limit: int) -> np.ndarray:
        """p^(v_p+1) for each prime, or 0 where it exceeds `limit`.

        An integer is y-ultra-smooth iff it is y-smooth and divisible by
        none of these powers.
        """
        out = np.zeros(len(self.primes), dtype=np.int64)
        for i, (p, v) in enumerate(zip(self.primes, self.vpow)):
            q = int(p) ** (int(v) + 1)
            if q <= limit:
                out[i] = q
        return out


# ---------------------------------------------------------------------------
# LPF tables


@dataclass(frozen=True)
class LpfTable:
    """Largest-prime-factor table for the inclusive range [lo, hi], P(1)=1."""

    lo: int
    hi: int
    lpf: np.ndarray

    def __getitem__(self, n: int) -> int:
        if not self.lo <= n <= self.hi:
            raise IndexError(f"{n} outside [{self.lo}, {self.hi}]")
        return int(self.lpf[n - self.lo])

    def save(self, path: str) -> None:
        with open(path, "wb") as f:
            f.write(_LPF_MAGIC)
            f.write(struct.pack("<IQQ", _LPF_VERSION, self.lo, self.hi))
            f.write(self.lpf.astype("<i8").tobytes())

    @classmethod
    def load(cls, path: str) -> "LpfTable":
        with open(path, "rb") as f:
            magic = f.read(len(_LPF_MAGIC))
            if magic != _LPF_MAGIC:
                raise ValueError(f"{path}: bad magic bytes")
            version, lo, hi = struct.unpack("<IQQ", f.read(20))
            if version != _LPF_VERSION:
                raise ValueError(f"{path}: unsupported version {version}")
            data = np.frombuffer(f.read(), dtype="<i8").astype(np.int64)
        if len(data) != hi - lo + 1:
            raise ValueError(f"{path}: truncated table")
        return cls(lo=int(lo), hi=int(hi), lpf=data)


def _lpf_segment(lo: int, hi: int, primes: np.ndarray) -> np.ndarray:
    n = hi - lo + 1
    res = np.arange(lo, hi + 1, dtype=np.int64)
    lpf = np.ones(n, dtype=np.int64)
    for p in primes:
        p = int(p)
        if p * p > hi:
            break
        q = p
        while q <= hi:
            start = (-lo) % q
            res[start::q] //= p
            q *= p
        start = (-lo) % p
        lpf[start::p] = p  # primes ascend, so the last write is the max
    big = res > 1
    lpf[big] = res[big]
    if lo == 0:
        lpf[0] = 0
    return lpf


def build_lpf(
    lo: int,
    hi: int,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    budget: int = SIEVE_BUDGET,
    cache_path: str | None = None,
) -> LpfTable:
    """Segmented largest-prime-factor table on [lo, hi].

    If `cache_path` (or the SMOOTHSTATS_LPF_CACHE env var) names an existing
    file covering the range, the table is loaded instead of resieved.
    """
    if not 1 <= lo <= hi:
        raise ValueError("need 1 <= lo <= hi")
    if hi - lo + 1 > budget:
        raise CapacityError(
            f"range of {hi - lo + 1} entries exceeds budget {budget}"
        )
    cache_path = cache_path or os.environ.get(LPF_CACHE_ENV)
    if cache_path and os.path.exists(cache_path):
        table = LpfTable.load(cache_path)
        if table.lo <= lo and table.hi >= hi:
            off = lo - table.lo
            return LpfTable(lo=lo, hi=hi, lpf=table.lpf[off : off + hi - lo + 1])
    primes = primes_up_to(math.isqrt(hi))
    parts = []
    s = lo
    while s <= hi:
        e = min(hi, s + segment_len - 1)
        parts.append(_lpf_segment(s, e, primes))
        s = e + 1
    table = LpfTable(lo=lo, hi=hi, lpf=np.concatenate(parts))
    if cache_path and not os.path.exists(cache_path):
        table.save(cache_path)
    return table


# ---------------------------------------------------------------------------
# Scalar predicates (trial division; intended for desk-scale n)


def lpf(n: int) -> int:
    """Largest prime factor of n, with lpf(1) = 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    best, m = 1, n
    for p in primes_up_to(math.isqrt(n)):
        p = int(p)
        if p * p > m:
            break
        if m % p == 0:
            best = p
            while m % p == 0:
                m //= p
    return m if m > 1 else best


def is_smooth(n: int, ctx: SmoothContext) -> bool:
    """True iff every prime factor of n is <= ctx.y (n=1 is smooth)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return lpf(n) <= ctx.y


def is_ultra_smooth(n: int, ctx: SmoothContext, ub: UltraBoundTable | None = None) -> bool:
    """True iff n is y-smooth and each exact prime power p^v || n has p^v <= y."""
    if n < 1:
        raise ValueError("n must be >= 1")
    y = ctx.y
    m = n
    for p in primes_up_to(y):
        p = int(p)
        if p * p > m:
            break
        if m % p == 0:
            q = 1
            while m % p == 0:
                m //= p
                q *= p
            if q > y:
                return False
    # m is now 1 or a prime factor > sqrt of the remainder
    return m <= y


def omega_t(n: int, t: int) -> int:
    """Number of distinct primes p <= t dividing n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if t < 2:
        raise ValueError("t must be >= 2")
    count, m = 0, n
    for p in primes_up_to(t):
        p = int(p)
        if p > m:
            break
        if m % p == 0:
            count += 1
            while m % p == 0:
                m //= p
    return count


def omega(n: int) -> int:
    """Number of distinct prime divisors of n (omega(1) = 0)."""
    if n == 1:
        return 0
    return omega_t(n, n)


# ---------------------------------------------------------------------------
# Counting: segmented sieve route


def count_smooth_sieve(
    ctx: SmoothContext,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    budget: int = SIEVE_BUDGET,
) -> int:
    """Exact Psi(x, y) by a segmented LPF sieve, counting n = 1."""
    x, y = ctx.x, ctx.y
    if x > budget:
        raise CapacityError(f"x={x} exceeds sieve budget {budget}")
    if y >= x:
        return x
    primes = primes_up_to(math.isqrt(x))
    total = 0
    s = 1
    while s <= x:
        e = min(x, s + segment_len - 1)
        seg = _lpf_segment(s, e, primes)
        total += int(np.count_nonzero(seg <= y))
        s = e + 1
    return total


def count_ultra(
    ctx: SmoothContext,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    budget: int = SIEVE_BUDGET,
) -> int:
    """Exact Upsilon(x, y): y-smooth n <= x free of prime powers above y."""
    x, y = ctx.x, ctx.y
    if x > budget:
        raise CapacityError(f"x={x} exceeds sieve budget {budget}")
    ub = UltraBoundTable.build(y)
    viol = ub.violation_powers(x)
    viol = viol[viol > 0]
    primes = primes_up_to(math.isqrt(x))
    total = 0
    s = 1
    while s <= x:
        e = min(x, s + segment_len - 1)
        seg = _lpf_segment(s, e, primes)
        ok = seg <= y
        for q in viol:
            q = int(q)
            start = (-s) % q
            ok[start::q] = False
        total += int(np.count_nonzero(ok))
        s = e + 1
    return total


# ---------------------------------------------------------------------------
# Counting: recurrence route  Psi(x, p_k) = Psi(x, p_{k-1}) + Psi(x/p_k, p_k)


@njit(cache=True)
def _psi_dp(values, psi, primes, x, s, n_values):
    for j in range(primes.shape[0]):
        p = primes[j]
        for idx in range(p - 1, n_values):
            w = values[idx] // p
            if w <= s:
                k = w - 1
            else:
                k = n_values - x // w
            psi[idx] += psi[k]


@njit(cache=True)
def _psi_table_dp(tbl, primes, n):
    for j in range(primes.shape[0]):
        p = primes[j]
        for v in range(p, n + 1):
            tbl[v] += tbl[v // p]


def count_smooth_recurrence(x: int, y: int, budget: int = SIEVE_BUDGET) -> int:
    """Exact Psi(x, y) by the prime recurrence with floor-value compression.

    Independent of the sieve route; the two must agree exactly.
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    if y < 2:
        raise ValueError("y must be >= 2")
    if x == 0:
        return 0
    if x > budget * 4:
        raise CapacityError(f"x={x} exceeds recurrence budget {budget * 4}")
    if min(y, x) > budget and y > math.isqrt(x):
        raise CapacityError(f"prime list up to {min(y, x)} exceeds budget {budget}")
    values, psi, s = _psi_floor_table(x, y)
    result = int(psi[-1])
    if y > s:
        pr = primes_up_to(min(y, x))
        tail = pr[np.searchsorted(pr, s, side="right") :]
        if len(tail):
            result += int(np.sum(x // tail))
    return result


def _psi_floor_table(x: int, y: int):
    """DP over the distinct floor values of x: psi[i] = Psi(values[i], min(y, sqrt x))."""
    s = math.isqrt(x)
    small = np.arange(1, s + 1, dtype=np.int64)
    big = x // np.arange(s, 0, -1, dtype=np.int64)
    big = big[big > s]
    values = np.concatenate([small, big])
    psi = np.ones(len(values), dtype=np.int64)
    primes = primes_up_to(min(y, s))
    if len(primes):
        _psi_dp(values, psi, primes.astype(np.int64), x, s, len(values))
    return values, psi, s


def smooth_counts_at_floors(x: int, y: int) -> dict[int, int]:
    """Psi(v, y) for every distinct v = x // i, as a dict v -> count.

    One DP pass serves all the local ratios Psi(x/d, y)/Psi(x, y).
    """
    values, psi, s = _psi_floor_table(x, y)
    out = {}
    if y <= s:
        for v, c in zip(values.tolist(), psi.tolist()):
            out[v] = c
        return out
    pr = primes_up_to(min(y, x))
    lo_idx = np.searchsorted(pr, s, side="right")
    for v, c in zip(values.tolist(), psi.tolist()):
        hi_idx = np.searchsorted(pr, min(y, v), side="right")
        tail = pr[lo_idx:hi_idx]
        out[v] = c + (int(np.sum(v // tail)) if len(tail) else 0)
    return out


def smooth_count_table(n: int, y: int, budget: int = SIEVE_BUDGET) -> np.ndarray:
    """Psi(x, y) for every x in [0, n] at once, via the same recurrence."""
    if n > budget:
        raise CapacityError(f"n={n} exceeds budget {budget}")
    tbl = np.ones(n + 1, dtype=np.int64)
    tbl[0] = 0
    primes = primes_up_to(min(y, n))
    if len(primes):
        _psi_table_dp(tbl, primes.astype(np.int64), n)
    return tbl
