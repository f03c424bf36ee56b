"""Counting y-smooth and y-ultra-smooth integers two independent ways.

A y-smooth number has no prime factor above y; the ultra-smooth variant
additionally forbids prime *powers* above y.  We count both with a
segmented largest-prime-factor sieve and cross-check Psi(x, y) against the
Buchstab-style recurrence, then look at how the two populations diverge as
y shrinks.
"""

import numpy as np

from smoothstats import (
    SmoothContext,
    count_smooth_recurrence,
    count_smooth_sieve,
    count_ultra,
)

x = 10**6
print(f"x = {x:.0e}")
print(f"{'y':>8} {'Psi (sieve)':>12} {'Psi (recur)':>12} {'Upsilon':>12} {'ratio':>8}")
for y in (10, 31, 100, 316, 1000, 3162, 10000):
    ctx = SmoothContext(x, y)
    psi = count_smooth_sieve(ctx)
    psi2 = count_smooth_recurrence(x, y)
    assert psi == psi2, "the two counting algorithms must agree exactly"
    ups = count_ultra(ctx)
    print(f"{y:>8} {psi:>12} {psi2:>12} {ups:>12} {ups / psi:>8.4f}")

print()
print("Upsilon/Psi -> 1 as y grows: large prime powers get rare quickly.")
print("At y = 10 the gap is still big because 16, 32, 27, ... are smooth")
print("but not ultra-smooth.")
