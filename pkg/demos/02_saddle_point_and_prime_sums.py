"""The saddle point alpha(x, y) and the prime sums it controls.

alpha solves sum_{p<=y} log p / (p^alpha - 1) = log x and governs local
ratios Psi(x/d, y) ~ Psi(x, y)/d^alpha.  It is approximated by
1 - xi(u)/log y where xi is the positive root of e^xi = 1 + u xi.  The sum
M(y) = sum_{p<=y} p^-alpha predicts the mean number of distinct prime
factors over the smooth population; its leading behaviour is
log log y + u.
"""

import math

from smoothstats import (
    SmoothContext,
    empirical_moments,
    prime_sum_M,
    solve_alpha,
    solve_xi,
)

y = 10**4
print(f"y = {y:.0e}, x = y^u")
print(f"{'u':>4} {'alpha':>9} {'1-xi/log y':>11} {'M(y)':>8} {'lly+u':>8} {'mean omega':>11}")
for u in (1.5, 2.0, 2.5):
    x = int(round(y**u))
    ctx = SmoothContext(x, y)
    sp = solve_alpha(ctx)
    rep = prime_sum_M(y, sp.alpha, ctx)
    mean = empirical_moments(ctx).mean if x <= 10**8 else float("nan")
    print(
        f"{u:>4} {sp.alpha:>9.5f} {sp.alpha_approx:>11.5f} "
        f"{rep.M_t:>8.4f} {rep.sumybig_target:>8.4f} {mean:>11.4f}"
    )

print()
print("xi(u) against its asymptotic log(u log u):")
for u in (3, 10, 100, 10**4):
    v = solve_xi(u)
    print(f"  u={u:<6} xi={v.xi:.6f}  log(u log u)={v.xi_asymptotic:.6f}")
