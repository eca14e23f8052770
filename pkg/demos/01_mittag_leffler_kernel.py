"""Walk through the Mittag-Leffler kernel machinery.

The variance process of the rough Heston model is driven by the
Mittag-Leffler probability density f(x; alpha, lam) -- the resolvent of the
fractional mean-reversion operator.  This script surveys its shape across
the roughness range, checks the exponential limit, and prints the tail and
origin behaviour that the quadrature formulas elsewhere rely on.

Run:  python3 demos/01_mittag_leffler_kernel.py
"""

import math

import numpy as np

from zlab.special import MlParams, l2_norm_f_squared, ml_cdf, ml_density, ml_neg

print("=== Mittag-Leffler function on the negative axis ===")
print(f"{'x':>10} {'E_0.55(-x)':>14} {'E_0.75(-x)':>14} {'E_1(-x)=exp':>14}")
for x in (0.1, 1.0, 5.0, 20.0, 100.0):
    row = [ml_neg(a, x) for a in (0.55, 0.75, 1.0)]
    print(f"{x:>10.2f} {row[0]:>14.6e} {row[1]:>14.6e} {row[2]:>14.6e}")
print("note the power-law tail for alpha < 1 vs the exponential collapse at alpha = 1\n")

print("=== density and CDF at the production parameters (alpha=0.55, lam=0.3) ===")
p = MlParams(0.55, 0.3)
print(f"{'x':>10} {'f(x)':>14} {'F(x)':>10}")
for x in (1e-4, 0.01, 0.1, 1.0, 10.0, 100.0, 1e4):
    print(f"{x:>10.4g} {ml_density(p, x):>14.6e} {ml_cdf(p, x):>10.6f}")

print("\norigin: f ~ lam x^(alpha-1)/Gamma(alpha); scaled check at x=1e-8:")
x = 1e-8
print(f"  f(x) * Gamma(a) * x^(1-a) / lam = "
      f"{ml_density(p, x) * math.gamma(0.55) * x**0.45 / 0.3:.8f}  (-> 1)")

print("\ntail: 1 - F(x) ~ x^(-alpha)/(lam Gamma(1-alpha)); ratio at x=1e5:")
x = 1e5
print(f"  (1-F) * lam * Gamma(1-a) * x^a     = "
      f"{(1 - ml_cdf(p, x)) * 0.3 * math.gamma(0.45) * x**0.55:.8f}  (-> 1)")

print("\n=== L2 norm of the squared density (stationary-limit constant) ===")
for alpha, lam in ((0.55, 0.3), (0.75, 0.3), (1.0, 0.3)):
    val = l2_norm_f_squared(MlParams(alpha, lam))
    note = "  (= lam/2 exactly)" if alpha == 1.0 else ""
    print(f"  alpha={alpha:<5} lam={lam}:  integral f^2 = {val:.10f}{note}")

print("\n=== scaling identity f(x; a, lam) = lam^(1/a) f(lam^(1/a) x; a, 1) ===")
std = MlParams(0.55, 1.0)
scale = 0.3 ** (1 / 0.55)
worst = max(abs(ml_density(p, x) - scale * ml_density(std, scale * x))
            for x in np.geomspace(1e-3, 50, 40))
print(f"  worst absolute gap on a log grid: {worst:.2e}")
