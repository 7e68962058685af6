"""
Large-n approximations against the exact recursion
==================================================

Two closed-form approximations of ``f_n``: propagation along
characteristics (WKB) and a drift-diffusion solution near the Kelly
boundary ``x = exp(-n v0)``.  Both are compared with the dynamic program on
a wide grid so that no edge effects enter.
"""

import math

import numpy as np

from kellyext.asymptotics import DiffusionEvaluator, WkbEvaluator
from kellyext.dp import GridSpec, solve
from kellyext.gamble import EXAMPLE_GAMBLE as g

n = 1000
sol = solve(g, n, GridSpec(math.log(1e-60), math.log(1e8), 8001))
wkb = WkbEvaluator.for_gamble(g)
dif = DiffusionEvaluator.for_gamble(g)

print("ln x / n   ln f_DP    ln f_WKB   alpha")
for s in np.linspace(-0.9 * wkb.v1, 0.01, 12):
    x = math.exp(s * n)
    r = wkb.value(x, n)
    print(f"{s:8.4f}  {math.log(sol.f(n, x)):9.3f}  {r.log_value:9.3f}  {r.alpha:.3f}")

# The WKB form leaves out a prefactor, so ln f_WKB - ln f_DP grows slowly
# with n while the rates agree.
print("\ngap at ln x / n = -0.03:")
for m in (250, 500, 1000):
    x = math.exp(-0.03 * m)
    print(f"  n={m:4d}  {wkb.value(x, m).log_value - math.log(sol.f(m, x)):+.3f}")

# Near the boundary the diffusion profile has the right shape but the
# wrong scale on the low side (its initial profile drops ln(1+x) for x<1).
w = dif.width(n)
print("\n   t     f_DP      f_diff")
for t in np.linspace(-2, 2, 9):
    x = math.exp(t * w - wkb.v0 * n)
    print(f"{t:5.1f}  {sol.f(n, x):8.4f}  {float(dif(x, n)):8.4f}")
