"""
What the strategies actually deliver
====================================

The binomial law settles the all-in versus Kelly comparison for a $1000
stake exactly.  Then Monte Carlo compares the reserve-aware optimal
strategy with Kelly on the same coin flips.
"""

import math
import warnings

import numpy as np

from kellyext.dp import GridWarning, solve
from kellyext.gamble import EXAMPLE_GAMBLE as g
from kellyext.simulator import FixedFraction, PolicyDriven, exact_fixed_fraction, simulate_common

for name, lam in (("all-in", 1.0), ("Kelly", 1 / 3)):
    s = exact_fixed_fraction(g, lam, 1000.0, 1000, thresholds=[1000.0])
    print(f"{name:7s} P(> $1000)={s['tail_probs'][1000.0]:.4f}  median=${s['median']:,.4f}  mean=${s['mean']:.3e}")

with warnings.catch_warnings():
    warnings.simplefilter("ignore", GridWarning)
    sol = solve(g, 1000)

x_init = 10**-3.3  # $1000 against $2M
out = simulate_common(
    g,
    {"optimal": PolicyDriven(sol), "kelly": FixedFraction(1 / 3)},
    x_init,
    1000,
    n_paths=100_000,
    seed=7,
)
print("\n tau       P_opt(x0>tau)  P_kelly(x0>tau)")
for tau in (0.01, 0.1, 0.3, 1.0, 10.0):
    po = np.mean(out["optimal"] > math.log(tau))
    pk = np.mean(out["kelly"] > math.log(tau))
    print(f"{tau:6.2f}    {po:.4f}         {pk:.4f}")
for name, lx in out.items():
    print(f"{name:8s} median x0 = {math.exp(np.median(lx)):.3g}  (${2e6 * math.exp(np.median(lx)):,.0f})")
