"""
One round of the coin flip
==========================

A stake grows by 30% on heads and shrinks by 25% on tails.  The mean gain
is positive, yet betting everything every time is a poor idea.  Here we look
at what a single round says about how much to bet.
"""

import math

import numpy as np

from kellyext.gamble import (
    EXAMPLE_GAMBLE as g,
    RateSpectrum,
    attractiveness_threshold,
    classify,
    diffusion_params,
    optimal_fraction,
)

print("mean gain per unit staked:", g.mean_gain)

# The log-optimal (Kelly) fraction.  For two outcomes it solves
# 0.3 (1 - 0.25 lam) = 0.25 (1 + 0.3 lam).
print("Kelly fraction:", optimal_fraction(g, 0.0))

# Less risk-averse utilities bet more.  Past alpha_1 the whole stake goes in.
al1 = attractiveness_threshold(g)
print(f"attractive for alpha >= {al1:.6f}  (closed form {1 + math.log(5 / 6) / math.log(26 / 15):.6f})")

for alpha in np.linspace(0.0, 1.0, 11):
    c = classify(g, alpha)
    print(f"  alpha={alpha:.1f}  {c.verdict.value:<12s} lambda*={c.lambda_star:.4f}")

# Growth-rate spectrum: kappa(alpha) and its slope span [v0, v1].  These
# drive the large-n behaviour of the multi-round problem.
sp = RateSpectrum.build(g)
dp = diffusion_params(g)
print(f"v0={sp.v0:.7f}  v1={sp.v1:.7f}  D={dp.D:.7f}")
for v in np.linspace(sp.v0, sp.v1, 6):
    print(f"  h({v:.5f}) = {sp.h(v):.6f}")
