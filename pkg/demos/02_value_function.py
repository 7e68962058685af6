"""
A thousand rounds with a fixed reserve
======================================

The player keeps an external capital of 1 that is never at risk and plays
with ``x``.  The goal is the expected log of the *total* wealth after the
last round, ``ln(1 + x0)``.  Backward induction gives the value ``f_k`` and
the optimal fraction for every round.
"""

import time
import warnings

import numpy as np

from kellyext.dp import GridWarning, query_policy, solve
from kellyext.gamble import EXAMPLE_GAMBLE as g

n = 1000
t0 = time.perf_counter()
with warnings.catch_warnings():
    # the default grid is narrower than the full drift span at n=1000; the
    # lower edge is slightly degraded but the middle is unaffected
    warnings.simplefilter("ignore", GridWarning)
    sol = solve(g, n)
print(f"solved {n} rounds on {sol.grid.num_points} nodes in {time.perf_counter() - t0:.1f} s")

# Far below the reserve the best move is to bet everything; far above it
# the player falls back to Kelly's 1/3.
for k in (1, 10, 100, 1000):
    row = [query_policy(sol, k, x) for x in (1e-10, 1e-5, 1e-2, 1.0, 1e2)]
    print(f"  k={k:4d}  " + "  ".join(f"{lam:.3f}" for lam in row))

# A $1000 stake against a $2M reserve.
x = 10**-3.3
first = query_policy(sol, n, x)
print(f"first move at x=10^-3.3: bet {first:.3f}")
print(f"after a win:             bet {query_policy(sol, n - 1, x * (1 + 0.3 * first)):.3f}")
print(f"after a loss:            bet {query_policy(sol, n - 1, x * (1 - 0.25 * first)):.3f}")

# Value relative to the two simple bounds: doing nothing and E[x0] for all-in.
xs = np.logspace(-12, 2, 8)
for xv, f in zip(xs, sol.f(n, xs)):
    print(f"  x={xv:8.1e}  f={f:10.4e}  ln(1+x)={np.log1p(xv):10.4e}  1.025^n x={1.025**n * xv:10.4e}")
