"""Backward induction for ``f_n(x) = max E[ln(1 + x_0)]``.

The value function of round ``k`` (``k`` rounds remaining) is stored on a
grid uniform in ``q = ln x``.  Off the grid it is continued analytically:
linearly through the origin below ``x_min``, and by the Kelly asymptote
``ln x + k*v0`` above ``x_max`` (``ln(1 + x)`` itself for ``k = 0``).
Between nodes it is read through a concave quadratic spline, so the
one-round objective stays concave in the betting fraction and a
golden-section search finds its maximum.
"""

from __future__ import annotations

import functools
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gamble import Gamble, diffusion_params, kappa_prime
from .interp import ConcaveQuadraticSpline, node_slopes

__all__ = [
    "GridSpec",
    "GridWarning",
    "Log1pTail",
    "LogTail",
    "LinearTail",
    "ValueFunction",
    "Solution",
    "terminal_value",
    "bellman_step",
    "enforce_concavity",
    "solve",
    "query_policy",
    "query_value",
]

GOLDEN_ITERS = 60
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class GridWarning(UserWarning):
    """The grid is too narrow for the requested horizon."""


@dataclass(frozen=True)
class GridSpec:
    q_min: float = math.log(1e-16)
    q_max: float = math.log(1e3)
    num_points: int = 4001

    def __post_init__(self):
        if not self.q_min < self.q_max:
            raise ValueError("q_min must be below q_max")
        if self.num_points < 16:
            raise ValueError("grid needs at least 16 points")

    @property
    def step(self) -> float:
        return (self.q_max - self.q_min) / (self.num_points - 1)

    @property
    def q(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.num_points)

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.q)

    @classmethod
    def from_x(cls, x_min: float, x_max: float, num_points: int = 4001) -> "GridSpec":
        return cls(math.log(x_min), math.log(x_max), num_points)

    def to_dict(self) -> dict:
        return {"q_min": self.q_min, "q_max": self.q_max, "num_points": self.num_points}


# -- upper tails ---------------------------------------------------------------


@dataclass(frozen=True)
class Log1pTail:
    """``ln(1 + x)``: the terminal utility itself."""

    def __call__(self, x):
        return np.log1p(x)

    def slope(self, x):
        return 1.0 / (1.0 + x)

    def advance(self, v0: float, mean_gain: float):
        return LogTail(v0)


@dataclass(frozen=True)
class LogTail:
    """Kelly asymptote ``ln x + offset``."""

    offset: float = 0.0

    def __call__(self, x):
        return np.log(x) + self.offset

    def slope(self, x):
        return 1.0 / x

    def advance(self, v0: float, mean_gain: float):
        return LogTail(self.offset + v0)


@dataclass(frozen=True)
class LinearTail:
    slope_: float

    def __call__(self, x):
        return self.slope_ * np.asarray(x, dtype=float)

    def slope(self, x):
        return self.slope_

    def advance(self, v0: float, mean_gain: float):
        return LinearTail(self.slope_ * mean_gain)


# -- value functions -----------------------------------------------------------


@dataclass(eq=False)
class ValueFunction:
    """Grid samples of ``f_k`` plus its analytic continuation."""

    k: int
    grid: GridSpec
    values: np.ndarray
    upper: object = field(default_factory=Log1pTail)
    #: closed form in ``q``, used instead of the spline when known (round 0)
    analytic: object = field(default=None, repr=False)
    _spline: ConcaveQuadraticSpline | None = field(default=None, repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def spline(self) -> ConcaveQuadraticSpline:
        if self._spline is None:
            x = self.x
            z = self.values
            left = z[0] / x[0]
            right = float(self.upper.slope(x[-1]))
            self._spline = ConcaveQuadraticSpline(x, z, node_slopes(x, z, left, right))
        return self._spline

    def eval_q(self, q):
        """Evaluate at log-capital ``q`` (vectorized)."""
        g = self.grid
        q = np.asarray(q, dtype=float)
        if self.analytic is not None:
            return self.analytic(q)
        pos = (q - g.q_min) / g.step
        idx = np.clip(np.floor(pos).astype(np.intp), 0, g.num_points - 2)
        x = np.exp(q)
        out = self.spline().evaluate(x, idx)
        below = q < g.q_min
        if below.any():
            out = np.where(below, self.values[0] * np.exp(q - g.q_min), out)
        above = q > g.q_max
        if above.any():
            out = np.where(above, self.upper(np.where(above, x, 1.0)), out)
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("capital must be positive")
        out = self.eval_q(np.log(x))
        return out if out.ndim else float(out)


def _log1p_exp(q):
    return np.logaddexp(0.0, q)


def terminal_value(grid: GridSpec) -> ValueFunction:
    return ValueFunction(0, grid, np.log1p(grid.x), Log1pTail(), analytic=_log1p_exp)


def _objective(vf: ValueFunction, q, lam, log_a1, p):
    # sum_j p_j f((1 + lam (a_j - 1)) x) evaluated in log coordinates
    total = 0.0
    for am1, pj in zip(log_a1, p):
        total = total + pj * vf.eval_q(q + np.log1p(lam * am1))
    return total


def _maximize(vf: ValueFunction, g: Gamble, q):
    """Best fraction and value of the one-round problem at log-capitals ``q``.

    Golden-section on [0, 1]; then the endpoints compete, ties going to
    the smaller fraction.
    """
    am1 = g.a - 1.0
    p = g.p
    q = np.asarray(q, dtype=float)
    lo = np.zeros_like(q)
    hi = np.ones_like(q)
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc = _objective(vf, q, c, am1, p)
    fd = _objective(vf, q, d, am1, p)
    for _ in range(GOLDEN_ITERS):
        left = fc >= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new_c = hi - _INVPHI * (hi - lo)
        new_d = lo + _INVPHI * (hi - lo)
        # reuse the surviving interior point
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        f_new = _objective(vf, q, np.where(left, new_c, new_d), am1, p)
        fc, fd = np.where(left, f_new, fd), np.where(left, fc, f_new)
        c, d = c_next, d_next
    lam = np.where(fc >= fd, c, d)
    best = np.maximum(fc, fd)
    f0 = vf.eval_q(q)
    f1 = _objective(vf, q, np.ones_like(q), am1, p)
    take1 = f1 > best
    lam = np.where(take1, 1.0, lam)
    best = np.where(take1, f1, best)
    take0 = f0 >= best
    lam = np.where(take0, 0.0, lam)
    best = np.where(take0, f0, best)
    return lam, best


@functools.lru_cache(maxsize=64)
def _kelly_drift(g: Gamble) -> float:
    return diffusion_params(g).v0 if g.is_favorable else 0.0


def enforce_concavity(vf: ValueFunction, rtol: float = 1e-12) -> ValueFunction:
    """Lower node values until the glued function is concave.

    Two repairs, neither of which ever raises a value:

    * an isolated node sticking out above both neighbouring secant lines is
      clipped back (this is a local fix for a single bad node);
    * the top of the grid is cut against the tangent of the upper tail at
      ``x_max``, sweeping leftwards until the secant constraints hold.  This
      removes the "tooth" where the grid solution meets the asymptote.
    """
    x = vf.x
    z = np.array(vf.values, dtype=float)
    n = len(z)
    tol = rtol * np.abs(z)

    xe = np.r_[0.0, x]
    for _ in range(8):
        ze = np.r_[0.0, z]
        # secant through the two nodes on the left / right, evaluated at i
        i = np.arange(2, n + 1)
        ext_l = ze[i - 1] + (ze[i - 1] - ze[i - 2]) / (xe[i - 1] - xe[i - 2]) * (xe[i] - xe[i - 1])
        ext_r = np.full(n - 1, np.inf)
        j = np.arange(1, n - 2)
        ext_r[:-2] = z[j + 1] - (z[j + 2] - z[j + 1]) / (x[j + 2] - x[j + 1]) * (x[j + 1] - x[j])
        # a node is a bump when it sits above both secant lines; it then
        # drops to the lower one, which restores both neighbours' chords
        hi = np.maximum(ext_l, ext_r)
        lo = np.minimum(ext_l, ext_r)
        hi[-2:] = lo[-2:] = ext_l[-2:]
        w = (x[1:-1] - x[:-2]) / (x[2:] - x[:-2])
        chord = np.r_[(1 - w) * z[:-2] + w * z[2:], -np.inf]
        bad = z[1:] > hi + tol[1:]
        if not bad.any():
            break
        z[1:] = np.where(bad, np.maximum(lo, chord), z[1:])

    top = float(vf.upper(x[-1]))
    slope = float(vf.upper.slope(x[-1]))
    changed = np.zeros(n, dtype=bool)
    if z[-1] > top:
        z[-1] = top
        changed[-1] = True
    lim = z[-1] - slope * (x[-1] - x[-2])
    if z[-2] > lim + tol[-2]:
        z[-2] = lim
        changed[-2] = True
    viol = np.nonzero(_chord_excess(x, z) > tol[1:-1])[0]
    first_bad = viol[0] + 1 if len(viol) else n
    for i in range(n - 3, -1, -1):
        if not changed[i + 1] and not changed[i + 2] and i + 1 < first_bad:
            break
        lim = z[i + 1] - (z[i + 2] - z[i + 1]) / (x[i + 2] - x[i + 1]) * (x[i + 1] - x[i])
        if z[i] > lim + tol[i]:
            z[i] = lim
            changed[i] = True
    return ValueFunction(vf.k, vf.grid, z, vf.upper)


def _chord_excess(x, z):
    """How far each interior node sits below the chord of its neighbours.

    Positive entries are concavity violations, in units of the values.
    """
    w = (x[1:-1] - x[:-2]) / (x[2:] - x[:-2])
    return (1.0 - w) * z[:-2] + w * z[2:] - z[1:-1]


def bellman_step(vf_prev: ValueFunction, g: Gamble) -> tuple[ValueFunction, np.ndarray]:
    """One round of backward induction.  Returns ``(f_k, lambda_k row)``."""
    q = vf_prev.grid.q
    lam, best = _maximize(vf_prev, g, q)
    # with nothing worth betting on, the continuation keeps its shape
    upper = vf_prev.upper.advance(_kelly_drift(g), g.mean_gain) if g.is_favorable else vf_prev.upper
    vf = ValueFunction(vf_prev.k + 1, vf_prev.grid, best, upper)
    return enforce_concavity(vf), lam


@dataclass(eq=False)
class Solution:
    """All value functions ``f_0..f_n`` and policy rows ``lambda_1..lambda_n``."""

    gamble: Gamble
    grid: GridSpec
    values: np.ndarray  # (n + 1, num_points)
    policy: np.ndarray  # (n, num_points), row k - 1 is round k

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    def tail(self, k: int):
        if k == 0 or not self.gamble.is_favorable:
            return Log1pTail()
        return LogTail(k * _kelly_drift(self.gamble))

    def value(self, k: int) -> ValueFunction:
        if not 0 <= k <= self.n:
            raise IndexError(f"round {k} outside 0..{self.n}")
        if k == 0:
            return terminal_value(self.grid)
        return ValueFunction(k, self.grid, self.values[k], self.tail(k))

    def f(self, k: int, x):
        return self.value(k)(x)

    def query_policy(self, k: int, x):
        return query_policy(self, k, x)

    def query_value(self, k: int, x):
        return query_value(self, k, x)

    def policy_at(self, k: int, log_x):
        """Table lookup of the policy (linear in ``ln x``); for simulation.

        Beyond the grid the edge values are held.
        """
        return np.interp(log_x, self.grid.q, self.policy[k - 1])

    def key(self) -> dict:
        return {"gamble": self.gamble.digest(), "n": self.n, "grid": self.grid.to_dict()}

    def save(self, path) -> Path:
        path = Path(path)
        meta = {"gamble": self.gamble.to_dict(), "grid": self.grid.to_dict(), "key": self.key()}
        with open(path, "wb") as fh:
            np.savez_compressed(fh, values=self.values, policy=self.policy, meta=json.dumps(meta))
        return path

    @classmethod
    def load(cls, path) -> "Solution":
        with np.load(path) as data:
            meta = json.loads(str(data["meta"]))
            return cls(
                Gamble.from_dict(meta["gamble"]),
                GridSpec(**meta["grid"]),
                data["values"],
                data["policy"],
            )


def solve(g: Gamble, n: int, grid: GridSpec | None = None, progress=None) -> Solution:
    """Run ``n`` Bellman steps from ``f_0 = ln(1 + x)``, keeping every round."""
    grid = grid or GridSpec()
    if n < 0:
        raise ValueError("number of rounds must be nonnegative")
    vf = terminal_value(grid)
    values = np.empty((n + 1, grid.num_points))
    policy = np.zeros((n, grid.num_points))
    values[0] = vf.values
    if not g.is_favorable:
        values[1:] = vf.values
        return Solution(g, grid, values, policy)
    span_needed = n * kappa_prime(g, 1.0)
    if grid.q_max - grid.q_min < span_needed:
        warnings.warn(
            f"grid spans {grid.q_max - grid.q_min:.1f} nats of ln x but {n} rounds "
            f"drift up to {span_needed:.1f}; values near the lower edge are degraded",
            GridWarning,
            stacklevel=2,
        )
    for k in range(1, n + 1):
        vf, lam = bellman_step(vf, g)
        values[k] = vf.values
        policy[k - 1] = lam
        if progress is not None:
            progress(k)
    return Solution(g, grid, values, policy)


def _requery(sol: Solution, k: int, x):
    if not 1 <= k <= sol.n:
        raise IndexError(f"round {k} outside 1..{sol.n}")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("capital must be positive")
    lam, best = _maximize(sol.value(k - 1), sol.gamble, np.log(np.atleast_1d(x)))
    if x.ndim:
        return lam.reshape(x.shape), best.reshape(x.shape)
    return float(lam[0]), float(best[0])


def query_policy(sol: Solution, k: int, x):
    """Optimal fraction in round ``k`` at capital ``x``.

    The one-round problem is solved again at exactly ``x`` against the
    stored ``f_{k-1}``, rather than interpolating the policy table.
    """
    return _requery(sol, k, x)[0]


def query_value(sol: Solution, k: int, x):
    """``f_k(x)`` from a fresh one-round maximization at ``x``."""
    return _requery(sol, k, x)[1]
