"""Distributions of the final capital under a betting strategy.

Fixed-fraction strategies on two-outcome gambles have an exact binomial
law.  Everything else is sampled: paths are evolved in log space, and
several strategies can be driven by the same outcome stream (common random
numbers) so that their pathwise ratios are meaningful.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .dp import Solution, query_policy
from .gamble import Gamble

__all__ = [
    "Strategy",
    "FixedFraction",
    "AllIn",
    "Idle",
    "PolicyDriven",
    "Blended",
    "blend",
    "step",
    "final_capital",
    "ExactDistribution",
    "EmpiricalDistribution",
    "exact_distribution",
    "exact_fixed_fraction",
    "simulate",
    "simulate_common",
    "CompetitiveReport",
    "competitive_check",
    "default_threads",
]

CHUNK = 1 << 16


def default_threads() -> int:
    raw = os.environ.get("KELLY_EXT_THREADS")
    if raw is None:
        return 1
    n = int(raw)
    if n < 1:
        raise ValueError("KELLY_EXT_THREADS must be a positive integer")
    return n


def step(x, lam, j, g: Gamble):
    """Capital after one round: ``(1 + lam (a_j - 1)) x``."""
    if np.any(np.asarray(lam) < 0) or np.any(np.asarray(lam) > 1):
        raise ValueError("betting fraction must lie in [0, 1]")
    return (1.0 + lam * (g.a[j] - 1.0)) * x


def final_capital(g: Gamble, lam: float, x_init: float, outcomes) -> float:
    """Capital after playing a fixed fraction through an outcome sequence."""
    eff = np.log1p(lam * (g.a - 1.0))
    return x_init * math.exp(math.fsum(eff[np.asarray(outcomes)]))


# -- strategies ----------------------------------------------------------------


class _Runner:
    """Per-path state of a memoryless strategy."""

    def __init__(self, strategy, g: Gamble, log_x):
        self.strategy = strategy
        self.am1 = g.a - 1.0
        self.log_x = np.array(log_x, dtype=float)

    def step(self, k: int, j):
        lam = self.strategy.fraction(k, self.log_x)
        self.log_x = self.log_x + np.log1p(lam * self.am1[j])
        return lam


class Strategy:
    """A rule giving the betting fraction from the round and the capital.

    Rounds count down: ``k = n`` is the first move, ``k = 1`` the last.
    """

    def fraction(self, k: int, log_x):
        raise NotImplementedError

    def runner(self, g: Gamble, log_x):
        return _Runner(self, g, log_x)

    def horizon(self) -> float:
        return math.inf


@dataclass(frozen=True)
class FixedFraction(Strategy):
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")

    def fraction(self, k, log_x):
        return np.full(np.shape(log_x), self.lam)


class AllIn(FixedFraction):
    def __init__(self):
        super().__init__(1.0)


class Idle(FixedFraction):
    def __init__(self):
        super().__init__(0.0)


@dataclass(frozen=True, eq=False)
class PolicyDriven(Strategy):
    """Follows a dynamic-programming solution.

    By default the stored policy rows are interpolated in ``ln x``; with
    ``exact=True`` every decision is re-maximized (slow, small runs only).
    """

    solution: Solution
    exact: bool = False

    def fraction(self, k, log_x):
        if self.exact:
            return query_policy(self.solution, k, np.exp(log_x))
        return self.solution.policy_at(k, log_x)

    def horizon(self) -> float:
        return self.solution.n


class _BlendRunner:
    def __init__(self, strategy: "Blended", g: Gamble, log_x):
        self.t = strategy.t
        self.am1 = g.a - 1.0
        self.log_x = np.array(log_x, dtype=float)
        self.base0 = strategy.base0.runner(g, log_x)
        self.base1 = strategy.base1.runner(g, log_x)

    def step(self, k: int, j):
        # base capitals relative to the blended one, taken before they move
        r0 = np.exp(self.base0.log_x - self.log_x)
        r1 = np.exp(self.base1.log_x - self.log_x)
        lam0 = self.base0.step(k, j)
        lam1 = self.base1.step(k, j)
        lam = (1.0 - self.t) * r0 * lam0 + self.t * r1 * lam1
        lam = np.minimum(lam, 1.0)
        self.log_x = self.log_x + np.log1p(lam * self.am1[j])
        return lam


@dataclass(frozen=True, eq=False)
class Blended(Strategy):
    """Strategy whose final capital is ``(1 - t) X0 + t X1`` on every path."""

    base0: Strategy
    base1: Strategy
    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError("blend weight must lie in [0, 1]")

    def runner(self, g, log_x):
        return _BlendRunner(self, g, log_x)

    def fraction(self, k, log_x):
        raise TypeError("a blended strategy depends on its path; use runner()")

    def horizon(self) -> float:
        return min(self.base0.horizon(), self.base1.horizon())


def blend(base0: Strategy, base1: Strategy, t: float) -> Blended:
    return Blended(base0, base1, t)


# -- distributions -------------------------------------------------------------


def _tail_rows(log_values, cum_above):
    return [(math.exp(lv), float(c)) for lv, c in zip(log_values, cum_above)]


@dataclass(eq=False)
class ExactDistribution:
    """Binomial law of the final capital of a fixed-fraction bettor."""

    log_support: np.ndarray  # increasing when the win factor exceeds the loss factor
    log_weights: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def support(self) -> np.ndarray:
        return np.exp(self.log_support)

    def mean(self) -> float:
        return float(np.exp(logsumexp(self.log_weights + self.log_support)))

    def _sorted(self):
        order = np.argsort(self.log_support, kind="stable")
        return self.log_support[order], self.weights[order]

    def median(self) -> float:
        ls, w = self._sorted()
        cum = np.cumsum(w)
        return float(np.exp(ls[np.searchsorted(cum, 0.5)]))

    def tail(self, tau: float) -> float:
        """``P(x0 > tau)``."""
        above = self.log_support > math.log(tau)
        if not above.any():
            return 0.0
        return float(min(1.0, np.exp(logsumexp(self.log_weights[above]))))

    def cdf(self, log_x):
        ls, w = self._sorted()
        cum = np.cumsum(w)
        idx = np.searchsorted(ls, log_x, side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    def tail_table(self):
        ls, w = self._sorted()
        above = 1.0 - np.cumsum(w)
        return _tail_rows(ls, np.clip(above, 0.0, 1.0))


def exact_distribution(g: Gamble, lam: float, x_init: float, n: int) -> ExactDistribution:
    if g.num_outcomes != 2:
        raise ValueError("exact distribution needs a two-outcome gamble; use simulate()")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    k = np.arange(n + 1)
    l1, l2 = np.log1p(lam * (g.a - 1.0))
    log_support = math.log(x_init) + k * l1 + (n - k) * l2
    p1, p2 = g.probs
    log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    log_w = log_binom + k * math.log(p1) + (n - k) * math.log(p2)
    return ExactDistribution(log_support, log_w)


def exact_fixed_fraction(g: Gamble, lam: float, x_init: float, n: int, thresholds=()) -> dict:
    """Median, mean and ``P(x0 > tau)`` of a fixed-fraction bettor, exactly."""
    dist = exact_distribution(g, lam, x_init, n)
    return {
        "median": dist.median(),
        "mean": dist.mean(),
        "tail_probs": {float(t): dist.tail(t) for t in thresholds},
    }


@dataclass(eq=False)
class EmpiricalDistribution:
    """Sorted Monte Carlo sample of the final capital (kept as ``ln x0``)."""

    log_samples: np.ndarray
    seed: int
    n_paths: int = field(init=False)

    def __post_init__(self):
        self.log_samples = np.sort(np.asarray(self.log_samples, dtype=float))
        self.n_paths = len(self.log_samples)

    @property
    def samples(self) -> np.ndarray:
        return np.exp(self.log_samples)

    def median(self) -> float:
        return float(np.exp(np.median(self.log_samples)))

    def mean(self) -> float:
        return float(np.exp(logsumexp(self.log_samples)) / self.n_paths)

    def mean_se(self) -> float:
        return float(np.std(self.samples, ddof=1) / math.sqrt(self.n_paths))

    def tail(self, tau: float) -> float:
        idx = np.searchsorted(self.log_samples, math.log(tau), side="right")
        return (self.n_paths - idx) / self.n_paths

    def tail_se(self, tau: float) -> float:
        pr = self.tail(tau)
        return math.sqrt(pr * (1.0 - pr) / self.n_paths)

    def cdf(self, log_x):
        return np.searchsorted(self.log_samples, log_x, side="right") / self.n_paths

    def tail_table(self, points=None):
        """Rows ``(x0, P(final > x0))``; at the sample values unless ``points`` given."""
        if points is None:
            ls = np.unique(self.log_samples)
        else:
            ls = np.log(np.asarray(points, dtype=float))
        above = 1.0 - self.cdf(ls)
        return _tail_rows(ls, above)

    def histogram(self, bins="fd"):
        """Rows ``(bin_left, bin_right, density)``; bins are uniform in ``ln x0``.

        The density is per unit of ``ln x0``.
        """
        dens, edges = np.histogram(self.log_samples, bins=bins, density=True)
        return [(math.exp(a), math.exp(b), float(d)) for a, b, d in zip(edges[:-1], edges[1:], dens)]

    def summary(self, thresholds=(), scale: float = 1.0) -> dict:
        """Median, mean and tail probabilities; ``scale`` converts to dollars."""
        return {
            "n_paths": self.n_paths,
            "seed": self.seed,
            "median": self.median() * scale,
            "mean": self.mean() * scale,
            "mean_se": self.mean_se() * scale,
            "tail_probs": {float(t): self.tail(t / scale) for t in thresholds},
            "se": {float(t): self.tail_se(t / scale) for t in thresholds},
        }


# -- Monte Carlo ---------------------------------------------------------------


def _run_chunk(g, strategies, x_init, n, size, seed_seq):
    rng = np.random.Generator(np.random.Philox(seed_seq))
    cum = np.cumsum(g.p)[:-1]
    runners = [s.runner(g, np.full(size, math.log(x_init))) for s in strategies]
    for k in range(n, 0, -1):
        j = np.searchsorted(cum, rng.random(size), side="right")
        for r in runners:
            r.step(k, j)
    return [r.log_x for r in runners]


def simulate_common(
    g: Gamble,
    strategies: dict,
    x_init: float,
    n: int,
    n_paths: int,
    seed: int,
    threads: int | None = None,
) -> dict:
    """Sample several strategies on one shared stream of outcomes.

    Path ``i`` sees the same outcome sequence under every strategy, so the
    returned arrays (``ln x0`` per path, in path order) can be compared
    pathwise.  Paths are generated in fixed-size chunks, each with its own
    child stream of a Philox generator, so results depend only on ``seed``
    and not on ``threads``.
    """
    if x_init <= 0:
        raise ValueError("initial capital must be positive")
    for name, s in strategies.items():
        if s.horizon() < n:
            raise ValueError(f"strategy {name!r} covers {s.horizon()} rounds, need {n}")
    names = list(strategies)
    objs = [strategies[k] for k in names]
    sizes = [min(CHUNK, n_paths - i) for i in range(0, n_paths, CHUNK)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    threads = threads or default_threads()
    jobs = [(g, objs, x_init, n, sz, ss) for sz, ss in zip(sizes, seeds)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda a: _run_chunk(*a), jobs))
    else:
        parts = [_run_chunk(*a) for a in jobs]
    return {name: np.concatenate([p[i] for p in parts]) for i, name in enumerate(names)}


def simulate(
    g: Gamble,
    strategy: Strategy,
    x_init: float,
    n: int,
    n_paths: int,
    seed: int,
    threads: int | None = None,
) -> EmpiricalDistribution:
    logs = simulate_common(g, {"s": strategy}, x_init, n, n_paths, seed, threads)["s"]
    return EmpiricalDistribution(logs, seed)


@dataclass
class CompetitiveReport:
    mean_ratio: float
    mean_se: float
    tail_freq: dict
    tail_se: dict
    n_paths: int


def competitive_check(
    g: Gamble,
    optimal: Strategy,
    challenger: Strategy,
    x_init: float,
    n: int,
    n_paths: int,
    seed: int,
    A_list=(2.0,),
) -> CompetitiveReport:
    """Estimate ``E[w(challenger)/w(optimal)]`` and ``P[ratio >= A]``.

    ``w = 1 + x0`` is the total wealth including the unit external capital.
    For the optimal player both are bounded (1 and 1/A) in exact arithmetic.
    """
    logs = simulate_common(g, {"opt": optimal, "ch": challenger}, x_init, n, n_paths, seed)
    # log of (1 + x) for both, then the ratio
    lw_opt = np.logaddexp(0.0, logs["opt"])
    lw_ch = np.logaddexp(0.0, logs["ch"])
    ratio = np.exp(lw_ch - lw_opt)
    m = float(ratio.mean())
    se = float(ratio.std(ddof=1) / math.sqrt(n_paths))
    freq, fse = {}, {}
    for A in A_list:
        pr = float(np.mean(ratio >= A))
        freq[float(A)] = pr
        fse[float(A)] = math.sqrt(pr * (1 - pr) / n_paths)
    return CompetitiveReport(m, se, freq, fse, n_paths)
