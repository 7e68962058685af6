"""Single-round analysis of a multiplicative gamble.

A gamble multiplies the staked part of the capital by ``gains[j]`` with
probability ``probs[j]``.  Betting a fraction ``lam`` of the capital turns
the gain factors into effective factors ``1 + lam*(a_j - 1)``.

This module covers isoelastic utilities and their optimal fractions, the
power-law growth rate ``kappa(alpha)``, the rate functions ``s(v, lam)`` and
``h(v)`` and the drift/diffusion parameters of the Kelly bet.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import brentq
from scipy.special import exprel

__all__ = [
    "Gamble",
    "Verdict",
    "GambleClass",
    "DiffusionParams",
    "RateSpectrum",
    "EXAMPLE_GAMBLE",
    "mean_gain",
    "isoelastic_utility",
    "expected_utility",
    "utility_slope",
    "classify",
    "optimal_fraction",
    "attractiveness_threshold",
    "growth_rate_r",
    "kappa",
    "kappa_prime",
    "entropy_rate_s",
    "failure_rate_h",
    "drift_and_diffusion",
    "diffusion_params",
]

_LAMBDA_TOL = 1e-13


@dataclass(frozen=True)
class Gamble:
    """One round of a game: gain factors and their probabilities."""

    gains: tuple[float, ...]
    probs: tuple[float, ...]

    def __init__(self, gains: Sequence[float], probs: Sequence[float]):
        gains = tuple(float(a) for a in gains)
        probs = tuple(float(p) for p in probs)
        if len(gains) != len(probs):
            raise ValueError("gains and probs must have the same length")
        if len(gains) == 0:
            raise ValueError("a gamble needs at least one outcome")
        if any(not math.isfinite(a) or a <= 0 for a in gains):
            raise ValueError(f"gain factors must be positive, got {gains}")
        if any(not (0 < p <= 1) for p in probs):
            raise ValueError(f"probabilities must lie in (0, 1], got {probs}")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1, got {math.fsum(probs)!r}")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "probs", probs)

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self.gains)

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.probs)

    @property
    def num_outcomes(self) -> int:
        return len(self.gains)

    @property
    def mean_gain(self) -> float:
        return math.fsum(p * a for p, a in zip(self.probs, self.gains))

    @property
    def is_favorable(self) -> bool:
        return self.mean_gain > 1.0

    def effective_gains(self, lam: float) -> np.ndarray:
        """Gain factors of the whole capital when a fraction ``lam`` is staked."""
        return 1.0 + lam * (self.a - 1.0)

    def to_dict(self) -> dict:
        return {"gains": list(self.gains), "probs": list(self.probs)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Gamble":
        return cls(d["gains"], d["probs"])

    @classmethod
    def from_json(cls, text: str) -> "Gamble":
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        """Short stable hash, used to key checkpoints."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


#: The coin flip of the introduction: +30% or -25% of the stake.
EXAMPLE_GAMBLE = Gamble([1.3, 0.75], [0.5, 0.5])


class Verdict(enum.Enum):
    UNFAVORABLE = "unfavorable"
    ATTRACTIVE = "attractive"
    INTERMEDIATE = "intermediate"


@dataclass(frozen=True)
class GambleClass:
    verdict: Verdict
    lambda_star: float


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha <= 1.0:
        raise ValueError(f"risk parameter must be <= 1, got {alpha}")
    return alpha


def mean_gain(g: Gamble) -> float:
    return g.mean_gain


def isoelastic_utility(x, alpha: float):
    """``(x**alpha - 1)/alpha``, or ``ln x`` at ``alpha == 0``.

    Works elementwise on arrays.  Near ``alpha = 0`` the expression is
    evaluated as ``ln x * exprel(alpha*ln x)`` so it stays continuous, even
    for subnormal ``alpha``.
    """
    alpha = _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("isoelastic utility is defined for x > 0 only")
    lx = np.log(x)
    out = lx * exprel(alpha * lx)
    return out if out.ndim else float(out)


def expected_utility(g: Gamble, alpha: float, lam: float) -> float:
    """``U_alpha(lam)``: expected utility of betting ``lam`` with unit wealth."""
    return float(np.dot(g.p, isoelastic_utility(g.effective_gains(lam), alpha)))


def utility_slope(g: Gamble, alpha: float, lam):
    """Derivative of ``U_alpha`` in ``lam`` (unit initial wealth).

    Monotonically decreasing in ``lam``; accepts array ``lam``.
    """
    lam = np.asarray(lam, dtype=float)
    a, p = g.a, g.p
    eff = 1.0 + lam[..., None] * (a - 1.0)
    out = np.sum(p * (a - 1.0) * eff ** (alpha - 1.0), axis=-1)
    return out if out.ndim else float(out)


def _verdict(g: Gamble, alpha: float) -> Verdict:
    a, p = g.a, g.p
    if np.dot(p, a - 1.0) <= 0:
        return Verdict.UNFAVORABLE
    if np.dot(p, a**alpha - a ** (alpha - 1.0)) >= 0:
        return Verdict.ATTRACTIVE
    return Verdict.INTERMEDIATE


def _interior_fractions(g: Gamble, alphas: np.ndarray) -> np.ndarray:
    """Bisection on the decreasing derivative, vectorized over ``alphas``.

    Assumes every alpha is in the intermediate case (U'(0) > 0 > U'(1)).
    """
    a, p = g.a, g.p
    lo = np.zeros_like(alphas)
    hi = np.ones_like(alphas)
    pa = p * (a - 1.0)
    expo = (alphas - 1.0)[:, None]
    while np.max(hi - lo) > _LAMBDA_TOL:
        mid = 0.5 * (lo + hi)
        slope = np.sum(pa * (1.0 + mid[:, None] * (a - 1.0)) ** expo, axis=1)
        up = slope > 0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    return 0.5 * (lo + hi)


def _fractions(g: Gamble, alphas: np.ndarray) -> np.ndarray:
    alphas = np.asarray(alphas, dtype=float)
    out = np.empty_like(alphas)
    verdicts = [_verdict(g, al) for al in alphas]
    inter = np.array([v is Verdict.INTERMEDIATE for v in verdicts], dtype=bool)
    out[:] = [1.0 if v is Verdict.ATTRACTIVE else 0.0 for v in verdicts]
    if inter.any():
        out[inter] = _interior_fractions(g, alphas[inter])
    return out


def optimal_fraction(g: Gamble, alpha: float) -> float:
    """Fraction in [0, 1] that maximizes the expected isoelastic utility."""
    alpha = _check_alpha(alpha)
    return float(_fractions(g, np.array([alpha]))[0])


def classify(g: Gamble, alpha: float) -> GambleClass:
    alpha = _check_alpha(alpha)
    v = _verdict(g, alpha)
    return GambleClass(v, optimal_fraction(g, alpha))


def attractiveness_threshold(g: Gamble, tol: float = 1e-12) -> float:
    """Smallest risk parameter at which staking everything is optimal.

    Returns 0.0 if the gamble is already attractive at ``alpha = 0`` and
    ``math.inf`` for an unfavorable gamble (attractive for no ``alpha <= 1``).
    The attractiveness indicator ``sum p (a^alpha - a^(alpha-1))`` is
    nondecreasing in alpha, so plain bisection is safe.
    """
    a, p = g.a, g.p
    if np.dot(p, a - 1.0) <= 0:
        return math.inf

    def indicator(al: float) -> float:
        return float(np.dot(p, a**al - a ** (al - 1.0)))

    if indicator(0.0) >= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if indicator(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def growth_rate_r(g: Gamble, alpha: float, lam: float) -> float:
    """``ln sum_j p_j (1 + lam (a_j - 1))**alpha``."""
    eff = g.effective_gains(lam)
    if np.any(eff <= 0):
        raise ValueError("effective gain factor must stay positive")
    if alpha == 0:
        return 0.0
    return float(np.log(np.dot(g.p, eff**alpha)))


def _tilted_mean_log(g: Gamble, alpha: float, lam: float) -> float:
    # d r / d alpha: mean of ln(eff) under the tilt p * eff**alpha
    leff = np.log(g.effective_gains(lam))
    w = g.p * np.exp(alpha * (leff - leff.max()))
    return float(np.dot(w, leff) / w.sum())


def kappa(g: Gamble, alpha: float) -> tuple[float, float]:
    """Growth rate ``kappa(alpha) = max_lam r(alpha, lam)`` and its maximizer.

    For ``alpha`` in (0, 1] the maximizer of ``r`` coincides with the
    isoelastic optimal fraction; at ``alpha = 0`` it is the Kelly fraction.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("kappa is defined for alpha in [0, 1]")
    lam = optimal_fraction(g, alpha)
    return growth_rate_r(g, alpha, lam), lam


def kappa_prime(g: Gamble, alpha: float) -> float:
    _, lam = kappa(g, alpha)
    return _tilted_mean_log(g, alpha, lam)


def entropy_rate_s(g: Gamble, v: float, lam: float) -> float:
    """Minimal relative entropy ``KL(q||p)`` subject to ``E_q[ln eff] = v``.

    Two-outcome gambles are solved in closed form (the constraint pins
    ``q``).  For more outcomes the dual ``sup_alpha (alpha v - r(alpha, lam))``
    is used.  Returns ``inf`` when ``v`` is not attainable.
    """
    leff = np.log(g.effective_gains(lam))
    p = g.p
    lmin, lmax = float(leff.min()), float(leff.max())
    span = lmax - lmin
    slack = 1e-14 * max(1.0, abs(lmin), abs(lmax))
    if v < lmin - slack or v > lmax + slack:
        return math.inf
    if span <= slack:
        return 0.0
    if g.num_outcomes == 2:
        q1 = (v - leff[1]) / (leff[0] - leff[1])
        q1 = min(max(q1, 0.0), 1.0)
        q = np.array([q1, 1.0 - q1])
        nz = q > 0
        return float(np.sum(q[nz] * np.log(q[nz] / p[nz])))
    return _entropy_dual(leff, p, v, lmin, lmax, slack)


def _entropy_dual(leff, p, v, lmin, lmax, slack) -> float:
    if v >= lmax - slack:
        return float(-np.log(p[leff >= lmax - slack].sum()))
    if v <= lmin + slack:
        return float(-np.log(p[leff <= lmin + slack].sum()))

    def log_mgf(al):
        z = al * leff
        m = z.max()
        return m + np.log(np.dot(p, np.exp(z - m)))

    def tilted_mean(al):
        z = al * leff
        w = p * np.exp(z - z.max())
        return np.dot(w, leff) / w.sum() - v

    lo, hi = -1.0, 1.0
    while tilted_mean(lo) > 0:
        lo *= 2.0
    while tilted_mean(hi) < 0:
        hi *= 2.0
    al = brentq(tilted_mean, lo, hi, xtol=1e-14, rtol=1e-14)
    return float(al * v - log_mgf(al))


def failure_rate_h(g: Gamble, v: float) -> tuple[float, float]:
    """Legendre transform of kappa at slope ``v``.

    Returns ``(h, alpha)`` where ``kappa'(alpha) = v``.  Only defined for
    ``v0 <= v <= v1`` (the slopes of kappa at 0 and 1).
    """
    v0 = kappa_prime(g, 0.0)
    v1 = kappa_prime(g, 1.0)
    tol = 1e-12 * max(1.0, abs(v1))
    if v < v0 - tol or v > v1 + tol:
        raise ValueError(f"v={v} outside [{v0}, {v1}]")
    if v <= v0:
        al = 0.0
    elif v >= v1:
        al = 1.0
    else:
        lo, hi = 0.0, 1.0
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            if kappa_prime(g, mid) < v:
                lo = mid
            else:
                hi = mid
        al = 0.5 * (lo + hi)
    k, _ = kappa(g, al)
    return al * v - k, al


def drift_and_diffusion(g: Gamble, lam) -> tuple:
    """Mean and half-variance of the per-round log growth at fraction ``lam``."""
    lam = np.asarray(lam, dtype=float)
    leff = np.log(1.0 + lam[..., None] * (g.a - 1.0))
    m1 = np.sum(g.p * leff, axis=-1)
    m2 = np.sum(g.p * leff**2, axis=-1)
    return m1, 0.5 * (m2 - m1**2)


@dataclass(frozen=True)
class DiffusionParams:
    v0: float
    D: float
    lambda_kelly: float


def diffusion_params(g: Gamble) -> DiffusionParams:
    lam = optimal_fraction(g, 0.0)
    v0, D = drift_and_diffusion(g, lam)
    return DiffusionParams(float(v0), max(float(D), 0.0), lam)


@dataclass(frozen=True, eq=False)
class RateSpectrum:
    """Tabulated ``lambda*(alpha)``, ``kappa(alpha)``, ``kappa'(alpha)`` on [0, 1].

    Interpolants: cubic Hermite for kappa (using kappa' as the slope data),
    PCHIP for kappa' so monotonicity survives interpolation.
    """

    gamble: Gamble
    alpha: np.ndarray
    lambda_star: np.ndarray
    kappa: np.ndarray
    kappa_prime: np.ndarray
    D: float

    @classmethod
    def build(cls, g: Gamble, num: int = 1001) -> "RateSpectrum":
        if not g.is_favorable:
            raise ValueError("rate spectrum needs a favorable gamble")
        alphas = np.linspace(0.0, 1.0, num)
        lams = _fractions(g, alphas)
        eff = 1.0 + lams[:, None] * (g.a - 1.0)
        leff = np.log(eff)
        w = g.p * np.exp(alphas[:, None] * leff)
        kap = np.log(w.sum(axis=1))
        kap[0] = 0.0
        kp = (w * leff).sum(axis=1) / w.sum(axis=1)
        D = diffusion_params(g).D
        return cls(g, alphas, lams, kap, kp, D)

    @property
    def v0(self) -> float:
        return float(self.kappa_prime[0])

    @property
    def v1(self) -> float:
        return float(self.kappa_prime[-1])

    def __post_init__(self):
        object.__setattr__(
            self, "_kap", CubicHermiteSpline(self.alpha, self.kappa, self.kappa_prime)
        )
        object.__setattr__(self, "_kp", PchipInterpolator(self.alpha, self.kappa_prime))

    def kappa_at(self, alpha):
        return self._kap(np.clip(alpha, 0.0, 1.0))

    def kappa_prime_at(self, alpha):
        return self._kp(np.clip(alpha, 0.0, 1.0))

    def alpha_of_v(self, v):
        """Inverse of kappa' (bisection on the monotone interpolant)."""
        v = np.asarray(v, dtype=float)
        lo = np.zeros_like(v)
        hi = np.ones_like(v)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = self._kp(mid) < v
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        out = np.where(v <= self.v0, 0.0, np.where(v >= self.v1, 1.0, out))
        return out if out.ndim else float(out)

    def h(self, v):
        """Failure rate ``h(v)`` for ``v`` in ``[v0, v1]``."""
        v = np.asarray(v, dtype=float)
        tol = 1e-12 * max(1.0, abs(self.v1))
        if np.any(v < self.v0 - tol) or np.any(v > self.v1 + tol):
            raise ValueError("h(v) is only defined for v0 <= v <= v1")
        al = np.asarray(self.alpha_of_v(v))
        out = al * v - self.kappa_at(al)
        return out if out.ndim else float(out)

    def rows(self):
        """``(alpha, lambda_star, kappa, kappa_prime)`` tuples for CSV export."""
        return zip(self.alpha, self.lambda_star, self.kappa, self.kappa_prime)
