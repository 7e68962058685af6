"""Large-n approximations of the value function.

``WkbEvaluator`` propagates the terminal utility along characteristics,
lines of constant risk parameter in the ``(ln x, n)`` plane with slope
``-kappa'(alpha)``.  ``DiffusionEvaluator`` keeps kappa to second order,
which turns the recursion into a drift-diffusion equation with an
explicit error-function solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from .gamble import Gamble, RateSpectrum, diffusion_params

__all__ = [
    "alpha0",
    "alpha0_log",
    "log_f0_log",
    "WkbResult",
    "WkbEvaluator",
    "DiffusionEvaluator",
    "scaled_profile",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def alpha0_log(q):
    """Elasticity of ``ln(1 + x)`` at ``x = e**q``: ``x / ((1 + x) ln(1 + x))``."""
    q = np.asarray(q, dtype=float)
    x = np.exp(np.minimum(q, 700.0))
    small = q < -30.0
    big = q > 30.0
    mid = ~(small | big)
    out = np.empty_like(q)
    # series 1 - x/2 + ... is exact to rounding for x < 1e-13
    out[small] = 1.0 - 0.5 * x[small]
    xm = x[mid]
    out[mid] = xm / ((1.0 + xm) * np.log1p(xm))
    # ln(1 + x) = q + ln(1 + e^-q); x/(1+x) = 1/(1 + e^-q)
    eq = np.exp(-q[big])
    out[big] = 1.0 / ((1.0 + eq) * (q[big] + np.log1p(eq)))
    return out if out.ndim else float(out)


def alpha0(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("alpha0 needs x > 0")
    return alpha0_log(np.log(x))


def log_f0_log(q):
    """``ln ln(1 + e**q)`` without overflow or underflow."""
    q = np.asarray(q, dtype=float)
    out = np.where(q < -30.0, q, np.log(np.logaddexp(0.0, q)))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class WkbResult:
    value: float
    alpha: float
    x0: float
    log_value: float


class WkbEvaluator:
    """Characteristic shooting against a cached rate spectrum."""

    def __init__(self, spectrum: RateSpectrum):
        kp = spectrum.kappa_prime
        if np.any(np.diff(kp) <= 0):
            raise ValueError("kappa' must be strictly increasing for unique shooting")
        self.spectrum = spectrum

    @classmethod
    def for_gamble(cls, g: Gamble, num: int = 1001) -> "WkbEvaluator":
        return cls(RateSpectrum.build(g, num))

    @property
    def v0(self) -> float:
        return self.spectrum.v0

    @property
    def v1(self) -> float:
        return self.spectrum.v1

    def residual(self, alpha, q: float, n: float):
        """``alpha - alpha0(x e^{n kappa'(alpha)})``; increasing in alpha."""
        return alpha - alpha0_log(q + n * self.spectrum.kappa_prime_at(alpha))

    def shoot(self, x: float, n: float, tol: float = 1e-13) -> float:
        """Risk parameter of the characteristic through ``(ln x, n)``."""
        q = math.log(x)
        lo, hi = 0.0, 1.0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self.residual(mid, q, n) < 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def value(self, x: float, n: float) -> WkbResult:
        if x <= 0:
            raise ValueError("x must be positive")
        if n == 0:
            f = math.log1p(x)
            return WkbResult(f, float(alpha0(x)), x, math.log(f))
        sp = self.spectrum
        q = math.log(x)
        al = self.shoot(x, n)
        if al < 1e-9:
            al = 0.0
        elif al > 1.0 - 1e-9:
            al = 1.0
        kp = float(sp.kappa_prime_at(al))
        kap = float(sp.kappa_at(al))
        q0 = q + n * kp
        log_f = -n * (al * kp - kap) + float(log_f0_log(q0))
        return WkbResult(math.exp(log_f), al, math.exp(min(q0, 700.0)), log_f)

    def __call__(self, x: float, n: float) -> float:
        return self.value(x, n).value

    def log_value_maxv(self, x: float, n: float, tol: float = 1e-12) -> float:
        """``max_v [-n h(v) + ln f0(e^{n v} x)]`` by golden section on [v0, v1]."""
        if n == 0:
            return float(log_f0_log(math.log(x)))
        q = math.log(x)

        def obj(v):
            return -n * self.spectrum.h(v) + float(log_f0_log(q + n * v))

        lo, hi = self.v0, self.v1
        c = hi - _INVPHI * (hi - lo)
        d = lo + _INVPHI * (hi - lo)
        fc, fd = obj(c), obj(d)
        while hi - lo > tol * max(1.0, abs(hi)):
            if fc >= fd:
                hi, d, fd = d, c, fc
                c = hi - _INVPHI * (hi - lo)
                fc = obj(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + _INVPHI * (hi - lo)
                fd = obj(d)
        return max(fc, fd, obj(self.v0), obj(self.v1))

    def value_maxv(self, x: float, n: float) -> float:
        return math.exp(self.log_value_maxv(x, n))

    def step_approximation(self, x: float, n: float) -> float:
        """Pure rate ``exp(-n h(-ln x / n))`` inside the intermediate region."""
        v = -math.log(x) / n
        tol = 1e-12 * max(1.0, self.v1)
        if not self.v0 - tol <= v <= self.v1 + tol:
            raise ValueError(
                f"x={x} is outside the intermediate region [e^(-n v1), e^(-n v0)] for n={n}"
            )
        v = min(max(v, self.v0), self.v1)
        return math.exp(-n * self.spectrum.h(v))

    def characteristics(self, alphas, n_max: float, num: int = 101):
        """Rows ``(alpha, n, ln x)`` along lines of constant alpha.

        Each line ends at ``ln x0`` with ``alpha0(x0) = alpha`` on ``n = 0``.
        """
        rows = []
        for al in alphas:
            q0 = _invert_alpha0(al)
            kp = float(self.spectrum.kappa_prime_at(al))
            for n in np.linspace(0.0, n_max, num):
                rows.append((float(al), float(n), q0 - n * kp))
        return rows


def _invert_alpha0(alpha: float) -> float:
    """``ln x`` where ``alpha0(x) = alpha`` (alpha0 decreases from 1 to 0)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be strictly between 0 and 1")
    lo, hi = -60.0, 60.0
    while alpha0_log(hi) > alpha:
        hi *= 2.0
    while alpha0_log(lo) < alpha:
        lo *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if alpha0_log(mid) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scaled_profile(t):
    """``g(t) = t (1 + erf t)/2 + exp(-t^2)/(2 sqrt(pi))``.

    Written with the scaled complementary error function so that the
    cancellation for large negative ``t`` does not lose the tiny result.
    """
    t = np.asarray(t, dtype=float)
    pos = t >= 0
    out = np.empty_like(t)
    tp = t[pos]
    out[pos] = tp - 0.5 * tp * np.exp(-tp * tp) * erfcx(tp) + np.exp(-tp * tp) / (2 * math.sqrt(math.pi))
    tn = t[~pos]
    out[~pos] = 0.5 * np.exp(-tn * tn) * (tn * erfcx(-tn) + 1.0 / math.sqrt(math.pi))
    return out if out.ndim else float(out)


class DiffusionEvaluator:
    """Closed-form solution of ``dg/dn = v0 g' + D g''`` from ``g0(y) = y theta(y)``."""

    def __init__(self, v0: float, D: float):
        if D <= 0:
            raise ValueError("diffusion coefficient must be positive")
        self.v0 = float(v0)
        self.D = float(D)

    @classmethod
    def for_gamble(cls, g: Gamble) -> "DiffusionEvaluator":
        dp = diffusion_params(g)
        return cls(dp.v0, dp.D)

    def width(self, n: float) -> float:
        return math.sqrt(4.0 * self.D * n)

    def scaled_coordinate(self, x, n: float):
        return (np.log(x) + self.v0 * n) / self.width(n)

    def value(self, x, n: float):
        if n < 1:
            raise ValueError("diffusion value needs n >= 1")
        w = self.width(n)
        out = w * scaled_profile(self.scaled_coordinate(x, n))
        return out

    __call__ = value

    def kernel(self, n: float, y, z):
        """Green's function ``K_n(y, z)`` of the drift-diffusion equation."""
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        s = 4.0 * self.D * n
        return np.exp(-((y - z + self.v0 * n) ** 2) / s) / math.sqrt(math.pi * s)
