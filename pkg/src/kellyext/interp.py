"""Shape-preserving C1 quadratic spline for concave, nondecreasing data.

Each cell ``[t_i, t_{i+1}]`` carries two quadratic pieces joined at an inner
knot where the derivative equals the chord slope of the cell.  The
derivative is then piecewise linear through ``s_i -> chord -> s_{i+1}``,
so concavity holds whenever the node slopes satisfy
``s_i >= chord_i >= s_{i+1}``.  Node slopes are taken from the three-point
(weighted chord) estimate, which lies between the adjacent chords.
"""

from __future__ import annotations

import numpy as np


def node_slopes(t: np.ndarray, z: np.ndarray, left: float, right: float) -> np.ndarray:
    """Derivative estimates at the nodes.

    ``left`` and ``right`` are the slopes of the virtual chords beyond the
    first and last node (the tails the spline is glued to).
    """
    h = np.diff(t)
    d = np.diff(z) / h
    s = np.empty_like(z)
    s[1:-1] = (h[1:] * d[:-1] + h[:-1] * d[1:]) / (h[:-1] + h[1:])
    s[0] = left
    s[-1] = right
    # keep every slope between its adjoining chords
    lo = np.minimum(np.r_[left, d], np.r_[d, right])
    hi = np.maximum(np.r_[left, d], np.r_[d, right])
    return np.clip(s, lo, hi)


class ConcaveQuadraticSpline:
    """Piecewise quadratic interpolant through ``(t, z)`` with slopes ``s``."""

    def __init__(self, t, z, s):
        self.t = np.asarray(t, dtype=float)
        self.z = np.asarray(z, dtype=float)
        self.s = np.asarray(s, dtype=float)
        h = np.diff(self.t)
        d = np.diff(self.z) / h
        s1, s2 = self.s[:-1], self.s[1:]
        ds = s1 - s2
        curved = np.abs(ds) > 1e-14 * (np.abs(s1) + np.abs(s2) + 1e-300)
        frac = np.where(curved, (d - s2) / np.where(curved, ds, 1.0), 0.5)
        frac = np.clip(frac, 0.0, 1.0)
        k = frac * h
        b = h - k
        c1 = np.where(k > 0, (d - s1) / (2 * np.where(k > 0, k, 1.0)), 0.0)
        c2 = np.where(b > 0, (s2 - d) / (2 * np.where(b > 0, b, 1.0)), 0.0)
        # straight cells (s1 == s2 == chord up to rounding): one quadratic piece
        k = np.where(curved, k, h)
        c1 = np.where(curved, c1, (s2 - s1) / (2 * h))
        zk = self.z[:-1] + 0.5 * (s1 + d) * k
        # one row per cell so evaluation needs a single gather
        self._table = np.column_stack([self.t[:-1], self.z[:-1], s1, c1, k, zk, d, c2])

    def evaluate(self, t, idx):
        """Evaluate at ``t`` lying in cells ``idx`` (no bounds handling)."""
        t0, z0, s1, c1, k, zk, d, c2 = self._table[idx].T
        u = t - t0
        w = u - k
        return np.where(u <= k, z0 + u * (s1 + c1 * u), zk + w * (d + c2 * w))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 2)
        return self.evaluate(t, idx)
