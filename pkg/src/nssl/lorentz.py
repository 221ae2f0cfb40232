"""Distribution functions and Lorentz norms of piecewise-constant data.

A discretised function is a set of values with non-negative measures
(cell volumes, covered ball fractions or time-step weights).  Its
distribution ``m(σ) = |{|f| > σ}|`` is a right-continuous step function
and every Lorentz quantity below is evaluated on it in closed form.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .field import BallSpec, DomainError, Grid, ParameterError, ball_values


@dataclass(frozen=True)
class DistributionCurve:
    """Breakpoints ``σ_k`` (strictly increasing, ``σ_0 = 0``) and ``m_k = |{|f| > σ_k}|``."""

    sigma: np.ndarray
    measure: np.ndarray
    total_measure: float

    def __call__(self, s):
        k = np.searchsorted(self.sigma, s, side="right") - 1
        return self.measure[np.clip(k, 0, None)]

    @property
    def max_value(self) -> float:
        return float(self.sigma[-1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sigma", "measure"])
            for s, m in zip(self.sigma, self.measure):
                w.writerow([repr(float(s)), repr(float(m))])


def distribution(values, weights) -> DistributionCurve:
    """Exact distribution curve of ``|values|`` under the measures ``weights``."""
    a = np.abs(np.asarray(values, dtype=float)).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if a.shape != w.shape:
        raise ValueError("values and weights differ in size")
    if not np.all(np.isfinite(a)):
        raise ValueError("values must be finite")
    keep = w > 0
    a, w = a[keep], w[keep]
    total = float(w.sum())
    if a.size == 0 or total <= 0:
        raise DomainError("distribution of an empty region")
    levels, inv = np.unique(a, return_inverse=True)
    mass = np.bincount(inv, weights=w)
    # measure strictly above each level
    above = np.concatenate([np.cumsum(mass[::-1])[::-1][1:], [0.0]])
    if levels[0] > 0:
        levels = np.concatenate([[0.0], levels])
        above = np.concatenate([[total], above])
    return DistributionCurve(levels, above, total)


def ball_distribution(values: np.ndarray, grid: Grid, ball: BallSpec) -> DistributionCurve:
    v, w = ball_values(values, grid, ball)
    return distribution(v, w)


def weak_norm(curve: DistributionCurve, p: float) -> float:
    """``sup_σ σ m(σ)^{1/p}``; ``p = inf`` gives the essential supremum.

    On ``[σ_{k-1}, σ_k)`` the measure is ``m_{k-1}``, so the supremum is
    ``max_k σ_k m_{k-1}^{1/p}``, approached from below each jump.
    """
    if not p >= 1:
        raise ParameterError(f"weak norm exponent must be >= 1, got {p}")
    if curve.sigma.size < 2:
        return 0.0
    if np.isinf(p):
        return curve.max_value
    return float(np.max(curve.sigma[1:] * curve.measure[:-1] ** (1.0 / p)))


def lorentz_rs_norm(curve: DistributionCurve, r: float, s: float) -> float:
    """``(r ∫_0^∞ σ^{s-1} m(σ)^{s/r} dσ)^{1/s}``, integrated piecewise.

    The factor ``r`` makes ``L^{r,r}`` coincide with ``L^r``.
    """
    if not r >= 1 or np.isinf(r):
        raise ParameterError(f"r must lie in [1, inf), got {r}")
    if not s >= 1 or np.isinf(s):
        raise ParameterError(f"s must lie in [1, inf), got {s}")
    if curve.sigma.size < 2:
        return 0.0
    sig = curve.sigma
    pieces = curve.measure[:-1] ** (s / r) * (sig[1:] ** s - sig[:-1] ** s) / s
    return float((r * pieces.sum()) ** (1.0 / s))


def lp_norm(values, weights, p: float) -> float:
    a = np.abs(np.asarray(values, dtype=float)).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if np.isinf(p):
        return float(a[w > 0].max())
    return float(np.dot(w, a ** p) ** (1.0 / p))


def weak_norm_ball(values: np.ndarray, grid: Grid, ball: BallSpec, p: float) -> float:
    return weak_norm(ball_distribution(values, grid, ball), p)


def conjugate_time_exponent(p: float) -> float:
    """``q`` with ``1/q + 1/p = 1/2``."""
    if not p >= 2:
        raise ParameterError(f"p must be >= 2, got {p}")
    if p == 2:
        return math.inf
    if np.isinf(p):
        return 2.0
    return 2.0 * p / (p - 2.0)


class TimeSeries:
    """Non-negative samples on sorted times; each sample owns its Voronoi interval.

    The intervals are clipped to ``[lower, upper]`` (default: first and last
    sample time), so the weights sum to the window length.
    """

    def __init__(self, times, values, lower: Optional[float] = None,
                 upper: Optional[float] = None):
        t = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ValueError("times and values must be matching 1-d arrays")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("values must be finite and non-negative")
        self.times, self.values = t, v
        self.lower = float(t[0] if lower is None else lower)
        self.upper = float(t[-1] if upper is None else upper)
        if self.upper < self.lower:
            raise ValueError("empty time window")

    @property
    def weights(self) -> np.ndarray:
        t = self.times
        mids = (t[1:] + t[:-1]) / 2
        left = np.clip(np.concatenate([[self.lower], mids]), self.lower, self.upper)
        right = np.clip(np.concatenate([mids, [self.upper]]), self.lower, self.upper)
        return right - left

    def distribution(self) -> DistributionCurve:
        return distribution(self.values, self.weights)


REGIMES = ("subcritical_2.8", "mid_2.12", "high_2.16")


def regime_for(p: float) -> str:
    if 2 <= p < 3:
        return REGIMES[0]
    if 3 <= p <= 6:
        return REGIMES[1]
    if p > 6:
        return REGIMES[2]
    raise ParameterError(f"p must be >= 2, got {p}")


def tail_exponent(p: float, regime: str) -> float:
    """Power of ``f_p`` integrated in time by each regime."""
    if regime == REGIMES[0]:
        return 3 * p / (2 * p - 3)
    if regime == REGIMES[1]:
        return p / (p - 2)
    return 1.5


def tail_split_bound(p: float, r: float, M: float, regime: str) -> float:
    """Closed-form bound on ``∫_{t0-r²}^{t0} f^a dt`` when ``||f||_{L^{q,∞}} = M``.

    subcritical (2 <= p < 3): ``(4 - 6/p) r^{p/(2p-3)} M^{3p/(2p-3)}`` (``r² M⁶`` at p = 2)
    mid (3 <= p <= 6):        ``2 r M^{p/(p-2)}``
    high (6 < p <= inf):      ``(1 + 3(p-2)/(p+6)) r^{2-(3p-6)/(2p)} M^{3/2}``
    """
    if regime not in REGIMES:
        raise ParameterError(f"unknown regime {regime!r}")
    if not r > 0 or not M >= 0:
        raise ParameterError("need r > 0 and M >= 0")
    if regime == REGIMES[0]:
        if not 2 <= p < 3:
            raise ParameterError(f"regime {regime} needs 2 <= p < 3, got {p}")
        if p == 2:
            return r ** 2 * M ** 6
        return (4 - 6 / p) * r ** (p / (2 * p - 3)) * M ** (3 * p / (2 * p - 3))
    if regime == REGIMES[1]:
        if not 3 <= p <= 6:
            raise ParameterError(f"regime {regime} needs 3 <= p <= 6, got {p}")
        return 2 * r * M ** (p / (p - 2))
    if not p > 6:
        raise ParameterError(f"regime {regime} needs 6 < p <= inf, got {p}")
    if np.isinf(p):
        return 4.0 * r ** 0.5 * M ** 1.5
    return (1 + 3 * (p - 2) / (p + 6)) * r ** (2 - (3 * p - 6) / (2 * p)) * M ** 1.5
