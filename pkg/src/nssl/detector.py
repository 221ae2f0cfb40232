"""Decision procedures: ε-regularity verdicts and concentration-rate tests.

The absolute constants of the regularity theory are not constructive, so
every threshold here is a configuration value reported in each verdict.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .field import (BallSpec, CylinderSpec, DomainError, ParameterError, SampledField,
                    ball_values)
from .invariants import InvariantReport, invariants
from .lorentz import (TimeSeries, ball_distribution, conjugate_time_exponent, weak_norm)
from .morrey import C_EMB, morrey_bracket, morrey_sup, resolution_floor

DEFAULT_DELTA = 1e-2
DEFAULT_EPS_STAR = 1e-3
DEFAULT_DELTA_STAR = DEFAULT_DELTA / C_EMB
# calibrate_c_cal on Beltrami and random divergence-free fields (spectral
# pressure, 32³) gives max lhs/rhs(C=1) ≈ 0.03, so the floor of 1 already holds
DEFAULT_C_CAL = 1.0

CRITERIA = ("thm11_oscillation", "thm11_plain", "wolf", "concentration_p3",
            "concentration_general")
VERDICTS = ("regular_indicated", "inconclusive", "concentration_detected")


@dataclass
class DetectionVerdict:
    z0: tuple
    criterion: str
    measured: float
    threshold: float
    verdict: str
    trace: list = field(default_factory=list)
    series: Optional[list] = None

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["z0"] = [self.z0[0], list(self.z0[1])]
        d["trace"] = [[k, _jsonable(v)] for k, v in self.trace]
        d.pop("series")
        d["measured"] = _jsonable(self.measured)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _jsonable(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, np.integer):
        return int(v)
    return v


def c_decay_rhs(p: float, r: float, rho: float, report: InvariantReport, M: float,
                c_cal: float) -> float:
    """Right-hand side of the C(u, r) decay estimate for the regime selected by ``p``.

    ``2 <= p < 3``:  ``C(r/ρ)C(ρ) + C(ρ/r)² B^{(9-3p)/(6-p)} M^{3p/(6-p)}``
    ``3 <= p <= 6``: ``C(r/ρ)C(ρ) + C(ρ/r) A^{(p-3)/(p-2)} M^{p/(p-2)}``
    ``p > 6``:       ``C(r/ρ)C(ρ) + C(ρ/r)^{3/2} A^{3/4} M^{3/2}``
    """
    if not p >= 2:
        raise ParameterError(f"p must be >= 2, got {p}")
    if not 0 < r < rho:
        raise ParameterError("need 0 < r < rho")
    head = c_cal * (r / rho) * report.C
    if p < 3:
        tail = (rho / r) ** 2 * report.B ** ((9 - 3 * p) / (6 - p)) * M ** (3 * p / (6 - p))
    elif p <= 6:
        tail = (rho / r) * report.A ** ((p - 3) / (p - 2)) * M ** (p / (p - 2))
    else:
        tail = (rho / r) ** 1.5 * report.A ** 0.75 * M ** 1.5
    return head + c_cal * tail


@dataclass
class IterationState:
    theta: float
    c_cal: float
    G_sequence: list
    forcing: float
    bound_holds: bool
    first_k_within: Optional[int]


def iteration_theta(c_cal: float) -> float:
    return min(0.5, c_cal ** -7)


def iterate_decay(G0: float, c_cal: float, forcing: float, k_max: int = 64) -> IterationState:
    """Run ``G_k = θ G_{k-1} + forcing`` with ``θ = min{1/2, C^{-7}}``.

    The recursion and the check ``G_k <= θ^k G_0 + forcing/(1-θ)`` run in
    exact rational arithmetic on the floating-point inputs.
    """
    if not (G0 >= 0 and c_cal >= 1 and forcing >= 0 and k_max >= 0):
        raise ParameterError("need G0 >= 0, c_cal >= 1, forcing >= 0, k_max >= 0")
    theta = Fraction(iteration_theta(c_cal))
    g0, f = Fraction(G0), Fraction(forcing)
    fixed = f / (1 - theta)
    G = [g0]
    for _ in range(k_max):
        G.append(theta * G[-1] + f)
    holds = all(g <= theta ** k * g0 + fixed for k, g in enumerate(G))
    target = 2 * fixed
    first = next((k for k, g in enumerate(G) if g <= target), None)
    return IterationState(float(theta), float(c_cal), [float(g) for g in G], float(forcing),
                          holds, first)


def morrey_time_series(fld: SampledField, z0, r0: float, p: float,
                       oscillation: bool) -> TimeSeries:
    t0, x0 = z0
    lo = t0 - r0 ** 2
    if lo < fld.t_range[0] - 1e-9 * fld.dt or t0 > fld.t_range[1] + 1e-9 * fld.dt:
        raise DomainError(f"field does not cover the time window [{lo}, {t0}]")
    idx = fld.indices_between(lo, t0)
    if idx.size < 2:
        raise DomainError("fewer than 2 samples in the time window")
    vals = [morrey_sup(fld, fld.times[k], x0, r0, p, oscillation).supremum for k in idx]
    return TimeSeries(fld.times[idx], vals, lo, t0)


def wolf_passes(C_value: float, eps_star: float) -> bool:
    """Wolf's test with ``q = p = 3``: ``r^{-2/3} ||u||_{L³(Q_r)} = C(u, r)^{1/3} <= ε*``."""
    return C_value ** (1.0 / 3.0) <= eps_star


def epsilon_regularity(fld: SampledField, z0, p: float, variant: str = "plain",
                       delta: float = DEFAULT_DELTA, eps_star: float = DEFAULT_EPS_STAR,
                       r0: float = 1.0) -> DetectionVerdict:
    """Smallness of the time-weak Morrey norm followed by a dyadic C(u, r) descent.

    ``regular_indicated`` only if the Morrey-Lorentz norm is ``<= delta`` and
    some resolvable scale passes Wolf's test; otherwise ``inconclusive``.
    """
    if variant not in ("plain", "oscillation"):
        raise ParameterError("variant must be 'plain' or 'oscillation'")
    if not (delta > 0 and eps_star > 0):
        raise ParameterError("thresholds must be positive")
    t0, x0 = float(z0[0]), tuple(float(v) for v in z0[1])
    crit = "thm11_oscillation" if variant == "oscillation" else "thm11_plain"
    q = conjugate_time_exponent(p)
    series = morrey_time_series(fld, (t0, x0), r0, p, variant == "oscillation")
    measured = weak_norm(series.distribution(), q)
    trace = [("p", float(p)), ("q", q), ("r0", r0), ("delta", delta), ("eps_star", eps_star),
             ("lorentz_morrey_norm", measured)]
    out = DetectionVerdict((t0, x0), crit, measured, delta, "inconclusive", trace,
                           list(zip(series.times.tolist(), series.values.tolist())))
    if not measured <= delta:
        trace.append(("stop", "norm_above_delta"))
        return out
    floor = resolution_floor(fld)
    r = r0
    while r >= floor * (1 - 1e-12):
        try:
            rep = invariants(fld, CylinderSpec(t0, x0, r))
        except DomainError:
            trace.append(("stop", "time_resolution_floor"))
            break
        trace.append((f"C(u,{r:.6g})", rep.C))
        if wolf_passes(rep.C, eps_star):
            trace.append(("r_star", r))
            out.verdict = "regular_indicated"
            return out
        r /= 2
    else:
        trace.append(("stop", "space_resolution_floor"))
    return out


def wolf_criterion(fld: SampledField, z0, r: float,
                   eps_star: float = DEFAULT_EPS_STAR) -> DetectionVerdict:
    t0, x0 = float(z0[0]), tuple(float(v) for v in z0[1])
    rep = invariants(fld, CylinderSpec(t0, x0, r))
    measured = rep.C ** (1.0 / 3.0)
    verdict = "regular_indicated" if measured <= eps_star else "inconclusive"
    trace = [("r", r), ("C", rep.C), ("samples", rep.samples_used)]
    return DetectionVerdict((t0, x0), "wolf", measured, eps_star, verdict, trace)


def _approach_indices(fld: SampledField, t0: float) -> np.ndarray:
    t = fld.times
    idx = np.nonzero(t < t0 - 1e-12)[0]
    if idx.size < 4:
        raise DomainError(f"need at least 4 samples before t0={t0}, have {idx.size}")
    return idx


def _limsup_proxy(values: np.ndarray) -> float:
    n = values.size
    return float(np.max(values[n - max(1, math.ceil(n / 4)):]))


def _growth(values: np.ndarray) -> float:
    """Mean of the last quarter over the mean of the first quarter."""
    q = max(1, values.size // 4)
    early, late = float(np.mean(values[:q])), float(np.mean(values[-q:]))
    if early <= 0:
        return math.inf if late > 0 else 1.0
    return late / early


def _concentration_verdict(proxy: float, growth: float, delta_star: float) -> str:
    # below δ* is conclusive; above it only a quantity still growing toward
    # t0 counts as concentration, a bounded or decaying one is inconclusive
    if proxy <= delta_star:
        return "regular_indicated"
    return "concentration_detected" if growth > 1.0 else "inconclusive"


def concentration_rate(fld: SampledField, z0, r: float, p: float, nu: float,
                       delta_star: float = DEFAULT_DELTA_STAR) -> DetectionVerdict:
    """``(t0 - t)^{1/μ} r^{2/ν - 3/p} ||u(t)||_{L^{p,∞}(B_r)}`` with ``1/μ = 1/2 - 1/ν``."""
    if not 3 < p <= math.inf:
        raise ParameterError(f"p must lie in (3, inf], got {p}")
    nu_max = math.inf if math.isinf(p) else 2 * p / 3
    if not 2 <= nu <= nu_max:
        raise ParameterError(f"nu must lie in [2, {nu_max}], got {nu}")
    if not delta_star > 0:
        raise ParameterError("delta_star must be positive")
    t0, x0 = float(z0[0]), tuple(float(v) for v in z0[1])
    inv_mu = 0.5 - 1.0 / nu
    space_pow = 2.0 / nu - (0.0 if math.isinf(p) else 3.0 / p)
    idx = _approach_indices(fld, t0)
    ball = BallSpec(x0, r)
    times = fld.times[idx]
    vals = np.array([(t0 - t) ** inv_mu * r ** space_pow
                     * weak_norm(ball_distribution(fld.speed(k), fld.grid, ball), p)
                     for t, k in zip(times, idx)])
    proxy = _limsup_proxy(vals)
    growth = _growth(vals)
    verdict = _concentration_verdict(proxy, growth, delta_star)
    trace = [("p", p), ("nu", nu), ("inv_mu", inv_mu), ("r", r), ("samples", int(idx.size)),
             ("last_t", float(times[-1])), ("growth", growth)]
    return DetectionVerdict((t0, x0), "concentration_general", proxy, delta_star, verdict,
                            trace, list(zip(times.tolist(), vals.tolist())))


def oscillation_weak_norm(vec: np.ndarray, grid, ball: BallSpec, p: float = 3.0) -> float:
    """``||u - u_{x0,r}||_{L^{p,∞}(B_r)}`` of the vector field ``vec``."""
    v, w = ball_values(vec, grid, ball)
    v = v - (v @ w / w.sum())[:, None]
    from .lorentz import distribution
    return weak_norm(distribution(np.sqrt(np.sum(v * v, axis=0)), w), p)


def concentration_p3(fld: SampledField, z0, r: float,
                     delta_star: float = DEFAULT_DELTA_STAR) -> DetectionVerdict:
    """Running ``||u(t) - u(t)_{x0,r}||_{L^{3,∞}(B_r)}`` as ``t -> t0``.

    The trace also carries the largest oscillation Morrey bracket
    ``sup_η (η^{-1}∫|u - u_η|²)^{1/2}`` for comparison with the weak norm.
    """
    if not delta_star > 0:
        raise ParameterError("delta_star must be positive")
    t0, x0 = float(z0[0]), tuple(float(v) for v in z0[1])
    idx = _approach_indices(fld, t0)
    ball = BallSpec(x0, r)
    times = fld.times[idx]
    vals = np.array([oscillation_weak_norm(fld.velocity[k], fld.grid, ball) for k in idx])
    proxy = _limsup_proxy(vals)
    chain = max(morrey_sup(fld, fld.times[k], x0, r, 2, oscillation=True).supremum
                for k in idx[len(idx) - max(1, math.ceil(len(idx) / 4)):])
    growth = _growth(vals)
    verdict = _concentration_verdict(proxy, growth, delta_star)
    trace = [("r", r), ("samples", int(idx.size)), ("growth", growth),
             ("oscillation_morrey_l2", chain),
             ("chain_ratio", chain / proxy if proxy > 0 else 0.0)]
    return DetectionVerdict((t0, x0), "concentration_p3", proxy, delta_star, verdict, trace,
                            list(zip(times.tolist(), vals.tolist())))


def mean_oscillation_pair(vec: np.ndarray, grid, ball: BallSpec):
    """``(Σ_i min_c ∫|u_i - c|², ∫|u - u_ball|²)`` with the minimum taken in closed form."""
    v, w = ball_values(vec, grid, ball)
    mean = v @ w / w.sum()
    direct = float(np.dot(w, np.sum((v - mean[:, None]) ** 2, axis=0)))
    # quadratic in c: a c² - 2 b c + s, minimised at c = b/a
    a = w.sum()
    mins = [float(np.dot(w, vi * vi) - np.dot(w, vi) ** 2 / a) for vi in v]
    return sum(mins), direct


def calibrate_c_cal(cases) -> float:
    """Largest ``lhs / rhs(C=1)`` over ``(lhs, rhs_unit)`` pairs, never below 1."""
    worst = 1.0
    for lhs, rhs in cases:
        if rhs > 0:
            worst = max(worst, lhs / rhs)
    return worst


__all__ = [
    "DetectionVerdict", "IterationState", "c_decay_rhs", "iterate_decay", "iteration_theta",
    "epsilon_regularity", "wolf_criterion", "concentration_rate", "concentration_p3",
    "mean_oscillation_pair", "morrey_time_series", "calibrate_c_cal", "wolf_passes",
    "oscillation_weak_norm", "morrey_bracket",
    "DEFAULT_DELTA", "DEFAULT_EPS_STAR", "DEFAULT_DELTA_STAR", "DEFAULT_C_CAL",
]
