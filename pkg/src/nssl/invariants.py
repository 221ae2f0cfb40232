"""Scale-invariant quantities A, B, C, D on parabolic cylinders and the NSE scaling."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .field import (CylinderSpec, DomainError, Grid, ParameterError, SampledField,
                    ball_values, grad_sq)


@dataclass
class InvariantReport:
    t0: float
    x0: tuple
    r: float
    A: float
    B: float
    C: float
    D: Optional[float]
    samples_used: int
    clipped: bool = False
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["x0"] = list(self.x0)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _integrate_linear(times: np.ndarray, vals: np.ndarray, lo: float, hi: float) -> float:
    """Exact integral over ``[lo, hi]`` of the piecewise-linear interpolant (flat beyond the ends)."""
    knots = np.unique(np.concatenate([[lo, hi], times[(times > lo) & (times < hi)]]))
    return float(np.trapezoid(np.interp(knots, times, vals), knots))


def cylinder_window(fld: SampledField, cyl: CylinderSpec):
    """Clipped time window of ``cyl`` and the sample indices it needs."""
    ta, tb = fld.t_range
    lo, hi = max(cyl.t_start, ta), min(cyl.t0, tb)
    clipped = cyl.t_start < ta - 1e-12 or cyl.t0 > tb + 1e-12
    inside = fld.indices_between(lo, hi)
    if inside.size < 2:
        raise DomainError(f"cylinder time range [{cyl.t_start}, {cyl.t0}] holds "
                          f"{inside.size} field samples, need >= 2")
    # neighbours just outside feed the linear interpolation at the window ends
    lo_k, hi_k = max(inside[0] - 1, 0), min(inside[-1] + 1, fld.nt - 1)
    return lo, hi, clipped, inside, np.arange(lo_k, hi_k + 1)


def invariants(fld: SampledField, cyl: CylinderSpec, grad_method: str = "fd2") -> InvariantReport:
    """A = max_s r^{-1}∫|u|², B = r^{-1}∬|∇u|², C = r^{-2}∬|u|³, D = r^{-2}∬|P|^{3/2}."""
    lo, hi, clipped, inside, used = cylinder_window(fld, cyl)
    ball = cyl.ball
    r = cyl.radius
    e2, g2, c3, d32 = [], [], [], []
    for k in used:
        vec, w = ball_values(fld.velocity[k], fld.grid, ball)
        s2 = np.sum(vec * vec, axis=0)
        e2.append(np.dot(w, s2))
        c3.append(np.dot(w, s2 ** 1.5))
        gv, _ = ball_values(grad_sq(fld.velocity[k], fld.grid, grad_method), fld.grid, ball)
        g2.append(np.dot(w, gv))
        if fld.pressure is not None:
            pv, _ = ball_values(fld.pressure[k], fld.grid, ball)
            d32.append(np.dot(w, np.abs(pv) ** 1.5))
    t = fld.times[used]
    sel = np.isin(used, inside)
    flags = []
    if clipped:
        flags.append("clipped")
    A = float(np.max(np.asarray(e2)[sel])) / r
    B = _integrate_linear(t, np.asarray(g2), lo, hi) / r
    C = _integrate_linear(t, np.asarray(c3), lo, hi) / r ** 2
    D = None
    if d32:
        D = _integrate_linear(t, np.asarray(d32), lo, hi) / r ** 2
    else:
        flags.append("no_pressure")
    return InvariantReport(cyl.t0, cyl.center, r, A, B, C, D, int(inside.size), clipped, flags)


def rescale(fld: SampledField, lam: float, target: Optional[Grid] = None,
            t_range: Optional[tuple] = None) -> SampledField:
    """``u_λ(t, x) = λ u(λ² t, λ x)``, ``P_λ = λ² P(λ² t, λ x)``.

    By default the result lives on the original grid scaled by ``1/λ`` and
    the time interval scaled by ``1/λ²``, whose nodes map exactly onto the
    source nodes.  A different ``target`` grid (and/or ``t_range``) is
    filled by trilinear interpolation in space and nearest sample in time.
    """
    if not lam > 0:
        raise ParameterError(f"scaling factor must be positive, got {lam}")
    ta, tb = fld.t_range
    if target is None and t_range is None:
        grid = fld.grid.scaled(1.0 / lam)
        pres = None if fld.pressure is None else lam ** 2 * fld.pressure
        return SampledField(grid, (ta / lam ** 2, tb / lam ** 2), lam * fld.velocity, pres,
                            dict(fld.meta, rescaled=lam))
    grid = target or fld.grid.scaled(1.0 / lam)
    tr = t_range or (ta / lam ** 2, tb / lam ** 2)
    new_times = np.linspace(tr[0], tr[1], fld.nt)
    src_axes = [fld.grid.axis(i) for i in range(3)]
    pts = np.stack([lam * m for m in grid.mesh()], axis=-1).reshape(-1, 3)
    pts = _fold_periodic(pts, fld.grid)
    vel = np.empty((fld.nt, 3) + grid.shape)
    pres = None if fld.pressure is None else np.empty((fld.nt,) + grid.shape)
    for n, t in enumerate(new_times):
        k = _nearest_index(fld, lam ** 2 * t)
        for c in range(3):
            vel[n, c] = lam * _interp(src_axes, fld.velocity[k, c], pts, fld.grid).reshape(grid.shape)
        if pres is not None:
            pres[n] = lam ** 2 * _interp(src_axes, fld.pressure[k], pts, fld.grid).reshape(grid.shape)
    return SampledField(grid, tr, vel, pres, dict(fld.meta, rescaled=lam))


def _nearest_index(fld: SampledField, t: float) -> int:
    ta, tb = fld.t_range
    if t < ta - 1e-9 * fld.dt or t > tb + 1e-9 * fld.dt:
        raise DomainError(f"rescaled time {t} falls outside the source interval")
    return int(np.clip(np.rint((t - ta) / fld.dt), 0, fld.nt - 1))


def _fold_periodic(pts: np.ndarray, grid: Grid) -> np.ndarray:
    pts = pts.copy()
    for i in range(3):
        if grid.periodic[i]:
            L = grid.upper[i] - grid.lower[i]
            pts[:, i] = grid.lower[i] + np.mod(pts[:, i] - grid.lower[i], L)
    return pts


def _interp(axes, values, pts, grid: Grid) -> np.ndarray:
    # pad periodic axes by one wrapped layer so interpolation covers the whole period
    ax = list(axes)
    v = values
    for i in range(3):
        if grid.periodic[i]:
            h = grid.spacing[i]
            ax[i] = np.concatenate([[ax[i][0] - h], ax[i], [ax[i][-1] + h]])
            v = np.concatenate([np.take(v, [-1], axis=i), v, np.take(v, [0], axis=i)], axis=i)
    f = RegularGridInterpolator(ax, v, method="linear", bounds_error=False, fill_value=None)
    return f(pts)
