"""Sampled space-time fields, ball/cylinder geometry and ball quadrature.

All lattices are cell-centred: along an axis with ``n`` cells on
``[lo, hi]`` the nodes sit at ``lo + (i + 1/2) h`` with ``h = (hi - lo)/n``.
Each node value represents its whole cell (piecewise-constant data).
Time samples are ``linspace(t_a, t_b, nt)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class DomainError(ValueError):
    """A query region does not meet the data it is asked about."""


class ParameterError(ValueError):
    """An exponent, radius or threshold is outside its admissible range."""


# sub-cell offsets for boundary-cell coverage (4 per axis)
_SUB = (np.arange(4) + 0.5) / 4 - 0.5


@dataclass(frozen=True)
class Grid:
    shape: tuple
    lower: tuple
    upper: tuple
    periodic: tuple = (False, False, False)

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        object.__setattr__(self, "periodic", tuple(bool(v) for v in self.periodic))
        if len(self.shape) != 3 or any(n < 2 for n in self.shape):
            raise ValueError(f"grid needs three axes with at least 2 cells, got {self.shape}")
        if any(not np.isfinite(a) or not np.isfinite(b) or b <= a
               for a, b in zip(self.lower, self.upper)):
            raise ValueError("grid box must have strictly positive extent on every axis")

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / np.array(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis(self, i: int) -> np.ndarray:
        h = self.spacing[i]
        return self.lower[i] + (np.arange(self.shape[i]) + 0.5) * h

    def mesh(self):
        return np.meshgrid(self.axis(0), self.axis(1), self.axis(2), indexing="ij")

    def scaled(self, factor: float) -> "Grid":
        return Grid(self.shape, tuple(v * factor for v in self.lower),
                    tuple(v * factor for v in self.upper), self.periodic)


@dataclass(frozen=True)
class BallSpec:
    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in np.asarray(self.center, dtype=float).ravel())
        if len(c) != 3:
            raise ParameterError("ball center must be a 3-vector")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ParameterError(f"ball radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class CylinderSpec:
    t0: float
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "center", BallSpec(self.center, self.radius).center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def ball(self) -> BallSpec:
        return BallSpec(self.center, self.radius)

    @property
    def t_start(self) -> float:
        return self.t0 - self.radius ** 2


@dataclass(frozen=True, eq=False)
class SampledField:
    """Velocity (and optionally pressure) sampled on a space-time lattice.

    ``velocity`` has shape ``(nt, 3, nx, ny, nz)`` and ``pressure`` shape
    ``(nt, nx, ny, nz)``.  Arrays are made read-only on construction.
    """

    grid: Grid
    t_range: tuple
    velocity: np.ndarray
    pressure: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ta, tb = (float(v) for v in self.t_range)
        if not (np.isfinite(ta) and np.isfinite(tb) and ta < tb):
            raise ValueError("time interval must satisfy t_a < t_b")
        object.__setattr__(self, "t_range", (ta, tb))
        vel = np.ascontiguousarray(self.velocity, dtype=float)
        if vel.ndim != 5 or vel.shape[1] != 3 or vel.shape[2:] != self.grid.shape:
            raise ValueError(f"velocity shape {vel.shape} does not match (nt, 3, *{self.grid.shape})")
        if vel.shape[0] < 2:
            raise ValueError("need at least 2 time samples")
        if not np.all(np.isfinite(vel)):
            raise ValueError("velocity contains non-finite values")
        vel.flags.writeable = False
        object.__setattr__(self, "velocity", vel)
        if self.pressure is not None:
            pr = np.ascontiguousarray(self.pressure, dtype=float)
            if pr.shape != (vel.shape[0],) + self.grid.shape:
                raise ValueError(f"pressure shape {pr.shape} does not match velocity")
            if not np.all(np.isfinite(pr)):
                raise ValueError("pressure contains non-finite values")
            pr.flags.writeable = False
            object.__setattr__(self, "pressure", pr)

    @property
    def nt(self) -> int:
        return self.velocity.shape[0]

    @property
    def dims(self) -> tuple:
        return self.grid.shape + (self.nt,)

    @property
    def box(self) -> tuple:
        g = self.grid
        return (g.lower[0], g.upper[0], g.lower[1], g.upper[1],
                g.lower[2], g.upper[2]) + self.t_range

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_range[0], self.t_range[1], self.nt)

    @property
    def dt(self) -> float:
        return (self.t_range[1] - self.t_range[0]) / (self.nt - 1)

    def time_index(self, t: float) -> int:
        """Index of the sample at or below ``t``."""
        ta, tb = self.t_range
        tol = 1e-9 * self.dt
        if t < ta - tol or t > tb + tol:
            raise DomainError(f"time {t} outside field interval [{ta}, {tb}]")
        k = int(np.floor((t - ta) / self.dt + 1e-9))
        return min(max(k, 0), self.nt - 1)

    def speed(self, k: int) -> np.ndarray:
        return np.sqrt(np.sum(self.velocity[k] ** 2, axis=0))

    def indices_between(self, lo: float, hi: float) -> np.ndarray:
        tol = 1e-9 * self.dt
        t = self.times
        return np.nonzero((t >= lo - tol) & (t <= hi + tol))[0]


@functools.lru_cache(maxsize=256)
def _ball_cells(grid: Grid, center: tuple, radius: float):
    h = grid.spacing
    c = np.array(center)
    per_axis = []
    for i in range(3):
        n = grid.shape[i]
        i_lo = int(np.floor((c[i] - radius - grid.lower[i]) / h[i]))
        i_hi = int(np.floor((c[i] + radius - grid.lower[i]) / h[i]))
        idx = np.arange(i_lo, i_hi + 1)
        if grid.periodic[i]:
            if 2 * radius >= grid.upper[i] - grid.lower[i]:
                raise DomainError("ball diameter exceeds the period of a periodic axis")
        else:
            idx = idx[(idx >= 0) & (idx < n)]
        per_axis.append(idx)
    if any(len(a) == 0 for a in per_axis):
        raise DomainError(f"ball B_{radius}({center}) lies outside the field box")

    # cell centres from unwrapped indices so periodic images are placed correctly
    centres = [grid.lower[i] + (per_axis[i] + 0.5) * h[i] - c[i] for i in range(3)]
    dx, dy, dz = np.meshgrid(*centres, indexing="ij")
    near = [np.maximum(np.abs(d) - hh / 2, 0.0) for d, hh in zip((dx, dy, dz), h)]
    far = [np.abs(d) + hh / 2 for d, hh in zip((dx, dy, dz), h)]
    dmin2 = near[0] ** 2 + near[1] ** 2 + near[2] ** 2
    dmax2 = far[0] ** 2 + far[1] ** 2 + far[2] ** 2
    r2 = radius * radius
    w = np.where(dmax2 <= r2, 1.0, 0.0)
    edge = (dmax2 > r2) & (dmin2 < r2)
    if np.any(edge):
        sx, sy, sz = np.meshgrid(_SUB * h[0], _SUB * h[1], _SUB * h[2], indexing="ij")
        ex, ey, ez = dx[edge][:, None], dy[edge][:, None], dz[edge][:, None]
        inside = ((ex + sx.ravel()) ** 2 + (ey + sy.ravel()) ** 2
                  + (ez + sz.ravel()) ** 2) < r2
        w[edge] = inside.mean(axis=1)
    keep = w > 0
    if not np.any(keep):
        raise DomainError(f"ball B_{radius}({center}) covers no cell of the field box")
    wrapped = [a % grid.shape[i] for i, a in enumerate(per_axis)]
    ix, iy, iz = np.meshgrid(*wrapped, indexing="ij")
    flat = np.ravel_multi_index((ix[keep], iy[keep], iz[keep]), grid.shape)
    weights = w[keep] * grid.cell_volume
    flat.flags.writeable = False
    weights.flags.writeable = False
    return flat, weights


def ball_cells(grid: Grid, ball: BallSpec):
    """Flat cell indices meeting ``ball`` and the covered volume of each cell."""
    return _ball_cells(grid, ball.center, ball.radius)


def ball_values(values: np.ndarray, grid: Grid, ball: BallSpec):
    """Cell values inside ``ball`` paired with their covered volumes.

    ``values`` may carry leading axes (e.g. vector components); the last
    three axes must match the grid.
    """
    idx, w = ball_cells(grid, ball)
    vals = np.asarray(values)
    lead = vals.shape[:-3]
    return vals.reshape(lead + (-1,))[..., idx], w


def integrate_ball(values: np.ndarray, grid: Grid, ball: BallSpec, p: float = 1.0) -> float:
    """``∫_B |f|^p dx`` for a scalar lattice; ``p = inf`` gives the max over covered cells."""
    if not p >= 1:
        raise ParameterError(f"exponent p must be >= 1, got {p}")
    v, w = ball_values(values, grid, ball)
    a = np.abs(v)
    if np.isinf(p):
        return float(a.max())
    return float(np.dot(w, a ** p))


def ball_volume(grid: Grid, ball: BallSpec) -> float:
    return float(ball_cells(grid, ball)[1].sum())


def local_mean(fld: SampledField, t: float, ball: BallSpec) -> np.ndarray:
    """Volume average of the velocity over ``ball`` at the sample at-or-below ``t``."""
    k = fld.time_index(t)
    return mean_over_ball(fld.velocity[k], fld.grid, ball)


def mean_over_ball(vec: np.ndarray, grid: Grid, ball: BallSpec) -> np.ndarray:
    v, w = ball_values(vec, grid, ball)
    return v @ w / w.sum()


def _spectral_derivative(a: np.ndarray, axis: int, length: float) -> np.ndarray:
    n = a.shape[axis]
    k = 2 * np.pi * np.fft.fftfreq(n, d=length / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1] * a.ndim
    shape[axis] = n
    return np.real(np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(a, axis=axis), axis=axis))


def velocity_gradient(vec: np.ndarray, grid: Grid, method: str = "fd2") -> np.ndarray:
    """Array ``J[i, j] = ∂_j u_i`` of shape ``(3, 3, nx, ny, nz)``.

    ``fd2``: second-order central differences, wrap-around on periodic axes,
    one-sided second-order stencils at non-periodic walls.  ``spectral``
    needs every axis periodic.  ``auto`` picks spectral when it can.
    """
    if method == "auto":
        method = "spectral" if all(grid.periodic) else "fd2"
    h = grid.spacing
    for j in range(3):
        if not grid.periodic[j] and grid.shape[j] < 3:
            raise DomainError(f"axis {j} has fewer than 3 cells and is not periodic")
    if method == "spectral" and not all(grid.periodic):
        raise ParameterError("spectral gradient needs a fully periodic grid")
    out = np.empty((3, 3) + grid.shape)
    for i in range(3):
        for j in range(3):
            if method == "spectral":
                out[i, j] = _spectral_derivative(vec[i], j, grid.upper[j] - grid.lower[j])
            elif grid.periodic[j]:
                out[i, j] = (np.roll(vec[i], -1, axis=j) - np.roll(vec[i], 1, axis=j)) / (2 * h[j])
            else:
                out[i, j] = np.gradient(vec[i], h[j], axis=j, edge_order=2)
    return out


def gradient(fld: SampledField, t: float, method: str = "fd2") -> np.ndarray:
    """Lattice of ``|∇u|² = Σ_ij (∂_j u_i)²`` at the sample at-or-below ``t``."""
    k = fld.time_index(t)
    return grad_sq(fld.velocity[k], fld.grid, method)


def grad_sq(vec: np.ndarray, grid: Grid, method: str = "fd2") -> np.ndarray:
    return np.sum(velocity_gradient(vec, grid, method) ** 2, axis=(0, 1))
