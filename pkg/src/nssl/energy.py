"""Local energy inequality residual, heat-kernel test function and pressure tools."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import (CylinderSpec, DomainError, Grid, ParameterError, SampledField,
                    velocity_gradient)
from .invariants import _integrate_linear, invariants


def smooth_step(tau):
    """C^∞ step: 0 for ``tau <= 0``, 1 for ``tau >= 1``; returns ``(S, S', S'')``."""
    tau = np.asarray(tau, dtype=float)
    S = np.where(tau >= 1, 1.0, 0.0)
    d1 = np.zeros_like(tau)
    d2 = np.zeros_like(tau)
    mid = (tau > 0) & (tau < 1)
    if np.any(mid):
        x = tau[mid]
        g = 1 / x - 1 / (1 - x)
        g1 = -1 / x ** 2 - 1 / (1 - x) ** 2
        g2 = 2 / x ** 3 - 2 / (1 - x) ** 3
        s = 0.5 * (1 - np.tanh(g / 2))  # 1/(1+e^g), overflow-free
        s1 = -s * (1 - s) * g1
        s2 = -(1 - 2 * s) * s1 * g1 - s * (1 - s) * g2
        S[mid], d1[mid], d2[mid] = s, s1, s2
    return S, d1, d2


@dataclass(frozen=True)
class TestFunction:
    """``φ = χ ψ`` centred at ``(t0, x0)``.

    ``ψ(s, y) = (4π(r² - s))^{-3/2} exp(-|y|²/(4(r² - s)))`` with ``s = t - t0``,
    ``y = x - x0``.  ``χ(s, y) = a(|y|) b(√(-s))`` where ``a`` and ``b`` drop
    from 1 to 0 across ``[ρ/2, 3ρ/4]``, so ``χ = 1`` on ``Q_{ρ/2}`` and
    ``χ = 0`` outside ``Q_{3ρ/4}``.
    """

    __test__ = False

    r: float
    rho: float
    t0: float = 0.0
    x0: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.r > 0 and self.rho > 0):
            raise ParameterError("test function scales must be positive")
        if self.r > self.rho / 2:
            raise ParameterError(f"need r <= rho/2, got r={self.r}, rho={self.rho}")

    @property
    def _edges(self):
        return self.rho / 2, 3 * self.rho / 4

    def _cut(self, z):
        a, b = self._edges
        S, d1, d2 = smooth_step((b - z) / (b - a))
        return S, -d1 / (b - a), d2 / (b - a) ** 2

    def evaluate(self, t, X, Y, Z):
        """Return ``φ``, ``∇φ`` (stacked) and ``∂_tφ + Δφ`` on the given points.

        Points with ``t > t0`` lie outside the cylinder and get zeros.
        """
        s = np.asarray(t, dtype=float) - self.t0
        y = [np.asarray(X) - self.x0[0], np.asarray(Y) - self.x0[1], np.asarray(Z) - self.x0[2]]
        shape = np.broadcast(s, *y).shape
        s = np.broadcast_to(s, shape)
        y = [np.broadcast_to(c, shape) for c in y]
        past = s <= 0
        tau = self.r ** 2 - np.where(past, s, 0.0)
        rad2 = y[0] ** 2 + y[1] ** 2 + y[2] ** 2
        rad = np.sqrt(rad2)
        psi = (4 * math.pi * tau) ** -1.5 * np.exp(-rad2 / (4 * tau))
        grad_psi = [-c / (2 * tau) * psi for c in y]

        a, a1, a2 = self._cut(rad)
        w = np.sqrt(np.where(past, -s, 0.0))
        b, b1, _ = self._cut(w)
        # d/ds b(√(-s)) = -b'(w) / (2w); the cut-off is flat near w = 0
        safe_w = np.where(w > 0, w, 1.0)
        db_ds = np.where(w > 0, -b1 / (2 * safe_w), 0.0)
        safe_r = np.where(rad > 0, rad, 1.0)
        grad_a = [np.where(rad > 0, a1 * c / safe_r, 0.0) for c in y]
        lap_a = a2 + np.where(rad > 0, 2 * a1 / safe_r, 0.0)

        chi = a * b
        phi = chi * psi
        grad_phi = np.stack([b * (ga * psi + a * gp) for ga, gp in zip(grad_a, grad_psi)])
        # ψ solves the backward heat equation, so only derivatives of χ survive
        heat = psi * (a * db_ds + b * lap_a) + 2 * b * sum(
            ga * gp for ga, gp in zip(grad_a, grad_psi))
        mask = past.astype(float)
        return phi * mask, grad_phi * mask, heat * mask

    def phi(self, t, X, Y, Z):
        return self.evaluate(t, X, Y, Z)[0]


def heat_test_function(r: float, rho: float, t0: float = 0.0, x0=(0.0, 0.0, 0.0)) -> TestFunction:
    return TestFunction(float(r), float(rho), float(t0), tuple(float(v) for v in x0))


def caloric_defect_fd(tf: TestFunction, h: float, dt: float, extent: float | None = None,
                      n_times: int = 16) -> float:
    """Max of ``|∂_tφ + Δφ|`` on ``Q_{ρ/2}`` with φ differenced numerically.

    Nodes form the lattice ``x0 + h Z³`` restricted to ``B_{ρ/2}`` at
    ``n_times`` levels spread over ``[t0 - ρ²/4, t0 - dt]``; the Laplacian
    is the 7-point stencil and the time derivative a central difference
    with step ``dt``.
    """
    half = tf.rho / 2 if extent is None else extent
    if not (h > 0 and dt > 0) or dt >= half ** 2:
        raise ParameterError("need h > 0 and 0 < dt < extent**2")
    n = int(math.floor(half / h))
    ax = np.arange(-n, n + 1) * h
    X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
    inside = X ** 2 + Y ** 2 + Z ** 2 < half ** 2
    X, Y, Z = X[inside] + tf.x0[0], Y[inside] + tf.x0[1], Z[inside] + tf.x0[2]
    worst = 0.0
    for t in tf.t0 - np.linspace(dt, half ** 2, n_times):
        f0 = tf.phi(t, X, Y, Z)
        lap = -6 * f0
        for dx, dy, dz in ((h, 0, 0), (-h, 0, 0), (0, h, 0), (0, -h, 0), (0, 0, h), (0, 0, -h)):
            lap = lap + tf.phi(t, X + dx, Y + dy, Z + dz)
        lap /= h * h
        dtphi = (tf.phi(t + dt, X, Y, Z) - tf.phi(t - dt, X, Y, Z)) / (2 * dt)
        worst = max(worst, float(np.max(np.abs(dtphi + lap))))
    return worst


def _window(fld: SampledField, lo: float, hi: float):
    idx = fld.indices_between(lo, hi)
    if idx.size < 2:
        raise DomainError(f"need at least 2 time samples in [{lo}, {hi}]")
    return idx


def _block(grid: Grid, x0, radius: float):
    """Index arrays of the cells within ``radius`` of ``x0`` along every axis (periodic wrap)."""
    h = grid.spacing
    out = []
    for i in range(3):
        lo = int(math.floor((x0[i] - radius - grid.lower[i]) / h[i])) - 1
        hi = int(math.floor((x0[i] + radius - grid.lower[i]) / h[i])) + 1
        idx = np.arange(lo, hi + 1)
        if grid.periodic[i]:
            coords = grid.lower[i] + (idx + 0.5) * h[i]
            idx = idx % grid.shape[i]
        else:
            if x0[i] - radius < grid.lower[i] or x0[i] + radius > grid.upper[i]:
                raise DomainError("cylinder leaves the field box on a non-periodic axis")
            idx = idx[(idx >= 0) & (idx < grid.shape[i])]
            coords = grid.lower[i] + (idx + 0.5) * h[i]
        out.append((idx, coords))
    return out


def energy_terms(fld: SampledField, t0: float, x0, r: float, rho: float):
    """Sides of the local energy inequality at the last sample ``<= t0``.

    Returns ``(lhs, rhs)`` with
    ``lhs = ∫|u(t)|²φ + 2∬|∇u|²φ`` and
    ``rhs = ∬ |u|²(∂_tφ + Δφ) + (|u|² + 2P) u·∇φ``.
    """
    if fld.pressure is None:
        raise ParameterError("energy residual needs a pressure field")
    tf = heat_test_function(r, rho, t0, x0)
    k_end = fld.time_index(t0)
    t_end = fld.times[k_end]
    idx = _window(fld, t0 - rho ** 2, t_end)
    if t0 - rho ** 2 < fld.t_range[0] - 1e-12:
        raise DomainError("cylinder starts before the first field sample")
    blocks = _block(fld.grid, x0, 0.75 * rho)
    (ix, cx), (iy, cy), (iz, cz) = blocks
    X, Y, Z = np.meshgrid(cx, cy, cz, indexing="ij")
    sel = np.ix_(ix, iy, iz)
    dV = fld.grid.cell_volume
    rhs_t, diss_t = [], []
    energy_end = 0.0
    for k in idx:
        t = fld.times[k]
        phi, gphi, heat = tf.evaluate(t, X, Y, Z)
        vel = fld.velocity[k]
        u = np.stack([vel[c][sel] for c in range(3)])
        P = fld.pressure[k][sel]
        s2 = np.sum(u * u, axis=0)
        J = velocity_gradient(vel, fld.grid, "auto")
        g2 = np.sum(J ** 2, axis=(0, 1))[sel]
        udg = np.sum(u * gphi, axis=0)
        rhs_t.append(np.sum(s2 * heat + (s2 + 2 * P) * udg) * dV)
        diss_t.append(np.sum(g2 * phi) * dV)
        if k == k_end:
            energy_end = float(np.sum(s2 * phi) * dV)
    t = fld.times[idx]
    lo = t[0]
    rhs = _integrate_linear(t, np.asarray(rhs_t), lo, t_end)
    lhs = energy_end + 2 * _integrate_linear(t, np.asarray(diss_t), lo, t_end)
    return lhs, rhs


def energy_residual(fld: SampledField, t0: float, x0, r: float, rho: float) -> float:
    """RHS - LHS of the local energy inequality; positive means slack."""
    lhs, rhs = energy_terms(fld, t0, x0, r, rho)
    return rhs - lhs


def energy_scale(fld: SampledField, t0: float, x0, rho: float) -> float:
    """Reference magnitude ``A(u, ρ) ρ³`` for relative residual tolerances."""
    return invariants(fld, CylinderSpec(t0, x0, rho)).A * rho ** 3


def solve_pressure_periodic(vec: np.ndarray, grid: Grid) -> np.ndarray:
    """Zero-mean ``P`` with ``-ΔP = ∂_i∂_j(u_i u_j)`` on a periodic box."""
    if not all(grid.periodic):
        raise ParameterError("spectral pressure solve needs every axis periodic")
    ks = [2 * math.pi * np.fft.fftfreq(n, d=(grid.upper[i] - grid.lower[i]) / n)
          for i, n in enumerate(grid.shape)]
    K = np.meshgrid(*ks, indexing="ij")
    k2 = K[0] ** 2 + K[1] ** 2 + K[2] ** 2
    rhs_hat = np.zeros(grid.shape, dtype=complex)
    for i in range(3):
        for j in range(3):
            rhs_hat -= K[i] * K[j] * np.fft.fftn(vec[i] * vec[j])
    safe = np.where(k2 > 0, k2, 1.0)
    p_hat = np.where(k2 > 0, rhs_hat / safe, 0.0)
    return np.real(np.fft.ifftn(p_hat))


def pressure_source_residual(P: np.ndarray, vec: np.ndarray, grid: Grid) -> float:
    """Max spectral mismatch of ``-ΔP - ∂_i∂_j(u_i u_j)`` relative to the source."""
    ks = [2 * math.pi * np.fft.fftfreq(n, d=(grid.upper[i] - grid.lower[i]) / n)
          for i, n in enumerate(grid.shape)]
    K = np.meshgrid(*ks, indexing="ij")
    k2 = K[0] ** 2 + K[1] ** 2 + K[2] ** 2
    src = np.zeros(grid.shape, dtype=complex)
    for i in range(3):
        for j in range(3):
            src -= K[i] * K[j] * np.fft.fftn(vec[i] * vec[j])
    src[k2 == 0] = 0
    lap = k2 * np.fft.fftn(P)
    scale = max(float(np.abs(src).max()), 1e-300)
    return float(np.abs(lap - src).max() / scale)


def with_spectral_pressure(fld: SampledField) -> SampledField:
    """Replace the pressure of a periodic field by the spectral solve at every sample."""
    pres = np.stack([solve_pressure_periodic(fld.velocity[k], fld.grid) for k in range(fld.nt)])
    return SampledField(fld.grid, fld.t_range, fld.velocity, pres,
                        dict(fld.meta, pressure="spectral"))


def pressure_decay_bound(fld: SampledField, t0: float, x0, r: float, rho: float,
                         c_cal: float):
    """``(D(P, r), C (r/ρ) D(P, ρ) + C (ρ/r)² C(u, ρ))`` with ``C = c_cal``."""
    if not r < rho / 2 + 1e-12:
        raise ParameterError("pressure decay needs r <= rho/2")
    if not c_cal > 0:
        raise ParameterError("c_cal must be positive")
    if fld.pressure is None:
        raise ParameterError("pressure decay needs a pressure field")
    small = invariants(fld, CylinderSpec(t0, x0, r))
    big = invariants(fld, CylinderSpec(t0, x0, rho))
    rhs = c_cal * (r / rho) * big.D + c_cal * (rho / r) ** 2 * big.C
    return small.D, rhs
