"""Synthetic ground-truth fields.

Kinds:

* ``beltrami_abc``: decaying ABC flow on the periodic box ``[-π, π]³``,
  an exact Navier-Stokes solution with ``P = -|u|²/2`` (mean removed).
* ``inverse_radial``: static field with ``|u| = c/|x - x_c|``.
* ``leray_selfsimilar``: ``(2a(T-t))^{-1/2} U(x/(2a(T-t))^{1/2})`` with a
  compactly supported divergence-free swirl ``U``.
* ``random_divfree``: seeded Fourier synthesis, Leray-projected, with a
  power-law envelope and Stokes decay ``e^{-ν|k|²t}`` per mode.
* ``constant``: uniform velocity and pressure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .field import Grid, ParameterError, SampledField, grad_sq

KINDS = ("beltrami_abc", "inverse_radial", "leray_selfsimilar", "random_divfree", "constant")

_DEFAULT_BOX = {
    "beltrami_abc": [-math.pi, math.pi] * 3,
    "random_divfree": [-math.pi, math.pi] * 3,
    "inverse_radial": [-1.0, 1.0] * 3,
    "leray_selfsimilar": [-1.0, 1.0] * 3,
    "constant": [-1.0, 1.0] * 3,
}


@dataclass
class GeneratorSpec:
    kind: str
    params: dict = field(default_factory=dict)
    dims: tuple = (32, 32, 32, 2)
    box: list | None = None
    t_range: tuple = (0.0, 1.0)
    periodic: tuple | None = None

    @classmethod
    def from_json(cls, text: str) -> "GeneratorSpec":
        d = json.loads(text)
        return cls(kind=d["kind"], params=d.get("params", {}),
                   dims=tuple(d.get("dims", (32, 32, 32, 2))), box=d.get("box"),
                   t_range=tuple(d.get("t_range", (0.0, 1.0))),
                   periodic=None if d.get("periodic") is None else tuple(d["periodic"]))

    def grid(self) -> Grid:
        box = self.box
        if box is None:
            # one period of the ABC flow at its wavenumber
            kw = float(self.params.get("wavenumber", 1.0)) if self.kind == "beltrami_abc" else 1.0
            box = [v / kw for v in _DEFAULT_BOX[self.kind]]
        if self.periodic is not None:
            per = self.periodic
        else:
            per = (True,) * 3 if self.kind in ("beltrami_abc", "random_divfree") else (False,) * 3
        return Grid(self.dims[:3], box[0::2], box[1::2], per)

    def times(self) -> np.ndarray:
        return np.linspace(self.t_range[0], self.t_range[1], self.dims[3])


def generate(spec: GeneratorSpec) -> SampledField:
    if spec.kind not in KINDS:
        raise ParameterError(f"unknown generator kind {spec.kind!r}; choose from {KINDS}")
    if len(spec.dims) != 4:
        raise ParameterError("dims must be (nx, ny, nz, nt)")
    return globals()["_gen_" + spec.kind](spec)


def _gen_constant(spec: GeneratorSpec) -> SampledField:
    g = spec.grid()
    nt = spec.dims[3]
    c = np.asarray(spec.params.get("c", (0.0, 0.0, 0.0)), dtype=float)
    vel = np.broadcast_to(c[None, :, None, None, None], (nt, 3) + g.shape)
    pres = None
    if "p0" in spec.params:
        pres = np.full((nt,) + g.shape, float(spec.params["p0"]))
    return SampledField(g, spec.t_range, vel, pres, {"kind": "constant"})


def beltrami_velocity(t, X, Y, Z, A=1.0, B=1.0, C=1.0, k=1.0):
    """ABC flow at wavenumber ``k`` with unit viscosity, decaying as ``e^{-k² t}``."""
    d = math.exp(-k * k * t)
    X, Y, Z = k * X, k * Y, k * Z
    return d * np.stack([A * np.sin(Z) + C * np.cos(Y),
                         B * np.sin(X) + A * np.cos(Z),
                         C * np.sin(Y) + B * np.cos(X)])


def _gen_beltrami_abc(spec: GeneratorSpec) -> SampledField:
    g = spec.grid()
    A, B, C = (float(spec.params.get(k, 1.0)) for k in "ABC")
    kw = float(spec.params.get("wavenumber", 1.0))
    X, Y, Z = g.mesh()
    vel = np.empty((spec.dims[3], 3) + g.shape)
    pres = np.empty((spec.dims[3],) + g.shape)
    for n, t in enumerate(spec.times()):
        vel[n] = beltrami_velocity(t, X, Y, Z, A, B, C, kw)
        e = 0.5 * np.sum(vel[n] ** 2, axis=0)
        pres[n] = -(e - e.mean())
    meta = {"kind": "beltrami_abc", "A": A, "B": B, "C": C, "wavenumber": kw,
            "divergence_free": True}
    return SampledField(g, spec.t_range, vel, pres, meta)


def volume_matched_radius(dist: np.ndarray, cell_volume: float, inscribed: float) -> np.ndarray:
    """Radius of the ball whose volume equals that of all cells at distance <= ``dist``.

    Cells are ranked by distance and ties share a shell, so the sampled
    profile ``c / R`` has exactly the distribution function of ``c/|x|``
    at every shell.  Beyond ``inscribed`` (where the box truncates the
    shells) the plain distance is used.
    """
    d = dist.ravel()
    key = np.round(d / np.sqrt(cell_volume ** (2 / 3)), 9)
    shells, inv, counts = np.unique(key, return_inverse=True, return_counts=True)
    cum = np.cumsum(counts) * cell_volume
    req = (3 * cum / (4 * math.pi)) ** (1 / 3)
    out = req[inv]
    far = d > inscribed
    out[far] = d[far]
    return out.reshape(dist.shape)


def _gen_inverse_radial(spec: GeneratorSpec) -> SampledField:
    g = spec.grid()
    c = float(spec.params.get("c", 1.0))
    xc = np.asarray(spec.params.get("center", (0.0, 0.0, 0.0)), dtype=float)
    direction = spec.params.get("direction", "swirl")
    X, Y, Z = g.mesh()
    dx, dy, dz = X - xc[0], Y - xc[1], Z - xc[2]
    dist = np.sqrt(dx * dx + dy * dy + dz * dz)
    h = g.spacing
    inscribed = min(min(xc[i] - g.lower[i], g.upper[i] - xc[i]) for i in range(3))
    # singular node (if any) takes the value at half a cell
    dist_reg = np.maximum(dist, 0.5 * h.min())
    mag = c / volume_matched_radius(dist_reg, g.cell_volume, inscribed)
    if direction == "swirl":
        rho = np.sqrt(dx * dx + dy * dy)
        safe = np.where(rho > 0, rho, 1.0)
        e = np.stack([-dy / safe, dx / safe, np.zeros_like(dz)])
        e[:, rho == 0] = 0.0
    elif direction == "radial":
        e = np.stack([dx, dy, dz]) / np.where(dist > 0, dist, 1.0)
    else:
        raise ParameterError(f"direction must be 'swirl' or 'radial', got {direction!r}")
    vec = mag * e
    vel = np.broadcast_to(vec, (spec.dims[3], 3) + g.shape)
    meta = {"kind": "inverse_radial", "c": c, "direction": direction,
            "divergence_free": direction == "swirl"}
    return SampledField(g, spec.t_range, vel, None, meta)


def _bump(s: np.ndarray, radius: float):
    """Stream-function bump ``ψ(s) = (1 - (s/R)²)^4`` for ``s < R`` and ``ψ'(s)``."""
    tau = np.clip(s / radius, 0, 1)
    base = 1 - tau ** 2
    return base ** 4, -8 * tau * base ** 3 / radius


def leray_profile(Y1, Y2, Y3, amplitude=1.0, support=0.5):
    """Swirl ``U = curl(0, 0, ψ(|y|))`` with ``ψ`` supported in ``|y| < support``."""
    s = np.sqrt(Y1 ** 2 + Y2 ** 2 + Y3 ** 2)
    _, dpsi = _bump(s, support)
    safe = np.where(s > 0, s, 1.0)
    f = amplitude * dpsi / safe
    return np.stack([f * Y2, -f * Y1, np.zeros_like(Y3)])


def leray_velocity(t, X, Y, Z, T=1.0, a=0.5, amplitude=1.0, support=0.5):
    L = math.sqrt(2 * a * (T - t))
    return leray_profile(X / L, Y / L, Z / L, amplitude, support) / L


def _gen_leray_selfsimilar(spec: GeneratorSpec) -> SampledField:
    g = spec.grid()
    p = spec.params
    T = float(p.get("T", spec.t_range[1] + 0.05))
    a = float(p.get("a", 0.5))
    amp = float(p.get("amplitude", 1.0))
    support = float(p.get("support", 0.5))
    if not T > spec.t_range[1]:
        raise ParameterError("leray_selfsimilar needs T > t_b")
    if not a > 0:
        raise ParameterError("leray_selfsimilar needs a > 0")
    X, Y, Z = g.mesh()
    vel = np.stack([leray_velocity(t, X, Y, Z, T, a, amp, support) for t in spec.times()])
    meta = {"kind": "leray_selfsimilar", "T": T, "a": a, "amplitude": amp,
            "support": support, "divergence_free": True}
    return SampledField(g, spec.t_range, vel, None, meta)


def _wavenumbers(g: Grid):
    ks = [2 * math.pi * np.fft.fftfreq(n, d=(g.upper[i] - g.lower[i]) / n)
          for i, n in enumerate(g.shape)]
    return np.meshgrid(*ks, indexing="ij")


def _gen_random_divfree(spec: GeneratorSpec) -> SampledField:
    g = spec.grid()
    p = spec.params
    rng = np.random.default_rng(int(p.get("seed", 0)))
    slope = float(p.get("slope", -5.0 / 3.0))
    amp = float(p.get("amplitude", 1.0))
    nu = float(p.get("viscosity", 0.0))
    kmax = float(p.get("kmax", min(g.shape) / 3))
    KX, KY, KZ = _wavenumbers(g)
    k2 = KX ** 2 + KY ** 2 + KZ ** 2
    kk = np.sqrt(k2)
    # energy spectrum E(k) ~ k^slope -> mode amplitude ~ k^{(slope-2)/2}
    env = np.where((kk > 0) & (kk <= kmax), np.where(kk > 0, kk, 1.0) ** ((slope - 2) / 2), 0.0)
    noise = rng.standard_normal((3,) + g.shape)
    uh = np.fft.fftn(noise, axes=(1, 2, 3)) * env
    uh = leray_project(uh, (KX, KY, KZ))
    base = np.real(np.fft.ifftn(uh, axes=(1, 2, 3)))
    rms = math.sqrt(np.mean(np.sum(base ** 2, axis=0)))
    scale = amp / rms if rms > 0 else 0.0
    uh = uh * scale
    vel = np.empty((spec.dims[3], 3) + g.shape)
    for n, t in enumerate(spec.times()):
        vel[n] = np.real(np.fft.ifftn(uh * np.exp(-nu * k2 * (t - spec.t_range[0])), axes=(1, 2, 3)))
    meta = {"kind": "random_divfree", "seed": int(p.get("seed", 0)), "slope": slope,
            "divergence_free": True}
    return SampledField(g, spec.t_range, vel, None, meta)


def leray_project(uh: np.ndarray, k) -> np.ndarray:
    """Remove the longitudinal part of Fourier coefficients ``uh`` (shape ``(3, ...)``)."""
    k2 = k[0] ** 2 + k[1] ** 2 + k[2] ** 2
    safe = np.where(k2 > 0, k2, 1.0)
    div = (k[0] * uh[0] + k[1] * uh[1] + k[2] * uh[2]) / safe
    return np.stack([uh[i] - k[i] * div for i in range(3)])


def spectral_divergence(vec: np.ndarray, g: Grid) -> np.ndarray:
    k = _wavenumbers(g)
    uh = np.fft.fftn(vec, axes=(1, 2, 3))
    return np.real(np.fft.ifftn(1j * (k[0] * uh[0] + k[1] * uh[1] + k[2] * uh[2])))


def exact_energy_identity(fld: SampledField, k: int | None = None):
    """Both sides of ``d/dt ½∫|u|² = -∫|∇u|²`` at sample ``k`` (default: middle).

    The time derivative is a central difference of the sampled energy and
    the dissipation uses the spectral gradient.
    """
    if fld.meta.get("kind") != "beltrami_abc":
        raise ParameterError("exact_energy_identity needs a beltrami_abc field")
    if k is None:
        k = fld.nt // 2
    k = min(max(k, 1), fld.nt - 2)
    dV = fld.grid.cell_volume

    def energy(n):
        return 0.5 * float(np.sum(fld.velocity[n] ** 2)) * dV

    lhs = (energy(k + 1) - energy(k - 1)) / (2 * fld.dt)
    rhs = -float(np.sum(grad_sq(fld.velocity[k], fld.grid, "spectral"))) * dV
    return lhs, rhs


def with_blowup_factor(fld: SampledField, T: float) -> SampledField:
    """Multiply ``u`` by ``(T - t)^{-1/2}`` and ``P`` by ``(T - t)^{-1}``.

    The result is not a Navier-Stokes solution; it serves as a negative
    control for the local energy inequality.
    """
    if not T > fld.t_range[1]:
        raise ParameterError("blow-up time must exceed the last sample time")
    f = (T - fld.times) ** -0.5
    vel = fld.velocity * f[:, None, None, None, None]
    pres = None if fld.pressure is None else fld.pressure * (f ** 2)[:, None, None, None]
    return SampledField(fld.grid, fld.t_range, vel, pres, dict(fld.meta, manufactured_T=T))


def scaled(fld: SampledField, s: float) -> SampledField:
    """Velocity times ``s`` and pressure times ``s²`` (keeps Beltrami fields exact)."""
    pres = None if fld.pressure is None else s * s * fld.pressure
    return SampledField(fld.grid, fld.t_range, s * fld.velocity, pres, dict(fld.meta, amplitude=s))
