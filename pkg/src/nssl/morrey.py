"""Morrey-type suprema over dyadic ball ladders and the weak-norm embedding."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .field import BallSpec, DomainError, ParameterError, SampledField, ball_values
from .lorentz import ball_distribution, weak_norm

# (4π/3 + 2)^{1/2}: the embedding constant obtained by splitting the
# distribution integral at R = η^{-2/p} ||u||; valid for every p >= 2.
C_EMB = math.sqrt(4 * math.pi / 3 + 2)


@dataclass(frozen=True)
class MorreyProfile:
    radii: np.ndarray
    values: np.ndarray
    p: float
    oscillation: bool

    @property
    def supremum(self) -> float:
        return float(self.values.max())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eta", "value"])
            for e, v in zip(self.radii, self.values):
                w.writerow([repr(float(e)), repr(float(v))])


def resolution_floor(fld: SampledField) -> float:
    """Smallest admissible radius: the ball spans at least 2 cells per axis."""
    return float(fld.grid.spacing.max())


def dyadic_radii(r: float, floor: float) -> np.ndarray:
    if r < floor * (1 - 1e-12):
        raise DomainError(f"radius {r} is below the resolution floor {floor}")
    n = int(math.floor(math.log2(r / floor) + 1e-12)) + 1
    return r * 2.0 ** -np.arange(n)


def morrey_bracket(vec: np.ndarray, grid, x0, eta: float, p: float,
                   oscillation: bool) -> float:
    """``(η^{-1} ∫_{B_η(x0)} |u - ū_η|^p)^{1/p}`` (``ū_η`` only if ``oscillation``)."""
    v, w = ball_values(vec, grid, BallSpec(x0, eta))
    if oscillation:
        v = v - (v @ w / w.sum())[:, None]
    mag = np.sqrt(np.sum(v * v, axis=0))
    if np.isinf(p):
        return float(mag.max())
    return float((np.dot(w, mag ** p) / eta) ** (1.0 / p))


def morrey_sup(fld: SampledField, t: float, x0, r: float, p: float,
               oscillation: bool = False) -> MorreyProfile:
    if not p >= 2:
        raise ParameterError(f"Morrey exponent must be >= 2, got {p}")
    k = fld.time_index(t)
    radii = dyadic_radii(r, resolution_floor(fld))
    vals = np.array([morrey_bracket(fld.velocity[k], fld.grid, x0, e, p, oscillation)
                     for e in radii])
    return MorreyProfile(radii, vals, float(p), oscillation)


@dataclass(frozen=True)
class EmbeddingResult:
    lhs: float
    rhs_weak_norm: float
    ratio: float

    @property
    def degenerate(self) -> bool:
        """True when the weak norm vanishes but the Morrey side does not."""
        return math.isinf(self.ratio)


def embedding_check(fld: SampledField, t: float, x0, r: float, p: float) -> EmbeddingResult:
    """Compare the plain Morrey supremum with ``||u||_{L^{3p/2,∞}(B_r)}``."""
    if not 2 <= p < math.inf:
        raise ParameterError(f"embedding exponent must lie in [2, inf), got {p}")
    lhs = morrey_sup(fld, t, x0, r, p).supremum
    k = fld.time_index(t)
    rhs = weak_norm(ball_distribution(fld.speed(k), fld.grid, BallSpec(x0, r)), 1.5 * p)
    if rhs == 0:
        ratio = 0.0 if lhs == 0 else math.inf
    else:
        ratio = lhs / rhs
    return EmbeddingResult(lhs, rhs, ratio)
