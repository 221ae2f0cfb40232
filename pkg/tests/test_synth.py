import math

import numpy as np
import pytest

from nssl.field import BallSpec, ParameterError
from nssl.lorentz import ball_distribution, weak_norm
from nssl.synth import (GeneratorSpec, exact_energy_identity, generate, spectral_divergence,
                        volume_matched_radius, with_blowup_factor)


def test_spec_from_json():
    spec = GeneratorSpec.from_json(
        '{"kind": "constant", "params": {"c": [1, 2, 3]}, "dims": [4, 4, 4, 2]}')
    assert spec.kind == "constant" and spec.dims == (4, 4, 4, 2)


def test_unknown_kind():
    with pytest.raises((ParameterError, KeyError, ValueError)):
        generate(GeneratorSpec("vortex_ring", {}, (4, 4, 4, 2)))


def test_constant_kind():
    fld = generate(GeneratorSpec("constant", {"c": [1, 2, 3]}, (5, 4, 3, 2)))
    assert np.all(fld.velocity == np.array([1.0, 2.0, 3.0])[None, :, None, None, None])


@pytest.mark.parametrize("kind, params", [
    ("random_divfree", {"seed": 11}),
    ("beltrami_abc", {"A": 0.5}),
    ("leray_selfsimilar", {}),
    ("inverse_radial", {"c": 2.0}),
])
def test_deterministic(kind, params):
    spec = GeneratorSpec(kind, params, (12, 12, 12, 3))
    a, b = generate(spec), generate(spec)
    assert a.velocity.tobytes() == b.velocity.tobytes()


def test_seed_changes_field():
    a = generate(GeneratorSpec("random_divfree", {"seed": 1}, (8, 8, 8, 2)))
    b = generate(GeneratorSpec("random_divfree", {"seed": 2}, (8, 8, 8, 2)))
    assert not np.allclose(a.velocity, b.velocity)


class TestBeltrami:
    def test_energy_at_t0(self):
        fld = generate(GeneratorSpec("beltrami_abc", {}, (32, 32, 32, 2), t_range=(0.0, 1.0)))
        total = np.sum(fld.velocity[0] ** 2) * fld.grid.cell_volume
        assert total == pytest.approx(3 * (2 * math.pi) ** 3, rel=1e-12)

    def test_zero_coefficients(self):
        fld = generate(GeneratorSpec("beltrami_abc", {"A": 0, "B": 0, "C": 0}, (16, 16, 16, 5)))
        lhs, rhs = exact_energy_identity(fld)
        assert lhs == 0 and rhs == 0

    @pytest.mark.parametrize("k", [1.0, 2.0])
    def test_energy_identity(self, k):
        fld = generate(GeneratorSpec("beltrami_abc", {"wavenumber": k}, (64, 64, 64, 5),
                                     t_range=(0.0, 0.05 / k ** 2)))
        lhs, rhs = exact_energy_identity(fld)
        assert lhs / rhs == pytest.approx(1.0, abs=1e-3)

    def test_divergence_free_and_pressure(self):
        fld = generate(GeneratorSpec("beltrami_abc", {"wavenumber": 3.0}, (24, 24, 24, 2)))
        assert fld.grid.upper[0] == pytest.approx(math.pi / 3)
        assert np.abs(spectral_divergence(fld.velocity[1], fld.grid)).max() < 1e-12
        e = 0.5 * np.sum(fld.velocity[1] ** 2, axis=0)
        assert np.allclose(fld.pressure[1], -(e - e.mean()))


def test_random_divergence_spectral_zero():
    fld = generate(GeneratorSpec("random_divfree", {"seed": 5, "viscosity": 0.2},
                                 (20, 20, 20, 3)))
    for k in range(3):
        div = spectral_divergence(fld.velocity[k], fld.grid)
        assert np.abs(div).max() < 1e-12 * np.abs(fld.velocity[k]).max() * 20


def test_random_rms_amplitude():
    fld = generate(GeneratorSpec("random_divfree", {"seed": 0, "amplitude": 2.5}, (16, 16, 16, 2)))
    rms = math.sqrt(np.mean(np.sum(fld.velocity[0] ** 2, axis=0)))
    assert rms == pytest.approx(2.5)


class TestInverseRadial:
    def test_volume_matching_is_exact_on_shells(self):
        d = np.array([0.5, 1.0, 1.0, 2.0])
        R = volume_matched_radius(d, 1.0, inscribed=10.0)
        vol = 4 * math.pi / 3 * R ** 3
        assert np.allclose(vol, [1.0, 3.0, 3.0, 4.0])

    def test_weak_norm_oracle_128(self, radial128):
        curve = ball_distribution(radial128.speed(0), radial128.grid, BallSpec((0, 0, 0), 1.0))
        assert weak_norm(curve, 3) == pytest.approx((4 * math.pi / 3) ** (1 / 3), rel=0.02)

    def test_linear_in_c(self):
        a = generate(GeneratorSpec("inverse_radial", {"c": 1.0}, (16, 16, 16, 2)))
        b = generate(GeneratorSpec("inverse_radial", {"c": 3.0}, (16, 16, 16, 2)))
        assert np.allclose(b.velocity, 3 * a.velocity)

    def test_bad_direction(self):
        with pytest.raises(ParameterError):
            generate(GeneratorSpec("inverse_radial", {"direction": "spiral"}, (8, 8, 8, 2)))


class TestLeray:
    def test_type_one_rate(self):
        spec = GeneratorSpec("leray_selfsimilar", {"T": 1.0, "a": 0.5}, (64, 64, 64, 5),
                             t_range=(0.0, 0.9))
        fld = generate(spec)
        peak = np.array([fld.speed(k).max() for k in range(fld.nt)])
        tt = 1.0 - fld.times
        # |u|_max sqrt(T - t) is constant up to sampling of the shrinking profile
        scaled = peak * np.sqrt(tt)
        assert scaled.max() / scaled.min() < 1.1

    def test_blowup_time_after_interval(self):
        with pytest.raises(ParameterError):
            generate(GeneratorSpec("leray_selfsimilar", {"T": 0.5}, (8, 8, 8, 2)))


def test_blowup_factor_checks_time(beltrami32):
    with pytest.raises(ParameterError):
        with_blowup_factor(beltrami32, 1.0)
    g = with_blowup_factor(beltrami32, 2.0)
    assert np.allclose(g.velocity[0], beltrami32.velocity[0] / math.sqrt(2.0))
