import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nssl.detector import (DEFAULT_C_CAL, DEFAULT_DELTA_STAR, DetectionVerdict, c_decay_rhs,
                           calibrate_c_cal, concentration_p3, concentration_rate,
                           epsilon_regularity, iterate_decay, iteration_theta,
                           mean_oscillation_pair, oscillation_weak_norm, wolf_criterion,
                           wolf_passes)
from nssl.field import BallSpec, DomainError, ParameterError
from nssl.invariants import InvariantReport
from nssl.morrey import C_EMB
from nssl.synth import GeneratorSpec, generate, scaled

from conftest import constant_field, make_field


def report(A=0.0, B=0.0, C=0.0):
    return InvariantReport(0.0, (0, 0, 0), 1.0, A, B, C, None, 2)


class TestDecayRHS:
    def test_mid_regime_example(self):
        assert c_decay_rhs(3, 0.5, 1.0, report(A=5.0, C=1.0), 1.0, 1.0) == pytest.approx(2.5)

    def test_high_regime_zero_A(self):
        assert c_decay_rhs(math.inf, 0.25, 1.0, report(A=0.0, C=3.0), 2.0, 1.5) == pytest.approx(
            1.5 * 0.25 * 3.0)

    def test_subcritical_example(self):
        assert c_decay_rhs(2, 0.5, 1.0, report(B=16.0), 1.0, 1.0) == pytest.approx(32.0)

    def test_errors(self):
        with pytest.raises(ParameterError):
            c_decay_rhs(1.5, 0.5, 1.0, report(), 1.0, 1.0)
        with pytest.raises(ParameterError):
            c_decay_rhs(3, 1.0, 1.0, report(), 1.0, 1.0)


class TestIteration:
    def test_theta(self):
        assert iteration_theta(1.0) == 0.5
        assert iteration_theta(2.0) == 2.0 ** -7

    def test_no_forcing_is_geometric(self):
        st_ = iterate_decay(3.0, 1.2, 0.0, k_max=20)
        th = Fraction(st_.theta)
        assert st_.G_sequence == [float(th ** k * 3) for k in range(21)]

    def test_zero_start_closed_form(self):
        st_ = iterate_decay(0.0, 1.0, 0.25, k_max=12)
        th = Fraction(1, 2)
        want = [Fraction(1, 4) * (1 - th ** k) / (1 - th) for k in range(13)]
        assert [Fraction(g) for g in st_.G_sequence] == want
        assert all(a < b for a, b in zip(st_.G_sequence, st_.G_sequence[1:]))

    def test_first_index_within_twice_fixed_point(self):
        assert iterate_decay(1000.0, 2.0, 1.0).first_k_within == 2

    @settings(max_examples=200)
    @given(st.floats(0, 1e6), st.floats(1, 10), st.floats(0, 1e3))
    def test_bound_holds_exactly(self, G0, C, f):
        assert iterate_decay(G0, C, f, k_max=30).bound_holds

    def test_rejects_bad_input(self):
        with pytest.raises(ParameterError):
            iterate_decay(-1.0, 2.0, 0.0)
        with pytest.raises(ParameterError):
            iterate_decay(1.0, 0.5, 0.0)


class TestVerdict:
    def test_enum_checks(self):
        with pytest.raises(ValueError):
            DetectionVerdict((0, (0, 0, 0)), "wolf", 0.0, 1.0, "maybe", [("x", 1)])
        with pytest.raises(ValueError):
            DetectionVerdict((0, (0, 0, 0)), "oracle", 0.0, 1.0, "inconclusive", [("x", 1)])

    def test_json(self):
        v = DetectionVerdict((0.5, (1, 2, 3)), "wolf", math.inf, 1.0, "inconclusive", [("C", 2.0)])
        d = json.loads(v.to_json())
        assert d["z0"] == [0.5, [1, 2, 3]] and d["measured"] == "inf"


@pytest.fixture(scope="module")
def small_beltrami():
    fld = generate(GeneratorSpec("beltrami_abc", {}, (32, 32, 32, 65), t_range=(0.0, 1.0)))
    return scaled(fld, 1e-3)


@pytest.fixture(scope="module")
def leray():
    return generate(GeneratorSpec("leray_selfsimilar", {"T": 1.05}, (48, 48, 48, 24),
                                  t_range=(0.0, 1.0)))


class TestEpsilonRegularity:
    def test_zero_field(self):
        fld = constant_field((0, 0, 0), n=16, nt=17, box=(-2, 2))
        for variant in ("plain", "oscillation"):
            v = epsilon_regularity(fld, (1.0, (0, 0, 0)), 3.0, variant, r0=1.0)
            assert v.verdict == "regular_indicated" and v.measured == 0

    @pytest.mark.parametrize("x0", [(0, 0, 0), (1.0, -0.5, 2.0)])
    def test_small_beltrami_regular(self, small_beltrami, x0):
        v = epsilon_regularity(small_beltrami, (1.0, x0), 3.0, "plain", r0=1.0)
        assert v.measured <= v.threshold
        assert v.verdict == "regular_indicated"
        assert any(k == "r_star" for k, _ in v.trace)

    def test_unit_beltrami_not_small(self, beltrami32):
        v = epsilon_regularity(beltrami32, (1.0, (0, 0, 0)), 4.0, r0=0.9)
        assert v.verdict == "inconclusive" and v.measured > v.threshold

    def test_leray_never_regular(self, leray):
        v = epsilon_regularity(leray, (1.0, (0, 0, 0)), 3.0, "oscillation", r0=0.5)
        assert v.verdict != "regular_indicated"

    def test_window_must_be_covered(self, beltrami32):
        with pytest.raises(DomainError):
            epsilon_regularity(beltrami32, (0.5, (0, 0, 0)), 3.0, r0=1.0)


def test_wolf():
    assert wolf_passes(0.99e-9, 1e-3) and not wolf_passes(1.01e-9, 1e-3)
    fld = constant_field((0, 0, 0), n=16, nt=9)
    assert wolf_criterion(fld, (1.0, (0, 0, 0)), 0.5).verdict == "regular_indicated"


class TestConcentration:
    def test_zero_field(self):
        fld = constant_field((0, 0, 0), n=16, nt=9)
        v = concentration_rate(fld, (1.0, (0, 0, 0)), 0.5, math.inf, 2.0)
        assert v.measured == 0 and v.verdict == "regular_indicated"
        assert concentration_p3(fld, (1.0, (0, 0, 0)), 0.5).verdict == "regular_indicated"

    @pytest.mark.parametrize("factor", [1.0, 10.0])
    def test_leray_detected(self, leray, factor):
        v = concentration_rate(leray, (1.05, (0, 0, 0)), 0.5, math.inf, 2.0,
                               factor * DEFAULT_DELTA_STAR)
        assert v.verdict == "concentration_detected"

    @pytest.mark.parametrize("p, nu", [(math.inf, 2.0), (math.inf, 5.0), (6.0, 3.0), (4.0, 2.5)])
    def test_beltrami_never_detected(self, beltrami32, p, nu):
        v = concentration_rate(beltrami32, (1.0, (0.3, 0.2, 0.1)), 0.5, p, nu)
        assert v.verdict in ("regular_indicated", "inconclusive")
        assert concentration_p3(beltrami32, (1.0, (0.3, 0.2, 0.1)), 0.5).verdict != \
            "concentration_detected"

    def test_beltrami_proxy_decays_for_finite_mu(self):
        fld = generate(GeneratorSpec("beltrami_abc", {}, (16, 16, 16, 41), t_range=(0.0, 1.0)))
        v = concentration_rate(fld, (1.0, (0, 0, 0)), 0.5, math.inf, 4.0)
        vals = np.array([x for _, x in v.series])
        assert vals[-1] < 0.3 * vals[0]

    def test_parameter_ranges(self, beltrami32):
        z0 = (1.0, (0, 0, 0))
        with pytest.raises(ParameterError):
            concentration_rate(beltrami32, z0, 0.5, 3.0, 2.0)
        with pytest.raises(ParameterError):
            concentration_rate(beltrami32, z0, 0.5, 6.0, 4.5)
        with pytest.raises(ParameterError):
            concentration_rate(beltrami32, z0, 0.5, 6.0, 1.5)

    def test_needs_four_samples(self):
        fld = constant_field(n=8, nt=3)
        with pytest.raises(DomainError):
            concentration_rate(fld, (1.0, (0, 0, 0)), 0.5, math.inf, 2.0)

    def test_default_threshold(self):
        assert DEFAULT_DELTA_STAR == pytest.approx(1e-2 / C_EMB)


def test_oscillation_of_spatial_constant():
    fld = make_field(lambda t, X, Y, Z: (1 + t) * np.ones((3,) + X.shape), n=12, nt=6)
    for k in range(fld.nt):
        assert oscillation_weak_norm(fld.velocity[k], fld.grid, BallSpec((0, 0, 0), 0.7)) == \
            pytest.approx(0, abs=1e-12)


def test_mean_oscillation_identity():
    rng = np.random.default_rng(0)
    for seed in range(10):
        fld = generate(GeneratorSpec("random_divfree", {"seed": seed}, (16, 16, 16, 2)))
        ball = BallSpec(tuple(rng.uniform(-1, 1, 3)), float(rng.uniform(0.5, 1.5)))
        a, b = mean_oscillation_pair(fld.velocity[0], fld.grid, ball)
        assert a == pytest.approx(b, rel=1e-10)


def test_calibration():
    assert calibrate_c_cal([(0.1, 1.0), (0.5, 2.0)]) == 1.0
    assert calibrate_c_cal([(3.0, 1.0), (1.0, 0.0)]) == 3.0
    assert DEFAULT_C_CAL >= 1.0
