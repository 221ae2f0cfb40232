import math

import numpy as np
import pytest

from nssl.field import CylinderSpec, DomainError, Grid, ParameterError
from nssl.invariants import _integrate_linear, invariants, rescale
from nssl.morrey import morrey_sup
from nssl.synth import GeneratorSpec, generate

from conftest import constant_field, make_field

VOL = 4 * math.pi / 3


class TestInvariants:
    def test_zero_field(self):
        fld = constant_field((0, 0, 0), n=16, nt=5, pressure=lambda t, X, Y, Z: 0 * X)
        rep = invariants(fld, CylinderSpec(1.0, (0, 0, 0), 0.5))
        assert (rep.A, rep.B, rep.C, rep.D) == (0, 0, 0, 0)

    def test_constant_field_closed_forms(self):
        c, P, r = np.array([1.0, 2.0, 2.0]), -1.5, 0.6
        fld = constant_field(c, n=48, box=(-1, 1), nt=9, t_range=(0.0, 1.0),
                             pressure=lambda t, X, Y, Z: P + 0 * X)
        rep = invariants(fld, CylinderSpec(1.0, (0, 0, 0), r))
        vol = VOL * r ** 3
        assert rep.A == pytest.approx(9 * vol / r, rel=5e-3)
        assert rep.B == 0
        # time length r², so C = r^{-2} r² |u|³ vol
        assert rep.C == pytest.approx(27 * vol, rel=5e-3)
        assert rep.D == pytest.approx(abs(P) ** 1.5 * vol, rel=5e-3)
        assert rep.flags == []

    def test_no_pressure_flag(self):
        rep = invariants(constant_field(n=8, nt=5), CylinderSpec(1.0, (0, 0, 0), 0.5))
        assert rep.D is None and "no_pressure" in rep.flags

    def test_clipped_window(self):
        fld = constant_field(n=12, nt=5, t_range=(0.0, 1.0))
        rep = invariants(fld, CylinderSpec(0.5, (0, 0, 0), 0.9))
        assert rep.clipped and "clipped" in rep.flags

    def test_too_few_samples(self):
        fld = constant_field(n=8, nt=3)
        with pytest.raises(DomainError):
            invariants(fld, CylinderSpec(1.0, (0, 0, 0), 0.1))

    def test_linear_time_integration_exact(self):
        t = np.array([0.0, 0.5, 1.0])
        v = np.array([0.0, 1.0, 0.0])
        assert _integrate_linear(t, v, 0.25, 1.0) == pytest.approx(0.5 - 0.0625)

    def test_json_roundtrip(self):
        fld = constant_field(n=8, nt=5)
        rep = invariants(fld, CylinderSpec(1.0, (0, 0, 0), 0.5))
        import json
        d = json.loads(rep.to_json())
        assert d["x0"] == [0, 0, 0] and d["samples_used"] == rep.samples_used


class TestRescale:
    def test_identity(self, beltrami32):
        g = rescale(beltrami32, 1.0)
        assert np.array_equal(g.velocity, beltrami32.velocity)
        same = rescale(beltrami32, 1.0, target=beltrami32.grid)
        assert np.allclose(same.velocity, beltrami32.velocity, atol=1e-12)

    def test_constant_doubles(self):
        fld = constant_field((1.0, -1.0, 0.5), n=8)
        g = rescale(fld, 2.0, target=fld.grid, t_range=(0.0, 0.25))
        assert np.allclose(g.velocity, 2 * fld.velocity)

    def test_inverse_radial_fixed_point(self):
        spec = GeneratorSpec("inverse_radial", {"c": 1.0, "direction": "radial"},
                             (32, 32, 32, 2), box=[-1, 1] * 3)
        fld = generate(spec)
        g = rescale(fld, 2.0)
        # exact relabelling: node values of u_λ on the scaled grid equal λ u(λ x) = c/|x|
        X, Y, Z = g.grid.mesh()
        R = np.sqrt(X ** 2 + Y ** 2 + Z ** 2)
        far = R > 0.25
        speed = np.sqrt((g.velocity[0] ** 2).sum(0))
        assert np.allclose(speed[far], 1 / R[far], rtol=0.05)

    @pytest.mark.parametrize("lam", [2.0, 4.0])
    def test_invariance_on_beltrami(self, lam):
        fld = generate(GeneratorSpec("beltrami_abc", {}, (48, 48, 48, 9), t_range=(0.0, 1.0)))
        t0, x0, r = 1.0, (0.3, -0.4, 0.2), 1.0
        base = invariants(fld, CylinderSpec(t0, x0, r), "auto")
        for g in (rescale(fld, lam), rescale(fld, lam, target=fld.grid)):
            rep = invariants(g, CylinderSpec(t0 / lam ** 2, tuple(v / lam for v in x0), r / lam),
                             "auto")
            for name in "ABCD":
                assert getattr(rep, name) == pytest.approx(getattr(base, name), rel=0.05)

    def test_morrey_p2_invariant_other_p_scales(self, beltrami32):
        lam = 2.0
        g = rescale(beltrami32, lam)
        for p in (2.0, 4.0):
            a = morrey_sup(beltrami32, 1.0, (0, 0, 0), 1.0, p).supremum
            b = morrey_sup(g, 1.0 / lam ** 2, (0, 0, 0), 1.0 / lam, p).supremum
            assert b == pytest.approx(a * lam ** (1 - 2 / p), rel=1e-9)

    def test_bad_lambda(self, beltrami32):
        with pytest.raises(ParameterError):
            rescale(beltrami32, 0.0)

    def test_out_of_range_time(self):
        fld = constant_field(n=8, nt=3, t_range=(0.0, 1.0))
        with pytest.raises(DomainError):
            rescale(fld, 2.0, target=fld.grid, t_range=(0.0, 1.0))
