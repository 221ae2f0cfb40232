import math

import numpy as np
import pytest

from nssl.field import Grid, SampledField
from nssl.synth import GeneratorSpec, generate


def make_field(fn, n=16, box=(-1.0, 1.0), nt=2, t_range=(0.0, 1.0), periodic=False,
               pressure=None):
    """Sample ``fn(t, X, Y, Z) -> (3, ...)`` on a cube lattice."""
    g = Grid((n, n, n), (box[0],) * 3, (box[1],) * 3, (periodic,) * 3)
    X, Y, Z = g.mesh()
    ts = np.linspace(*t_range, nt)
    vel = np.stack([np.broadcast_to(fn(t, X, Y, Z), (3,) + g.shape) for t in ts])
    pres = None
    if pressure is not None:
        pres = np.stack([np.broadcast_to(pressure(t, X, Y, Z), g.shape) for t in ts])
    return SampledField(g, t_range, vel, pres)


def constant_field(c=(1.0, 2.0, 3.0), **kw):
    c = np.asarray(c, dtype=float)
    return make_field(lambda t, X, Y, Z: c[:, None, None, None] * np.ones_like(X), **kw)


@pytest.fixture(scope="session")
def beltrami32():
    return generate(GeneratorSpec("beltrami_abc", {}, (32, 32, 32, 9), t_range=(0.0, 1.0)))


@pytest.fixture(scope="session")
def radial64():
    return generate(GeneratorSpec("inverse_radial", {"c": 1.0}, (64, 64, 64, 2)))


@pytest.fixture(scope="session")
def radial128():
    return generate(GeneratorSpec("inverse_radial", {"c": 1.0}, (128, 128, 128, 2)))


SQRT_4PI = math.sqrt(4 * math.pi)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
