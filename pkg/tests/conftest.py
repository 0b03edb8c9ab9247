import math

import numpy as np
import pytest

from wavelab.manifold import Grid, SpacetimeSpec, SpatialManifold, TimeFunction, desitter_type, minkowski_cylinder

TWO_PI = 2 * math.pi


def rescaled(t_min=0.0, t_max=1.0):
    return SpacetimeSpec(SpatialManifold((TWO_PI,)), TimeFunction.constant(4.0),
                         TimeFunction.constant(1.0), t_min, t_max)


SPACETIMES = {
    "minkowski": minkowski_cylinder,
    "rescaled": rescaled,
    "desitter": desitter_type,
}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(SPACETIMES))
def spacetime_name(request):
    return request.param


def make_grid(name, t_min=0.0, t_max=2.0, Nx=64, eta=0.8):
    return Grid.from_cfl(SPACETIMES[name](t_min, t_max), (Nx,), eta)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
