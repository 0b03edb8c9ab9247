import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavelab.errors import CFLError, DomainError, UnsupportedOrderError
from wavelab.manifold import (
    Grid, SpacetimeSpec, SpatialManifold, TimeFunction, desitter_type, light_speed,
    metric_data, minkowski_cylinder, node_index, validate, volume_weight,
)

from conftest import rescaled


def test_metric_data_minkowski_and_desitter_at_zero():
    for spec in (minkowski_cylinder(), desitter_type()):
        assert metric_data(spec, 0.0).astuple() == (1.0, 1.0, -1.0, 1.0, 1.0)


def test_metric_data_desitter_at_one_against_mpmath():
    m = metric_data(desitter_type(0, 2), 1.0)
    c = float(mpmath.cosh(1))
    assert m.warp == pytest.approx(c, rel=1e-15)
    assert m.g_xx_inv == pytest.approx(1 / c**2, rel=1e-15)
    assert m.vol_density == pytest.approx(c, rel=1e-15)


def test_metric_data_outside_slab():
    with pytest.raises(DomainError):
        metric_data(minkowski_cylinder(0, 1), 1.5)


def test_light_speed_examples():
    assert light_speed(minkowski_cylinder(), 0.3) == 1.0
    assert light_speed(rescaled(), 0.7) == 2.0
    assert light_speed(desitter_type(0, 2), 1.0) == pytest.approx(float(1 / mpmath.cosh(1)), rel=1e-15)
    assert light_speed(desitter_type(0, 2), 1.0) == pytest.approx(0.648054, abs=1e-6)


def _grid_with_spacing(spec, h):
    Nt = int(round((spec.t_max - spec.t_min) / h)) + 1
    Nx = int(round(spec.spatial.lengths[0] / h))
    return Grid(spec, Nt, (Nx,))


def test_volume_weight_examples():
    spec = SpacetimeSpec(SpatialManifold((6.4,)), t_min=0.0, t_max=2.0)
    g = _grid_with_spacing(spec, 0.1)
    assert volume_weight(g, (5, 3)) == pytest.approx(0.01, rel=1e-12)
    spec4 = SpacetimeSpec(SpatialManifold((6.4,)), TimeFunction.constant(4.0), t_min=0.0, t_max=2.0)
    assert volume_weight(_grid_with_spacing(spec4, 0.1), (5, 3)) == pytest.approx(0.02, rel=1e-12)
    specd = SpacetimeSpec(SpatialManifold((6.4,)), warp=TimeFunction.cosh(), t_min=0.0, t_max=2.0)
    gd = _grid_with_spacing(specd, 0.1)
    assert volume_weight(gd, (10, 0)) == pytest.approx(0.01 * math.cosh(1.0), rel=1e-12)


def test_end_rows_carry_half_weight():
    g = Grid(minkowski_cylinder(0, 1), 11, (8,))
    assert volume_weight(g, (0, 0)) == pytest.approx(0.5 * volume_weight(g, (1, 0)))
    assert g.weights.sum() == pytest.approx(2 * math.pi, rel=1e-14)


def test_validate_ok_and_certificate():
    spec = minkowski_cylinder(0, 1)
    rep = validate(spec, Grid.from_cfl(spec, (64,)))
    assert rep.ok and "Cauchy hypersurface" in rep.certificate


def test_validate_reports_sign_change():
    spec = SpacetimeSpec(beta=TimeFunction.polynomial([1.0, -2.0]), t_min=0.0, t_max=1.0)
    rep = validate(spec)
    assert not rep.ok
    assert "beta not positive" in rep.failures[0]
    # first offending sample sits at (or just past) t = 0.5
    first = float(rep.failures[0].split("t = ")[1].split(",")[0])
    assert first == pytest.approx(0.5, abs=1e-3)


def test_validate_cfl_failure():
    dx = 2 * math.pi / 64
    spec = minkowski_cylinder(0, 10 * 0.9 * dx)
    g = Grid(spec, 11, (64,), eta=0.8)
    assert g.cfl_number == pytest.approx(0.9, rel=1e-14)
    rep = validate(spec, g)
    assert not rep.ok and rep.failures[0].startswith("CFL")
    with pytest.raises(CFLError) as exc:
        g.check_cfl()
    assert exc.value.required_dt == pytest.approx(0.8 * dx)


def test_grid_rejects_small_sizes():
    with pytest.raises(ValueError):
        Grid(minkowski_cylinder(), 2, (8,))
    with pytest.raises(ValueError):
        Grid(minkowski_cylinder(), 5, (3,))


def test_from_cfl_respects_margin():
    for spec in (minkowski_cylinder(0, 3), desitter_type(-2, 2), rescaled(0, 1)):
        g = Grid.from_cfl(spec, (100,), 0.8)
        assert g.cfl_number <= 0.8
        assert Grid(spec, g.Nt - 1, (100,)).cfl_number > 0.8


def test_time_nodes_reflect_exactly():
    g = Grid(desitter_type(-0.3, 1.7), 37, (8,))
    assert np.array_equal(g.reflected().t, -g.t[::-1])


def test_locate_and_node_index():
    g = Grid(minkowski_cylinder(0, 1), 11, (8,))
    assert g.locate((0.5, math.pi / 2)) == (5, 2)
    with pytest.warns(UserWarning):
        assert g.locate((0.52, math.pi / 2)) == (5, 2)
    with pytest.raises(DomainError):
        g.locate((0.52, 0.0), strict=True)
    assert node_index(g, (3, 7)) == (3, 7)
    with pytest.raises(DomainError):
        node_index(g, (11, 0))


def test_tabulated_derivative_limit():
    tf = TimeFunction.tabulated([0, 1, 2, 3], [1, 2, 1.5, 1])
    assert tf(1.0) == pytest.approx(2.0)
    with pytest.raises(UnsupportedOrderError):
        tf(1.0, 4)


def test_reflected_time_function():
    tf = TimeFunction.polynomial([1.0, 0.5, 0.25])
    r = tf.reflect()
    t = np.linspace(-1, 1, 11)
    assert np.array_equal(r(t), tf(-t))
    assert np.array_equal(r(t, 1), -tf(-t, 1))


def test_spec_roundtrip():
    spec = SpacetimeSpec(SpatialManifold((3.0, 4.0)), TimeFunction.polynomial([2, 0.1]),
                         TimeFunction.cosh(), -1.0, 2.0)
    assert SpacetimeSpec.from_dict(spec.to_dict()) == spec


kappas = st.floats(min_value=1e-3, max_value=1e3)
times = st.floats(min_value=-2.0, max_value=2.0)


@settings(max_examples=200, deadline=None)
@given(kappa=kappas, t=times)
def test_conformal_scaling_keeps_light_speed(kappa, t):
    for spec in (desitter_type(-2, 2), SpacetimeSpec(beta=TimeFunction.polynomial([3, 0.5, 0.2]),
                                                     warp=TimeFunction.cosh(), t_min=-2, t_max=2)):
        c = light_speed(spec, t)
        ck = light_speed(spec.conformal(kappa), t)
        assert abs(ck - c) <= 4 * np.spacing(c)


@settings(max_examples=50, deadline=None)
@given(kappa=kappas)
def test_volume_weight_scaling(kappa):
    spec = desitter_type(0, 1, (6.0, 5.0))
    g = Grid(spec, 9, (6, 5))
    gk = g.with_spec(spec.conformal(kappa))
    ratio = gk.weights / g.weights
    assert np.allclose(ratio, kappa ** 1.5, rtol=1e-13)


@settings(max_examples=100, deadline=None)
@given(t=times)
def test_inverse_metric_identities(t):
    spec = SpacetimeSpec(beta=TimeFunction.polynomial([3, 0.5, 0.2]), warp=TimeFunction.cosh(),
                         t_min=-2, t_max=2)
    m = metric_data(spec, t)
    assert m.g_tt_inv * -m.beta == pytest.approx(1.0, abs=2e-16)
    assert m.g_xx_inv * m.warp**2 == pytest.approx(1.0, abs=2e-16)
