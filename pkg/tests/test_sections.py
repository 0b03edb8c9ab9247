import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from wavelab import sections as S
from wavelab.errors import ShapeError, UnsupportedOrderError
from wavelab.manifold import Grid, desitter_type, minkowski_cylinder
from wavelab.operators import connection_dalembert, dalembert

from conftest import make_grid


@pytest.fixture(scope="module")
def grid():
    return Grid(minkowski_cylinder(0, 1), 41, (64,))


def test_volume_of_slab_minkowski(grid):
    T = S.from_section(np.ones(grid.shape), grid)
    assert T(np.ones(grid.shape))[0] == pytest.approx(2 * math.pi, rel=1e-14)


def test_volume_of_slab_desitter():
    g = Grid(desitter_type(0, 1), 401, (32,))
    T = S.from_section(np.ones(g.shape), g)
    exact = 2 * math.pi * integrate.quad(math.cosh, 0, 1)[0]
    assert T(np.ones(g.shape))[0].real == pytest.approx(exact, rel=1e-5)


def test_regular_pairing_is_hermitian_integral(grid):
    # int_0^1 int conj(i t) sin^2 x dx dt = -i pi / 2; trapezoid is exact here
    Tg, X = grid.mesh()
    T = S.from_section(1j * Tg, grid)
    assert T(np.sin(X) ** 2)[0] == pytest.approx(-0.5j * math.pi, abs=1e-13)


def test_delta_evaluates(grid, rng):
    phi = rng.normal(size=grid.shape + (2,)) + 1j * rng.normal(size=grid.shape + (2,))
    d = S.delta(grid, (7, 11), rank=2)
    assert d.dim_w == 2
    assert np.array_equal(d(phi), phi[7, 11])


def test_first_difference_on_sine(grid):
    X = grid.mesh()[1]
    i = 10
    val = S.first_difference(grid, (5, i))(np.sin(X))[0]
    h = grid.dx[0]
    assert val == pytest.approx(math.cos(grid.x[0][i]) * math.sin(h) / h, abs=1e-14)


def test_first_difference_support_is_two_neighbours(grid):
    supp = S.support(S.first_difference(grid, (5, 0)))
    assert supp.nodes().tolist() == [[5, 1], [5, 63]]


def test_multiply_moves_function_to_test_side(grid, rng):
    T = S.from_section(rng.normal(size=grid.shape), grid)
    f = rng.normal(size=grid.shape)
    phi = rng.normal(size=grid.shape)
    assert S.multiply(T, f)(phi) == pytest.approx(T(f * phi), rel=1e-13)


def test_operator_on_delta_is_transpose(grid, rng):
    P = dalembert(grid.spec)
    D = P.discretize(grid)
    phi = rng.normal(size=grid.shape + (1,))
    PT = S.apply_op_to_distribution(P, S.delta(grid, (20, 30)))
    assert PT(phi)[0] == pytest.approx(D.apply_transpose(phi)[20, 30, 0], rel=1e-12)


def test_operator_on_regular_distribution_matches_regular_of_operator(rng):
    g = make_grid("desitter", 0.0, 1.0, 48)
    P = connection_dalembert(g.spec, {"t": "0.3*I", "x": "0.5*I*sin(x)"}, 1)
    D = P.discretize(g)
    u = np.zeros(g.shape + (1,), complex)
    u[3:-3] = rng.normal(size=(g.Nt - 6, 48, 1))
    phi = rng.normal(size=g.shape + (1,)) + 1j * rng.normal(size=g.shape + (1,))
    lhs = S.apply_op_to_distribution(P, S.from_section(u, g))(phi)[0]
    # T_u[P^T phi] = <u, P^T phi>_W = <P u, phi>_W
    rhs = S.from_section(D.apply(u), g)(phi)[0]
    assert abs(lhs - rhs) <= 1e-11 * abs(rhs)


def test_support_of_zero_and_tau_bounds(grid):
    assert S.support(S.GridSection.zeros(grid)).is_empty
    with pytest.raises(ValueError):
        S.support(S.GridSection.zeros(grid), tau=1.0)


def test_shape_and_finiteness_errors(grid):
    with pytest.raises(ShapeError):
        S.GridSection(grid, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        S.GridSection(grid, np.full(grid.shape, np.nan))
    d = S.delta(grid, (0, 0))
    with pytest.raises(ShapeError):
        d(np.zeros(grid.shape + (2,)))
    other = Grid(minkowski_cylinder(0, 1), 41, (32,))
    with pytest.raises(ShapeError):
        d(S.GridSection.zeros(other))


def test_ck_norms_of_sine(grid):
    u = S.GridSection.from_function(grid, lambda t, x: np.sin(x))
    assert S.ck_norm(u, 0) == pytest.approx(1.0, abs=1e-3)
    # the j = 1 term alone is max |cos x| sin(h) / h, below the j = 0 term
    assert S.ck_norm(u, 1) == S.ck_norm(u, 0)
    v = S.GridSection.from_function(grid, lambda t, x: 2 * np.sin(x) + 0 * t)
    assert S.ck_norm(v, 1) == pytest.approx(2.0, abs=1e-3)
    assert S.ck_norm(u, 2) == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(UnsupportedOrderError):
        S.ck_norm(u, 5)


def test_ck_norm_counts_mixed_partials(grid):
    u = S.GridSection.from_function(grid, lambda t, x: t * t)
    assert S.ck_norm(u, 1) == pytest.approx(2.0, rel=1e-12)
    assert S.ck_norm(u, 2) == pytest.approx(2.0, rel=1e-12)
    mask = np.zeros(grid.shape, bool)
    mask[10] = True
    assert S.ck_norm(u, 1, mask) == pytest.approx(0.5, rel=1e-12)


def test_mollified_deltas_converge_weakly():
    g = Grid(minkowski_cylinder(0, 2), 201, (256,))
    node = (100, 128)
    Tlim = S.delta(g, node)
    T, X = g.mesh()
    battery = [np.cos(k * X) * np.exp(-(T - 1) ** 2 * k) for k in (1, 2, 3)]
    widths = [0.2, 0.1, 0.05, 0.025]
    rep = S.weak_limit_probe([S.mollified_delta(g, node, w) for w in widths], Tlim, battery,
                             P=dalembert(g.spec))
    assert rep.monotone and rep.bounded
    rates = [a / b for a, b in zip(rep.defects, rep.defects[1:])]
    assert all(3.0 < r < 4.5 for r in rates)


def test_mollified_delta_has_unit_mass(grid):
    m = S.mollified_delta(grid, (20, 32), 0.1)
    assert m(np.ones(grid.shape))[0] == pytest.approx(1.0, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(a=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       b=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       seed=st.integers(0, 2**32 - 1))
def test_pairing_is_bilinear(a, b, seed):
    g = Grid(minkowski_cylinder(0, 1), 9, (8,))
    r = np.random.default_rng(seed)
    T1 = S.from_section(r.normal(size=g.shape), g)
    T2 = S.delta(g, (int(r.integers(9)), int(r.integers(8))))
    phi, psi = r.normal(size=(2,) + g.shape)
    lhs = (T1 * a + T2 * b)(phi + 2 * psi)
    rhs = a * (T1(phi) + 2 * T1(psi)) + b * (T2(phi) + 2 * T2(psi))
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_support_of_sum_within_union(seed):
    g = Grid(minkowski_cylinder(0, 1), 9, (16,))
    r = np.random.default_rng(seed)
    u = np.where(r.random(g.shape) < 0.2, r.normal(size=g.shape), 0.0)
    v = np.where(r.random(g.shape) < 0.2, r.normal(size=g.shape), 0.0)
    A, B = S.from_section(u, g), S.from_section(v, g)
    tau = 1e-12
    union = S.support(A, tau) | S.support(B, tau)
    assert (S.support(A + B, tau).mask <= union.mask | (np.abs(u + v) == 0)).all()


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_operator_does_not_enlarge_support_beyond_stencil(seed):
    g = Grid(minkowski_cylinder(0, 1), 17, (16,))
    r = np.random.default_rng(seed)
    node = (int(r.integers(2, 15)), int(r.integers(16)))
    PT = S.apply_op_to_distribution(dalembert(g.spec), S.delta(g, node))
    n, i = node
    near = {((n + dn), (i + di) % 16) for dn, di in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1))}
    assert {tuple(v) for v in S.support(PT).nodes().tolist()} <= near
