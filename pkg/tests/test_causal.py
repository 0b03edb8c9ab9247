import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavelab import causal
from wavelab.causal import EventSet
from wavelab.errors import DomainError
from wavelab.manifold import Grid, desitter_type, minkowski_cylinder

from conftest import SPACETIMES, make_grid

PI = math.pi


def gd_oracle(t):
    return float(2 * mpmath.atan(mpmath.tanh(mpmath.mpf(t) / 2)))


@pytest.fixture(scope="module")
def mink():
    # dt = 1/40, dx = 2 pi / 256
    return Grid(minkowski_cylinder(0, 2), 81, (256,))


def slice_dist(grid, x0):
    d = np.abs(grid.x[0] - x0)
    return np.minimum(d, 2 * PI - d)


def test_minkowski_unit_cone(mink):
    J = causal.causal_future((0.0, PI), mink)
    n = mink.locate((1.0, PI))[0]
    d = slice_dist(mink, PI)
    h = 0.5 * mink.dx[0]
    row = J.mask[n]
    assert row[d <= 1.0].all()
    assert not row[d > 1.0 + h + 1e-9].any()
    assert J.frontier[n] == pytest.approx(1.0, abs=1e-14)


def test_desitter_cone_radius_matches_gd():
    g = Grid(desitter_type(0, 2), 2001, (512,))
    J = causal.causal_future((0.0, PI), g)
    n = g.locate((1.0, PI))[0]
    assert J.frontier[n] == pytest.approx(gd_oracle(1.0), abs=1e-6)
    assert gd_oracle(1.0) == pytest.approx(0.865769, abs=1e-6)
    d = slice_dist(g, PI)
    assert J.mask[n][d <= gd_oracle(1.0)].all()
    assert not J.mask[n][d > gd_oracle(1.0) + g.dx[0]].any()


def test_full_slice_future_is_everything_later(mink):
    n0 = 30
    J = causal.causal_future(EventSet.slice(mink, n0), mink)
    assert J.mask[n0:].all() and not J.mask[:n0].any()


def test_empty_source_gives_empty_set(mink):
    assert causal.causal_future(EventSet.empty(mink), mink).is_empty


def test_chronological_future(mink):
    I = causal.chronological_future((0.0, PI), mink)
    J = causal.causal_future((0.0, PI), mink)
    src = mink.locate((0.0, PI))
    assert src in J and src not in I
    n = mink.locate((1.0, PI))[0]
    d = slice_dist(mink, PI)
    h = 0.5 * mink.dx[0]
    assert I.mask[n][d < 1.0 - h - 1e-9].all()
    assert not I.mask[n][d >= 1.0].any()
    assert I.subset_of(J)


def test_minkowski_diamond(mink):
    D = causal.causal_diamond((0.0, PI), (1.0, PI), mink)
    assert not D.empty and D.compact
    h = 0.5 * mink.dx[0]
    d = slice_dist(mink, PI)
    for n in range(0, 41):
        t = mink.t[n]
        inside = d <= min(t, 1 - t)
        assert D.events.mask[n][inside].all()
        assert not D.events.mask[n][d > min(t, 1 - t) + h + 1e-9].any()
    assert not D.events.mask[41:].any()


def test_spacelike_diamond_is_empty(mink):
    D = causal.causal_diamond((0.0, 0.0), (1.0, PI), mink)
    assert D.empty and D.events.is_empty


def test_desitter_diamond_extent():
    g = Grid(desitter_type(0, 2), 2001, (1024,))
    D = causal.causal_diamond((0.0, PI), (2.0, PI), g)
    n = g.locate((1.0, PI))[0]
    cells = D.events.slice_cells(n)
    expect = min(gd_oracle(1.0), gd_oracle(2.0) - gd_oracle(1.0))
    assert expect == pytest.approx(0.4360, abs=1e-4)
    width = cells * g.dx[0]
    assert abs(width - 2 * expect) <= 3 * g.dx[0]


def test_achronal_examples():
    g = Grid(minkowski_cylinder(0, 6), 61, (128,))
    x = g.x[0]
    assert causal.is_achronal(np.full(128, 3.0), g)
    assert causal.is_acausal(np.full(128, 3.0), g)
    assert causal.is_achronal(3 + 0.5 * np.cos(x), g)
    assert not causal.is_achronal(3 + 2 * np.cos(x), g)


def test_cauchy_graph_examples():
    g = Grid(minkowski_cylinder(0, 6), 61, (128,))
    x = g.x[0]
    assert causal.is_cauchy_graph(np.full(128, 3.0), g)
    assert causal.is_cauchy_graph(3 + 0.5 * np.cos(x), g)
    half = np.full(128, 3.0)
    half[64:] = np.nan
    rep = causal.is_cauchy_graph(half, g)
    assert not rep and "undefined" in rep.reason
    with pytest.raises(DomainError):
        causal.is_achronal(np.full(128, 7.0), g)


def test_conformal_invariance_examples():
    g = Grid.from_cfl(minkowski_cylinder(0, 2), (64,))
    assert causal.conformal_invariance_check(g.coords((0, 10)), g.spec, 1.0, g)
    assert causal.conformal_invariance_check(g.coords((0, 10)), g.spec, 7.0, g)
    gd = Grid.from_cfl(desitter_type(0, 2), (64,))
    assert causal.conformal_invariance_check((0.0, 0.0), gd.spec, 0.3, gd)
    with pytest.raises(DomainError):
        causal.conformal_invariance_check((0.0, 0.0), gd.spec, 0.0, gd)


def test_past_compact_trace(mink):
    A = causal.causal_future(EventSet.slice(mink, 40), mink)
    assert causal.past_compact_trace(A, mink.coords((20, 41)), mink).is_empty
    Jp = causal.causal_future((0.0, PI), mink)
    trace = causal.past_compact_trace(Jp, (1.0, PI), mink)
    assert trace == causal.causal_diamond((0.0, PI), (1.0, PI), mink).events
    K = EventSet.from_nodes(mink, [(0, 61), (0, 183)])
    row = causal.causal_future(K, mink).mask[20]
    d1, d2 = slice_dist(mink, mink.x[0][61]), slice_dist(mink, mink.x[0][183])
    reach = 0.5 + 0.5 * mink.dx[0] + 1e-9
    assert np.array_equal(row, (d1 <= reach) | (d2 <= reach))


def test_causal_time_separation_desitter():
    spec = desitter_type(0, 3)
    tau = causal.causal_time_separation(spec, 0.5, 0.4)
    assert gd_oracle(0.5 + tau) - gd_oracle(0.5) == pytest.approx(0.4, abs=1e-12)
    assert causal.causal_time_separation(spec, 0.5, 2.0) == math.inf


def test_frontier_radii_follow_gd_at_high_resolution():
    g = Grid(desitter_type(0, 4), 4097, (64,))
    r = causal.frontier_radii(g, 0)
    for t in (1.0, 2.0, 3.0):
        assert abs(r[g.locate((t, 0.0))[0]] - gd_oracle(t)) <= 1e-4
    assert r.max() < PI / 2


def test_frontier_additivity():
    g = Grid(desitter_type(0, 3), 601, (32,))
    r0 = causal.frontier_radii(g, 0)
    r1 = causal.frontier_radii(g, 200)
    # r(t2) measured from t0 = r(t1) from t0 + r(t2) from t1
    for n in (300, 450, 600):
        assert r0[n] == pytest.approx(r0[200] + r1[n], abs=1e-15)


sources = st.lists(st.tuples(st.integers(0, 40), st.integers(0, 63)), min_size=1, max_size=4)


@settings(max_examples=40, deadline=None)
@given(nodes=sources, name=st.sampled_from(sorted(SPACETIMES)))
def test_chronological_inside_causal(nodes, name):
    g = make_grid(name, -1.0, 1.0, 64)
    nodes = [(n % g.Nt, i) for n, i in nodes]
    A = EventSet.from_nodes(g, nodes)
    assert causal.chronological_future(A, g).subset_of(causal.causal_future(A, g))
    assert causal.chronological_past(A, g).subset_of(causal.causal_past(A, g))


@settings(max_examples=40, deadline=None)
@given(nodes=sources, name=st.sampled_from(sorted(SPACETIMES)))
def test_past_is_reflected_future(nodes, name):
    g = make_grid(name, -1.0, 1.5, 64)
    nodes = [(n % g.Nt, i) for n, i in nodes]
    A = EventSet.from_nodes(g, nodes)
    rg = g.reflected()
    rA = EventSet.from_nodes(rg, [(g.Nt - 1 - n, i) for n, i in nodes])
    assert np.array_equal(causal.causal_past(A, g).mask, causal.causal_future(rA, rg).mask[::-1])


@settings(max_examples=60, deadline=None)
@given(x=st.tuples(st.integers(0, 40), st.integers(0, 63)), y=st.tuples(st.integers(0, 40), st.integers(0, 63)),
       name=st.sampled_from(sorted(SPACETIMES)))
def test_symmetric_queries(x, y, name):
    g = make_grid(name, 0.0, 2.0, 64)
    x = (x[0] % g.Nt, x[1])
    y = (y[0] % g.Nt, y[1])
    a = y in causal.causal_future(EventSet.from_nodes(g, [x]), g)
    b = x in causal.causal_past(EventSet.from_nodes(g, [y]), g)
    assert a == b


@settings(max_examples=30, deadline=None)
@given(nodes=sources, kappa=st.sampled_from([1e-3, 1.0, 1e3]), name=st.sampled_from(sorted(SPACETIMES)))
def test_conformal_invariance_exact(nodes, kappa, name):
    g = make_grid(name, 0.0, 3.0, 64)
    A = EventSet.from_nodes(g, [(n % g.Nt, i) for n, i in nodes])
    assert causal.conformal_invariance_check(A, g.spec, kappa, g)


def test_diamond_duality_under_reflection(rng):
    for name in SPACETIMES:
        g = make_grid(name, 0.0, 2.0, 64)
        rg = g.reflected()
        for _ in range(5):
            p = (int(rng.integers(0, g.Nt // 3)), int(rng.integers(64)))
            q = (int(rng.integers(2 * g.Nt // 3, g.Nt)), int(rng.integers(64)))
            a = causal.causal_diamond(g.coords(p), g.coords(q), g).events.mask
            rp = rg.coords((g.Nt - 1 - q[0], q[1]))
            rq = rg.coords((g.Nt - 1 - p[0], p[1]))
            b = causal.causal_diamond(rp, rq, rg).events.mask[::-1]
            assert np.array_equal(a, b)


def test_future_is_monotone_in_time(mink):
    J = causal.causal_future((0.0, PI), mink)
    counts = [J.slice_cells(n) for n in range(mink.Nt)]
    assert all(b >= a for a, b in zip(counts, counts[1:]))
