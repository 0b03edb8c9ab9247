"""Randomized invariant batteries behind ``wavelab check``.

Each suite takes a seeded generator and fills a :class:`Report`. Grids are
kept moderate so that ``check all`` finishes in well under a minute; the
acceptance tests exercise the same routines at full size.
"""

from __future__ import annotations

import math

import numpy as np
import sympy

from . import causal, cauchy, green, sections
from .errors import CFLError, PaddingError
from .manifold import Grid, SpacetimeSpec, SpatialManifold, TimeFunction, desitter_type, minkowski_cylinder
from .operators import (
    T, X, composed_symbol, connection_dalembert, dalembert, formal_adjoint,
    formal_adjoint_defect, metric_pairing, principal_symbol,
)
from .report import Report

__all__ = ["SUITES", "DEFAULT_SEED", "run_suite", "spacetimes", "random_bump", "bump_battery"]

DEFAULT_SEED = 20240611
TWO_PI = 2 * math.pi


def spacetimes(t_min: float = 0.0, t_max: float = 2.0) -> dict:
    """The three reference spacetimes on a common slab."""
    L = (TWO_PI,)
    return {
        "minkowski": minkowski_cylinder(t_min, t_max, L),
        "rescaled": SpacetimeSpec(SpatialManifold(L), TimeFunction.constant(4.0),
                                  TimeFunction.constant(1.0), t_min, t_max),
        "desitter": desitter_type(t_min, t_max, L),
    }


def operators_for(spec: SpacetimeSpec) -> dict:
    """``dalembert`` and a connection operator with a nontrivial unitary connection."""
    return {
        "box": dalembert(spec),
        "box_conn": connection_dalembert(spec, {"t": "0.3*I", "x": "0.5*I*sin(x)"}, 1),
    }


def random_bump(grid: Grid, rng: np.random.Generator, pad: int = 3, complex_: bool = True) -> np.ndarray:
    """Smooth random bump vanishing on ``pad`` slices at each time end."""
    t = grid.t
    span = t[-1] - t[0]
    t0, t1 = t[pad], t[-1 - pad]
    tc = rng.uniform(t0 + 0.3 * (t1 - t0), t1 - 0.3 * (t1 - t0))
    wt = rng.uniform(0.05, 0.12) * span
    prof_t = np.exp(-0.5 * ((t - tc) / wt) ** 2)
    prof_t[:pad] = 0
    prof_t[-pad:] = 0
    L = grid.spec.spatial.lengths[0]
    x = grid.x[0]
    xc = rng.uniform(0, L)
    wx = rng.uniform(0.2, 0.5)
    d = (x - xc + L / 2) % L - L / 2
    prof_x = np.exp(-0.5 * (d / wx) ** 2)
    amp = rng.normal() + (1j * rng.normal() if complex_ else 0)
    return (amp * prof_t[:, None] * prof_x[None, :])[..., None]


def random_section(grid: Grid, rng: np.random.Generator, pad: int = 2) -> np.ndarray:
    """White-noise section (complex) with ``pad`` zero slices at each end."""
    v = rng.normal(size=grid.shape + (1,)) + 1j * rng.normal(size=grid.shape + (1,))
    v[:pad] = 0
    v[grid.Nt - pad:] = 0
    return v


def bump_battery(grid: Grid, rng: np.random.Generator, n: int, pad: int = 3) -> list:
    return [random_bump(grid, rng, pad) for _ in range(n)]


def _slab_grid(spec: SpacetimeSpec, Nx: int, eta: float = 0.8) -> Grid:
    return Grid.from_cfl(spec, (Nx,), eta)


# -- causal ------------------------------------------------------------------------


def _random_sources(grid: Grid, rng: np.random.Generator, count: int) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    n = rng.integers(0, grid.Nt // 2, size=count)
    i = rng.integers(0, grid.Nx[0], size=count)
    mask[n, i] = True
    return mask


def suite_causal(rep: Report, rng: np.random.Generator) -> None:
    differing = 0
    for name, spec in spacetimes(0.0, 3.0).items():
        grid = _slab_grid(spec, 96)
        for _ in range(10):
            A = _random_sources(grid, rng, int(rng.integers(1, 4)))
            for kappa in (1e-3, 1.0, 1e3):
                base = causal.causal_future(A, grid).mask
                other = causal.causal_future(A, grid.with_spec(spec.conformal(kappa))).mask
                differing += int(np.count_nonzero(base != other))
                if not causal.conformal_invariance_check(A, spec, kappa, grid):
                    differing += 1
    rep.check("conformal_invariance_differing_cells", differing, tolerance=0)

    subset_viol = 0
    reflect_diff = 0
    symmetric_mismatch = 0
    for name, spec in spacetimes(-1.5, 1.5).items():
        grid = _slab_grid(spec, 96)
        rgrid = grid.reflected()
        for _ in range(5):
            A = _random_sources(grid, rng, 3)
            Jp = causal.causal_future(A, grid).mask
            Jm = causal.causal_past(A, grid).mask
            Ip = causal.chronological_future(A, grid).mask
            Im = causal.chronological_past(A, grid).mask
            subset_viol += int(np.count_nonzero(Ip & ~Jp)) + int(np.count_nonzero(Im & ~Jm))
            refl = causal.causal_future(A[::-1], rgrid).mask[::-1]
            reflect_diff += int(np.count_nonzero(refl != Jm))
        for _ in range(40):
            x = (int(rng.integers(grid.Nt)), int(rng.integers(grid.Nx[0])))
            y = (int(rng.integers(grid.Nt)), int(rng.integers(grid.Nx[0])))
            a = y in causal.causal_future(causal.EventSet.from_nodes(grid, [x]), grid)
            b = x in causal.causal_past(causal.EventSet.from_nodes(grid, [y]), grid)
            symmetric_mismatch += int(a != b)
    rep.check("chronological_subset_violations", subset_viol, tolerance=0)
    rep.check("time_reflection_differing_cells", reflect_diff, tolerance=0)
    rep.check("symmetric_query_mismatches", symmetric_mismatch, tolerance=0)

    spec = desitter_type(0.0, 4.0)
    grid = Grid(spec, 4097, (64,))
    radii = causal.frontier_radii(grid, 0)
    err = max(abs(float(radii[grid.locate((t, 0.0))[0]]) - causal.gudermannian(t)) for t in (1.0, 2.0, 3.0))
    rep.check("desitter_frontier_gd_error", err, tolerance=1e-4)
    rep.check("desitter_frontier_below_half_pi", bool(radii.max() < math.pi / 2))
    # additivity: r(t2) - r(t1) against the trapezoid integral of c on [t1, t2]
    n1, n2 = 1024, 3072
    direct = float(np.trapezoid(grid.light_speeds[n1:n2 + 1], grid.t[n1:n2 + 1]))
    bound = (grid.t[n2] - grid.t[n1]) * grid.dt**2 / 12 * 1.0  # |c''| <= 1 for 1/cosh
    rep.check("frontier_additivity_defect", abs(radii[n2] - radii[n1] - direct), tolerance=bound + 1e-15)

    diamonds_diff = 0
    for spec in spacetimes(0.0, 2.0).values():
        grid = _slab_grid(spec, 96)
        rgrid = grid.reflected()
        for _ in range(4):
            pn = (int(rng.integers(0, grid.Nt // 3)), int(rng.integers(grid.Nx[0])))
            qn = (int(rng.integers(2 * grid.Nt // 3, grid.Nt)), int(rng.integers(grid.Nx[0])))
            d1 = causal.causal_diamond(grid.coords(pn), grid.coords(qn), grid).events.mask
            rp = (grid.Nt - 1 - qn[0], qn[1])
            rq = (grid.Nt - 1 - pn[0], pn[1])
            d2 = causal.causal_diamond(rgrid.coords(rp), rgrid.coords(rq), rgrid).events.mask[::-1]
            diamonds_diff += int(np.count_nonzero(d1 != d2))
    rep.check("diamond_reflection_differing_cells", diamonds_diff, tolerance=0)

    spec = minkowski_cylinder(0.0, 6.0)
    grid = Grid(spec, 61, (128,))
    x = grid.x[0]
    rep.check("achronal_constant_slice", causal.is_achronal(np.full(128, 3.0), grid))
    rep.check("achronal_gentle_graph", causal.is_achronal(3.0 + 0.5 * np.cos(x), grid))
    rep.check("steep_graph_not_achronal", not causal.is_achronal(3.0 + 2.0 * np.cos(x), grid))


# -- sections ----------------------------------------------------------------------


def suite_sections(rep: Report, rng: np.random.Generator) -> None:
    spec = minkowski_cylinder(0.0, 1.0)
    grid = Grid(spec, 33, (64,))
    one = np.ones(grid.shape + (1,))
    vol = sections.pair(sections.from_section(one, grid), one)[0]
    rep.check("slab_volume_error", abs(vol - TWO_PI), tolerance=1e-12)

    lin = 0.0
    order = 0.0
    for _ in range(10):
        g = rng.normal(size=grid.shape + (1,)) + 1j * rng.normal(size=grid.shape + (1,))
        phi = rng.normal(size=grid.shape + (1,))
        psi = rng.normal(size=grid.shape + (1,)) + 1j * rng.normal(size=grid.shape + (1,))
        a = complex(rng.normal(), rng.normal())
        Tg = sections.from_section(g, grid)
        lhs = sections.pair(Tg, a * phi + psi)[0]
        rhs = a * sections.pair(Tg, phi)[0] + sections.pair(Tg, psi)[0]
        lin = max(lin, abs(lhs - rhs) / max(abs(lhs), 1e-300))
        terms = (grid.weights[..., None] * np.conj(g) * phi).ravel()
        perm = rng.permutation(terms.size)
        oracle = math.fsum(terms.real[perm]) + 1j * math.fsum(terms.imag[perm])
        order = max(order, abs(sections.pair(Tg, phi)[0] - oracle) / abs(oracle))
    rep.check("pairing_linearity_defect", lin, tolerance=1e-12)
    rep.check("pairing_resummation_defect", order, tolerance=1e-12)

    deltas = 0.0
    disjoint = 0.0
    for _ in range(10):
        node = (int(rng.integers(grid.Nt)), int(rng.integers(grid.Nx[0])))
        phi = rng.normal(size=grid.shape + (1,))
        d = sections.delta(grid, node)
        deltas = max(deltas, abs(sections.pair(d, phi)[0] - phi[node][0]))
        far = phi.copy()
        far[node] = 0
        disjoint = max(disjoint, abs(sections.pair(d, far)[0]))
    rep.check("delta_pairing_defect", deltas, tolerance=0)
    rep.check("disjoint_support_pairing", disjoint, tolerance=0)

    x0 = (16, 20)
    D1 = sections.first_difference(grid, x0)
    odd = np.sin(grid.x[0] - grid.x[0][x0[1]])[None, :, None] * np.ones((grid.Nt, 1, 1))
    supp = sections.support(D1).nodes()
    rep.check("first_difference_support_size", len(supp), target=2, tolerance=0)
    rep.check("first_difference_odd_pairing", abs(sections.pair(D1, odd)[0]), minimum=0.5)

    commute = True
    for _ in range(5):
        g = random_bump(grid, rng, pad=2)
        a = sections.support(sections.GridSection(grid, g)).mask
        b = sections.support(sections.from_section(g, grid)).mask
        commute = commute and bool(np.array_equal(a, b))
    rep.check("support_commutes_with_from_section", commute)

    P = dalembert(desitter_type(0.0, 1.0))
    g2 = Grid(P.spec, 33, (64,))
    Dop = P.discretize(g2)
    adj = 0.0
    push = 0.0
    for _ in range(5):
        node = (int(rng.integers(2, g2.Nt - 2)), int(rng.integers(g2.Nx[0])))
        phi = rng.normal(size=g2.shape + (1,)) + 1j * rng.normal(size=g2.shape + (1,))
        Pd = sections.apply_op_to_distribution(Dop, sections.delta(g2, node))
        expect = Dop.apply_transpose(phi)[node][0]
        adj = max(adj, abs(sections.pair(Pd, phi)[0] - expect) / abs(expect))
        gsec = random_bump(g2, rng, pad=2)
        PT = sections.apply_op_to_distribution(Dop, sections.from_section(gsec, g2))
        ref = sections.pair(sections.from_section(Dop.apply(gsec), g2), phi)[0]
        push = max(push, abs(sections.pair(PT, phi)[0] - ref) / abs(ref))
    rep.check("operator_on_delta_defect", adj, tolerance=1e-12)
    rep.check("operator_on_regular_distribution_defect", push, tolerance=1e-12)

    grid3 = Grid(minkowski_cylinder(-1.0, 1.0), 129, (128,))
    center = (64, 64)
    Td = sections.delta(grid3, center)
    widths = [0.4, 0.2, 0.1]
    Ts = [sections.mollified_delta(grid3, center, w) for w in widths]
    tt, xx = grid3.mesh()
    battery = [(1 + tt + 0.5 * (xx - math.pi) ** 2)[..., None],
               (np.cos(tt) * np.cos(xx - math.pi))[..., None]]
    wl = sections.weak_limit_probe(Ts, Td, battery, P=dalembert(grid3.spec).discretize(grid3))
    rep.check("mollifier_defects_monotone", wl.monotone)
    rep.check("mollifier_pushed_defects_bounded", wl.bounded)
    rep.check("mollifier_rate", wl.defects[1] / wl.defects[2], target=4.0, tolerance=0.6)
    rep.metric("mollifier_defects", wl.defects)

    sgrid = Grid(minkowski_cylinder(0.0, 1.0), 9, (256,))
    s = np.sin(sgrid.mesh()[1])[..., None]
    rep.check("ck0_sine", abs(sections.ck_norm(sections.GridSection(sgrid, s), 0) - 1), tolerance=sgrid.dx[0] ** 2)
    rep.check("ck1_sine", abs(sections.ck_norm(sections.GridSection(sgrid, s), 1) - 1), tolerance=sgrid.dx[0] ** 2)


# -- operators ---------------------------------------------------------------------


def suite_operators(rep: Report, rng: np.random.Generator) -> None:
    worst = 0.0
    composed = 0.0
    for spec in spacetimes(-1.0, 1.0).values():
        for P in operators_for(spec).values():
            for _ in range(100):
                ev = (float(rng.uniform(-1, 1)), float(rng.uniform(0, TWO_PI)))
                xi = rng.normal(size=2)
                pair_ = metric_pairing(spec, ev, xi)
                worst = max(worst, float(np.abs(principal_symbol(P, ev, xi) + pair_ * np.eye(P.rank)).max()))
                composed = max(composed, float(np.abs(composed_symbol(P, ev, xi) + pair_ * np.eye(P.rank)).max()))
    rep.check("principal_symbol_defect", worst, tolerance=1e-12)
    rep.check("composed_symbol_defect", composed, tolerance=1e-12)

    invol = 0.0
    for spec in spacetimes(-1.0, 1.0).values():
        for P in operators_for(spec).values():
            PP = formal_adjoint(formal_adjoint(P))
            for _ in range(10):
                ev = (float(rng.uniform(-1, 1)), float(rng.uniform(0, TWO_PI)))
                a, b = P.at(ev), PP.at(ev)
                for Ma, Mb in zip(a["A"] + [a["B"]], b["A"] + [b["B"]]):
                    invol = max(invol, float(np.abs(Ma - Mb).max()))
    rep.check("formal_adjoint_involution", invol, tolerance=1e-12)

    quad = 0.0
    for spec in spacetimes(-1.0, 1.0).values():
        grid = Grid(spec, 401, (64,))
        for P in operators_for(spec).values():
            tc = float(rng.uniform(-0.2, 0.2))
            k1, k2 = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            phi = [sympy.exp(-(T - tc) ** 2 / 0.04) * (sympy.sin(k1 * X) + sympy.I * sympy.cos(X))]
            psi = [sympy.exp(-(T + tc) ** 2 / 0.05) * sympy.cos(k2 * X + 0.3)]
            quad = max(quad, formal_adjoint_defect(P, phi, psi, grid)["relative"])
    rep.check("formal_adjoint_quadrature_defect", quad, tolerance=1e-9)

    wt = 0.0
    for spec in spacetimes(0.0, 1.0).values():
        grid = _slab_grid(spec, 48)
        for P in operators_for(spec).values():
            D = P.discretize(grid)
            for _ in range(5):
                u = random_section(grid, rng, 0)
                v = random_section(grid, rng, 0)
                lhs = np.sum(grid.weights[..., None] * np.conj(D.apply_transpose(v)) * u)
                rhs = np.sum(grid.weights[..., None] * np.conj(v) * D.apply(u))
                wt = max(wt, abs(lhs - rhs) / abs(rhs))
    rep.check("discrete_adjoint_transpose_defect", wt, tolerance=1e-13)

    # P^T_W -> formal adjoint: effective first-order time coefficient
    errs = []
    P = connection_dalembert(desitter_type(-1.0, 1.0), {"t": "0.3*I", "x": "0.5*I*sin(x)"}, 1)
    Ps = formal_adjoint(P)
    for N in (32, 64, 128):
        grid = Grid(P.spec, N + 1, (N,))
        Tr = P.discretize(grid).transpose
        dt = grid.dt
        Cp = Tr.coeffs[(1, 0)][..., 0, 0]
        Cm = Tr.coeffs[(-1, 0)][..., 0, 0]
        exact = Ps.coefficients(*grid.mesh())["A"][0][..., 0, 0]
        rows = slice(2, grid.Nt - 2)
        errs.append(float(np.abs((Cp - Cm)[rows] * dt - exact[rows]).max()))
    rep.check("discrete_to_formal_adjoint_order", math.log2(errs[1] / errs[2]), target=2.0, tolerance=0.2)
    rep.metric("discrete_to_formal_adjoint_errors", errs)

    spec = minkowski_cylinder(0.0, 1.0)
    grid = Grid(spec, 21, (32,))
    tt, xx = grid.mesh()
    D = dalembert(spec).discretize(grid)
    quad_u = (tt**2)[..., None]
    rep.check("stencil_quadratic_exact", float(np.abs(D.apply(quad_u)[1:-1] - 2).max()), tolerance=1e-9)
    a = 0.7
    Pc = connection_dalembert(spec, {"x": f"{a}*I"}, 1)
    c = Pc.at((0.5, 1.0))
    rep.check("connection_example_first_order", abs(c["A"][1][0, 0] - (-2j * a)), tolerance=1e-14)
    rep.check("connection_example_potential", abs(c["B"][0, 0] - a**2), tolerance=1e-14)


# -- cauchy ------------------------------------------------------------------------


def _plane_wave_error(N: int, k: int = 1) -> float:
    spec = minkowski_cylinder(0.0, 0.8 * math.pi)
    grid = Grid(spec, N // 2 + 1, (N,))
    x = grid.x[0]
    data = cauchy.CauchyData(grid, 0, np.sin(k * x), -k * np.cos(k * x))
    sol = cauchy.solve(dalembert(spec), data)
    tt, xx = grid.mesh()
    return float(np.abs(sol.values[..., 0] - np.sin(k * (xx - tt))).max())


def gaussian_data(grid: Grid, n0: int, x0: float, width: float = 0.3, derivative: bool = False):
    L = grid.spec.spatial.lengths[0]
    d = (grid.x[0] - x0 + L / 2) % L - L / 2
    g = np.exp(-0.5 * (d / width) ** 2)
    u1 = -d / width**2 * g if derivative else np.zeros_like(g)
    return cauchy.CauchyData(grid, n0, g, u1)


def suite_cauchy(rep: Report, rng: np.random.Generator) -> None:
    errs = [_plane_wave_error(N) for N in (64, 128, 256)]
    rep.check("plane_wave_error_ratio", errs[1] / errs[2], target=4.0, tolerance=0.5)
    rep.check("plane_wave_observed_order", math.log2(errs[1] / errs[2]), target=2.0, tolerance=0.2)
    rep.metric("plane_wave_errors", errs)

    spaces = spacetimes(0.0, 2.0)
    zero_max = 0.0
    leak = 0.0
    rev = 0.0
    residual = 0.0
    for name, spec in spaces.items():
        grid = _slab_grid(spec, 128)
        for P in operators_for(spec).values():
            D = P.discretize(grid)
            z = cauchy.solve(D, cauchy.CauchyData(grid, 0, np.zeros(128), np.zeros(128)))
            zero_max = max(zero_max, float(np.abs(z.values).max()))
            data = gaussian_data(grid, 0, float(rng.uniform(0, TWO_PI)), 0.25, derivative=bool(rng.integers(2)))
            sol = cauchy.solve(D, data)
            leak = max(leak, cauchy.propagation_check(sol))
            residual = max(residual, sol.residual["relative"])
            back = cauchy.reverse(sol)
            scale = float(np.abs(sol.values[0]).max())
            rev = max(rev, float(np.abs(back.values[0] - sol.values[0]).max()) / scale)
    rep.check("zero_data_max", zero_max, tolerance=0)
    rep.check("propagation_leakage", leak, tolerance=1e-8)
    rep.check("time_reversal_defect", rev, tolerance=1e-10)
    rep.check("recurrence_residual", residual, tolerance=1e-12)

    spec = spaces["desitter"]
    grid = _slab_grid(spec, 96)
    P = operators_for(spec)["box_conn"].discretize(grid)
    battery = []
    n0 = int(rng.integers(0, grid.Nt // 2))
    for _ in range(6):
        d = gaussian_data(grid, n0, float(rng.uniform(0, TWO_PI)), 0.3, True)
        src = random_bump(grid, rng, pad=0)
        battery.append(cauchy.CauchyData(grid, d.n0, d.u0 * complex(rng.normal(), rng.normal()), d.u1, 0.3 * src))
    stab = cauchy.stability_probe(P, battery, rng)
    rep.check("stability_linearity_defect", stab.linearity_defect, tolerance=1e-12)
    rep.check("stability_norm_ratio_finite", bool(math.isfinite(stab.norm_ratio)))
    rep.metric("stability_norm_ratio", stab.norm_ratio)
    base = cauchy.solve(P, battery[0])
    ten = cauchy.solve(P, battery[0].scaled(10.0))
    rep.check("scaling_by_ten_defect", float(np.abs(ten.values - 10 * base.values).max()), tolerance=1e-12 * float(np.abs(ten.values).max()))

    spec4 = spaces["rescaled"]
    grid4 = Grid(spec4, 257, (256,))
    x = grid4.x[0]
    sol4 = cauchy.solve(dalembert(spec4), cauchy.CauchyData(grid4, 0, np.sin(x), -np.cos(x)))
    tt, xx = grid4.mesh()
    rep.check("rescaled_plane_wave_error", float(np.abs(sol4.values[..., 0] - np.sin(xx - 2 * tt)).max()), tolerance=1e-3)

    refused = False
    try:
        cauchy.solve(dalembert(spaces["minkowski"]), cauchy.CauchyData(Grid(spaces["minkowski"], 5, (64,)), 0, np.zeros(64), np.zeros(64)))
    except CFLError as exc:
        refused = exc.required_dt > 0
    rep.check("cfl_refusal_reports_required_dt", refused)

    cyl = cylinder_demo(256, traveling=False)
    rep.check("cylinder_standing_wave_defect", cyl["relative_defect"], tolerance=1e-6)
    cyl = cylinder_demo(256, traveling=True)
    rep.check("cylinder_traveling_bump_defect", cyl["relative_defect"], minimum=0.1)

    strip = strip_demo(256)[-1]
    rep.check("strip_initial_defect", strip.initial_defect, tolerance=1e-10)
    rep.check("strip_gap", strip.gap, minimum=1e-2)
    rep.check("strip_residual_u", strip.residual_u, tolerance=1e-9)
    rep.check("strip_residual_u_plus_w", strip.residual_uw, tolerance=1e-9)
    rep.check("strip_w_zero_below_cone", strip.w_zero_below_cone)


def cylinder_demo(N: int, traveling: bool, period: float | None = None) -> dict:
    """Standing wave on a ``2 pi`` period (resonant) or a bump on an incommensurate one."""
    if traveling:
        period = 5.0 if period is None else period
        spec = minkowski_cylinder(0.0, period)
        grid = Grid.from_cfl(spec, (N,), 0.8)
        data = gaussian_data(grid, 0, math.pi, 0.3, derivative=True)
        return cauchy.demo_cylinder_time(dalembert(spec), grid, data.u0, data.u1, period=period)
    period = TWO_PI if period is None else period
    spec = minkowski_cylinder(0.0, period)
    # Courant 1 (dt = dx): the leapfrog scheme is exact on sin(x) cos(t)
    Nt = round(period / (TWO_PI / N)) + 1
    grid = Grid(spec, Nt, (N,), eta=1.0)
    x = grid.x[0]
    return cauchy.demo_cylinder_time(dalembert(spec), grid, np.sin(x), np.zeros(N), period=period)


def courant_one_grid(Nx: int, steps: int) -> Grid:
    """Minkowski cylinder slab ``[0, steps * dx]`` with ``dt = dx``.

    At Courant number one the leapfrog stencil's numerical cone coincides
    with the light cone, so point sources leave nothing outside it.
    """
    dx = TWO_PI / Nx
    return Grid(minkowski_cylinder(0.0, steps * dx), steps + 1, (Nx,), eta=1.0)


def strip_demo(N: int = 256, strip=(math.pi - 0.5, math.pi + 0.5)):
    """Strip around ``x = pi`` with a Gaussian source of data and ``x_out`` off to the side."""
    grid = courant_one_grid(N, 100 * N // 256)
    spec = grid.spec
    data = gaussian_data(grid, 0, math.pi, 0.2)
    x_out = (20, int(np.searchsorted(grid.x[0], strip[1] + 1.0)))
    return cauchy.demo_strip_nonuniqueness(dalembert(spec), grid, data, strip, x_out)


# -- green -------------------------------------------------------------------------


def suite_green(rep: Report, rng: np.random.Generator) -> None:
    spaces = spacetimes(0.0, 2.0)
    inv = 0.0
    adj = 0.0
    leak = 0.0
    csc = 0
    for spec in spaces.values():
        grid = _slab_grid(spec, 96)
        for P in operators_for(spec).values():
            D = P.discretize(grid)
            for _ in range(4):
                phi = random_section(grid, rng)
                Gp = green._G(D, phi, True)
                inv = max(inv, green._rel(D.apply(Gp)[2:-2], phi[2:-2]))
                psi = random_section(grid, rng, 2)
                psi[2:4] = 0
                psi[-4:-2] = 0
                rec = green._G(D, D.apply(psi), True)
                inv = max(inv, green._rel(rec, psi))
                for direction in "+-":
                    adj = max(adj, green.adjoint_identity_check(D, random_section(grid, rng),
                                                                random_section(grid, rng), direction)["relative"])
                bump = random_bump(grid, rng)
                src = sections.support(sections.GridSection(grid, bump)).mask
                for direction in "+-":
                    Gb = green._G(D, bump, direction == "+")
                    leak = max(leak, green.leakage(Gb, grid, src, direction))
                Gb = green.causal_propagator(D, bump)
                suppG = sections.support(sections.GridSection(grid, Gb)).mask
                hull = causal.causal_hull(src, grid, dilate=2).mask
                csc += int(np.count_nonzero(suppG & ~hull))
    rep.check("causal_sweep_inverse_defect", inv, tolerance=1e-11)
    rep.check("adjoint_identity_defect", adj, tolerance=1e-11)
    rep.check("green_support_leakage", leak, tolerance=1e-8)
    rep.check("spacelike_compact_slice_violations", csc, tolerance=0)

    dual = 0.0
    for spec in spaces.values():
        grid = _slab_grid(spec, 64)
        rgrid = grid.reflected()
        P = dalembert(spec)
        Pr = dalembert(rgrid.spec)
        phi = random_section(grid, rng)
        a = green._G(P.discretize(grid), phi, False)
        b = green._G(Pr.discretize(rgrid), phi[::-1], True)[::-1]
        dual = max(dual, float(np.abs(a - b).max()))
    rep.check("direction_duality_defect", dual, tolerance=0)

    worst = {"complex_GP": 0.0, "complex_PG": 0.0, "injectivity": 0.0,
             "kernel_image": 0.0, "kernel_image_support": 0.0, "splitting": 0.0}
    compact = True
    for spec in spaces.values():
        grid = _slab_grid(spec, 96)
        P = operators_for(spec)["box_conn"]
        es = green.exact_sequence_check(P.discretize(grid), bump_battery(grid, rng, 4), support_checks=True)
        for k in worst:
            worst[k] = max(worst[k], getattr(es, k))
        compact = compact and es.splitting_compact
    rep.check("exact_complex_GP", worst["complex_GP"], tolerance=1e-11)
    rep.check("exact_complex_PG", worst["complex_PG"], tolerance=1e-11)
    rep.check("exact_injectivity", worst["injectivity"], tolerance=1e-11)
    rep.check("exact_kernel_image", worst["kernel_image"], tolerance=1e-9)
    rep.check("exact_kernel_image_support", worst["kernel_image_support"], tolerance=1e-8)
    rep.check("exact_splitting", worst["splitting"], tolerance=1e-9)
    rep.check("exact_splitting_compact", compact)

    grid = courant_one_grid(128, 48)
    Nt = grid.Nt
    D = dalembert(grid.spec).discretize(grid)
    x = (int(rng.integers(5, Nt - 5)), int(rng.integers(128)))
    F = green.fundamental_solution(D, x, "+")
    PF = sections.apply_op_to_distribution(D, F)
    pair_def = 0.0
    for _ in range(10):
        phi = random_section(grid, rng)
        got = sections.pair(PF, phi)[0]
        pair_def = max(pair_def, abs(got - phi[x][0]) / abs(phi[x][0]))
    dgrid = _slab_grid(spaces["desitter"], 96)
    Dd = operators_for(dgrid.spec)["box_conn"].discretize(dgrid)
    xd = (int(rng.integers(3, dgrid.Nt - 3)), int(rng.integers(96)))
    PFd = sections.apply_op_to_distribution(Dd, green.fundamental_solution(Dd, xd, "-"))
    for _ in range(10):
        phi = random_section(dgrid, rng)
        got = sections.pair(PFd, phi)[0]
        pair_def = max(pair_def, abs(got - phi[xd][0]) / abs(phi[xd][0]))
    rep.check("fundamental_solution_pairing_defect", pair_def, tolerance=1e-11)
    mask = np.zeros(grid.shape, dtype=bool)
    mask[x] = True
    rep.check("fundamental_solution_leakage",
              green.leakage(F.magnitude()[..., None], grid, mask, "+"), tolerance=1e-8)
    small = Grid(minkowski_cylinder(0.0, 31 * TWO_PI / 32), 32, (32,), eta=1.0)
    xs = (10, 7)
    dense = green.fundamental_solution_dense(dalembert(small.spec), xs, "+", small)
    sweep = green.fundamental_solution_section(dalembert(small.spec), xs, "+", small)
    agree = float(np.abs(dense - sweep).max()) / float(np.abs(dense).max())
    small = Grid.from_cfl(desitter_type(0.0, 2.0), (32,), 0.8)
    P = operators_for(small.spec)["box_conn"]
    for direction in "+-":
        dense = green.fundamental_solution_dense(P, (small.Nt // 2, 5), direction, small)
        sweep = green.fundamental_solution_section(P, (small.Nt // 2, 5), direction, small)
        agree = max(agree, float(np.abs(dense - sweep).max()) / float(np.abs(dense).max()))
    rep.check("fundamental_solution_dense_agreement", agree, tolerance=1e-10)

    grid = _slab_grid(spaces["desitter"], 64)
    D = dalembert(grid.spec).discretize(grid)
    phi = random_bump(grid, rng)
    probe = green.green_continuity_probe(D, [(1 + 2.0**-j) * phi for j in range(1, 6)], phi)
    Gphi = green._G(D, phi, True)
    ratio = float(np.abs(Gphi).max()) / float(np.abs(phi).max())
    rep.check("continuity_linear_ratio_spread",
              max(abs(r - ratio) for r in probe["ratios"]) / ratio, tolerance=1e-12)
    padded = False
    bad = np.zeros(grid.shape + (1,))
    bad[1, 3] = 1
    try:
        green._G(D, bad, True)
    except PaddingError:
        padded = True
    rep.check("padding_violation_rejected", padded)


SUITES = {
    "causal": suite_causal,
    "sections": suite_sections,
    "operators": suite_operators,
    "cauchy": suite_cauchy,
    "green": suite_green,
}


def run_suite(name: str, seed: int | None = None) -> Report:
    """Run one suite (or ``all``) with a deterministic generator per suite."""
    seed = DEFAULT_SEED if seed is None else int(seed)
    names = list(SUITES) if name == "all" else [name]
    if any(n not in SUITES for n in names):
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    rep = Report(f"check-{name}", "check", seed)
    for i, n in enumerate(names):
        sub = Report(n, "check", seed)
        SUITES[n](sub, np.random.default_rng([seed, list(SUITES).index(n)]))
        rep.merge(sub, prefix=f"{n}." if name == "all" else "")
    return rep
