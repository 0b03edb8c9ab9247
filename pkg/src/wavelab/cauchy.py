"""Cauchy problem on the foliated slab.

Data live on one time slice ``S = {t_0} x T^d``: the value ``u_0``, the
normal derivative ``u_1 = nabla_nu u`` with ``nu = beta^{-1/2} d_t``, and a
source ``f`` on the whole slab. The solver marches the leapfrog recurrence
both ways from ``S`` after a second-order Taylor seed that makes the
discrete equation hold on ``S`` as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import causal
from .errors import PreconditionError, ShapeError
from .manifold import Grid, node_index
from .operators import DiscreteOperator, WaveOperator
from .sections import GridSection, support
from .stencil import block_apply, shift, time_offset

__all__ = [
    "CauchyData",
    "Solution",
    "solve",
    "slice_trace",
    "reverse",
    "propagation_check",
    "stability_probe",
    "demo_cylinder_time",
    "demo_strip_nonuniqueness",
    "slice_c1_norm",
]


@dataclass(eq=False)
class CauchyData:
    """Initial data on slice ``n0`` of ``grid``; arrays carry a trailing rank axis."""

    grid: Grid
    n0: int
    u0: np.ndarray
    u1: np.ndarray
    f: np.ndarray | None = None

    def __post_init__(self):
        g = self.grid
        if not 0 <= self.n0 < g.Nt:
            raise ValueError(f"slice index {self.n0} outside 0..{g.Nt - 1}")
        u0 = np.asarray(self.u0)
        u1 = np.asarray(self.u1)
        if u0.shape == g.Nx:
            u0 = u0[..., None]
        if u1.shape == g.Nx:
            u1 = u1[..., None]
        if u0.shape[:-1] != g.Nx or u1.shape != u0.shape:
            raise ShapeError(f"slice data shapes {u0.shape}, {u1.shape} do not match Nx={g.Nx}")
        self.u0, self.u1 = u0, u1
        if self.f is None:
            self.f = np.zeros(g.shape + (self.rank,))
        else:
            f = np.asarray(self.f.values if isinstance(self.f, GridSection) else self.f)
            if f.shape == g.shape:
                f = f[..., None]
            if f.shape != g.shape + (self.rank,):
                raise ShapeError(f"source shape {f.shape} does not match grid and rank")
            self.f = f

    @property
    def rank(self) -> int:
        return self.u0.shape[-1]

    def scaled(self, a) -> CauchyData:
        return CauchyData(self.grid, self.n0, a * self.u0, a * self.u1, a * self.f)

    def __add__(self, other: CauchyData) -> CauchyData:
        if other.n0 != self.n0:
            raise ValueError("data live on different slices")
        return CauchyData(self.grid, self.n0, self.u0 + other.u0, self.u1 + other.u1,
                          self.f + other.f)

    def source_mask(self, tau: float | None = None) -> np.ndarray:
        """Union of the supports of ``u0``, ``u1`` (on slice ``n0``) and ``f``."""
        kw = {} if tau is None else {"tau": tau}
        g = self.grid
        mask = np.zeros(g.shape, dtype=bool)
        for v in (self.u0, self.u1):
            full = np.zeros(g.shape + (self.rank,), dtype=v.dtype)
            full[self.n0] = v
            if np.any(full):
                mask |= support(GridSection(g, full), **kw).mask
        if np.any(self.f):
            mask |= support(GridSection(g, self.f), **kw).mask
        return mask


@dataclass(eq=False)
class Solution:
    grid: Grid
    values: np.ndarray
    operator: DiscreteOperator
    data: CauchyData
    residual: dict = field(default_factory=dict)

    @property
    def section(self) -> GridSection:
        return GridSection(self.grid, self.values)

    def trace(self, n: int):
        return slice_trace(self, n)


def _discrete(P, grid: Grid) -> DiscreteOperator:
    if isinstance(P, DiscreteOperator):
        if P.grid != grid:
            raise ValueError("discrete operator lives on a different grid")
        return P
    if isinstance(P, WaveOperator):
        return P.discretize(grid)
    raise TypeError("expected a WaveOperator or DiscreteOperator")


def _row_parts(D: DiscreteOperator, n: int):
    """``(C+, C-, C0, [(off, C_off)])`` of the full stencil at time row ``n``."""
    dim = D.grid.dim
    C = D.full.coeffs
    spatial = [(o, C[o][n]) for o in D.full.offsets if o[0] == 0 and any(o[1:])]
    return C[time_offset(1, dim)][n], C[time_offset(-1, dim)][n], C[time_offset(0, dim)][n], spatial


def _spatial_part(spatial, u: np.ndarray) -> np.ndarray:
    out = np.zeros(u.shape, dtype=np.result_type(u, *(c for _, c in spatial)))
    for off, C in spatial:
        out = out + block_apply(C, shift(u[None], off)[0])
    return out


def _seed(D: DiscreteOperator, n: int, u0, v, f_row):
    """Levels ``n - 1`` and ``n + 1`` from value and coordinate time derivative."""
    dt = D.grid.dt
    Cp, Cm, C0, spatial = _row_parts(D, n)
    S = Cp + Cm
    rhs = f_row - block_apply(S + C0, u0) - _spatial_part(spatial, u0) - block_apply(Cp - Cm, dt * v)
    half_a = np.linalg.solve(S, rhs[..., None])[..., 0]  # (dt^2 / 2) * u_tt
    return u0 - dt * v + half_a, u0 + dt * v + half_a


def solve(P, data: CauchyData, check_cfl: bool = True) -> Solution:
    """March the discrete equation ``P u = f`` away from slice ``n0`` in both directions.

    Raises :class:`~wavelab.errors.CFLError` (with the required step) when
    the grid violates its CFL margin.
    """
    grid = data.grid
    D = _discrete(P, grid)
    if D.rank != data.rank:
        raise ShapeError(f"operator rank {D.rank} != data rank {data.rank}")
    if check_cfl:
        grid.check_cfl()
    n0 = data.n0
    beta = grid.spec.beta(grid.t[n0])
    v = np.sqrt(beta) * data.u1
    down, up = _seed(D, n0, data.u0, v, data.f[n0])
    Nt = grid.Nt
    dtype = np.result_type(D.full.dtype, data.u0, data.u1, data.f)
    u = np.zeros(grid.shape + (data.rank,), dtype=dtype)
    u[n0] = data.u0
    if n0 < Nt - 1:
        fwd = D.full.sweep(data.f, True, start=((n0, data.u0), (n0 + 1, up), n0 + 1))
        u[n0:] = fwd[n0:]
    if n0 > 0:
        bwd = D.full.sweep(data.f, False, start=((n0, data.u0), (n0 - 1, down), n0 - 1))
        u[:n0] = bwd[:n0]
    sol = Solution(grid, u, D, data)
    sol.residual = residual_report(sol)
    return sol


def residual_report(sol: Solution) -> dict:
    """Max defect of the recurrence on interior rows (plus ``n0``), absolute and scaled."""
    D = sol.operator
    if not np.all(np.isfinite(sol.values)):
        return {"max_abs": math.nan, "relative": math.nan, "finite": False}
    r = D.interior.apply(sol.values) - sol.data.f
    r[0] = 0
    r[-1] = 0
    res = float(np.max(np.abs(r))) if r.size else 0.0
    scale = D.full.row_norm() * max(float(np.max(np.abs(sol.values))), 1e-300)
    return {"max_abs": res, "relative": res / scale if scale > 0 else 0.0,
            "finite": bool(np.all(np.isfinite(sol.values)))}


def slice_trace(sol: Solution, n: int):
    """``(u, nabla_nu u)`` on slice ``n`` consistent with the recurrence.

    Interior slices use the centred difference. On the first and last slice
    the missing neighbour is the virtual level that extends the recurrence
    by one row, so re-seeding from the returned pair reproduces the solution.
    """
    grid = sol.grid
    u = sol.values
    dt = grid.dt
    Nt = grid.Nt
    if 0 < n < Nt - 1:
        v = (u[n + 1] - u[n - 1]) / (2 * dt)
    else:
        D = sol.operator
        Cp, Cm, C0, spatial = _row_parts(D, n)
        F = sol.data.f[n] - block_apply(C0, u[n]) - _spatial_part(spatial, u[n])
        if n == Nt - 1:
            # C+ u(n+1) + C- u(n-1) = F with u(n+1) = u(n-1) + 2 dt v
            lhs = F - block_apply(Cp + Cm, u[n - 1])
            v = np.linalg.solve(2 * dt * Cp, lhs[..., None])[..., 0]
        else:
            lhs = F - block_apply(Cp + Cm, u[n + 1])
            v = -np.linalg.solve(2 * dt * Cm, lhs[..., None])[..., 0]
    beta = grid.spec.beta(grid.t[n])
    return u[n].copy(), v / np.sqrt(beta)


def reverse(sol: Solution, n1: int | None = None) -> Solution:
    """Re-solve from the trace of ``sol`` on slice ``n1`` (default: the far end)."""
    grid = sol.grid
    if n1 is None:
        n1 = grid.Nt - 1 if sol.data.n0 == 0 else 0
    u0, u1 = slice_trace(sol, n1)
    data = CauchyData(grid, n1, u0, u1, sol.data.f)
    return solve(sol.operator, data)


def propagation_check(sol: Solution, K=None, margin: int = 2, tau: float | None = None) -> float:
    """Relative size of ``u`` outside ``J(K)`` dilated by ``margin`` cells.

    ``K`` defaults to the union of the data supports.
    """
    mask = sol.data.source_mask(tau) if K is None else np.asarray(getattr(K, "mask", K), bool)
    mag = np.sqrt(np.sum(np.abs(sol.values) ** 2, axis=-1))
    peak = float(mag.max())
    if peak == 0:
        return 0.0
    hull = causal.causal_hull(mask, sol.grid, dilate=margin)
    outside = ~hull.mask
    if not outside.any():
        return 0.0
    return float(mag[outside].max()) / peak


def slice_c1_norm(grid: Grid, v: np.ndarray) -> float:
    """``max(sup |v|, sup |grad_x v|)`` on one slice with centred periodic differences."""
    v = np.asarray(v)
    best = float(np.max(np.abs(v))) if v.size else 0.0
    grad2 = np.zeros(v.shape[:-1])
    for axis in range(grid.dim):
        d = (np.roll(v, -1, axis) - np.roll(v, 1, axis)) / (2 * grid.dx[axis])
        grad2 += np.sum(np.abs(d) ** 2, axis=-1)
    return max(best, float(np.sqrt(grad2.max())))


@dataclass
class StabilityReport:
    linearity_defect: float
    norm_ratio: float
    ratios: list

    def as_dict(self) -> dict:
        return {"linearity_defect": self.linearity_defect, "norm_ratio": self.norm_ratio,
                "ratios": self.ratios}


def stability_probe(P, battery, rng: np.random.Generator | None = None) -> StabilityReport:
    """Linearity defect over data pairs and the largest observed norm ratio.

    ``ratio = ||u||_C0 / (||u0||_C1 + ||u1||_C0 + ||f||_C0)``, zero for zero data.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    battery = list(battery)
    sols = [solve(P, d) for d in battery]
    ratios = []
    for d, s in zip(battery, sols):
        denom = slice_c1_norm(d.grid, d.u0) + float(np.max(np.abs(d.u1))) + float(np.max(np.abs(d.f)))
        num = float(np.max(np.abs(s.values)))
        ratios.append(num / denom if denom > 0 else 0.0)
    defect = 0.0
    for i in range(len(battery) - 1):
        a = float(rng.uniform(-2, 2))
        combo = solve(P, battery[i].scaled(a) + battery[i + 1])
        expect = a * sols[i].values + sols[i + 1].values
        scale = max(float(np.max(np.abs(expect))), 1e-300)
        defect = max(defect, float(np.max(np.abs(combo.values - expect))) / scale)
    return StabilityReport(defect, max(ratios) if ratios else 0.0, ratios)


def demo_cylinder_time(P, grid: Grid, u0, u1, f=None, period: float | None = None) -> dict:
    """Periodicity defect of the solution launched at the bottom of a covering slab.

    The slab must span exactly one declared time period. A time-periodic
    solution would descend to the quotient with a circular time direction;
    a large defect shows it does not exist for the given data.
    """
    span = grid.spec.t_max - grid.spec.t_min
    if period is not None and not np.isclose(period, span, rtol=1e-12, atol=0):
        raise PreconditionError(f"slab length {span} differs from declared period {period}")
    sol = solve(P, CauchyData(grid, 0, u0, u1, f))
    a0, b0 = slice_trace(sol, 0)
    a1, b1 = slice_trace(sol, grid.Nt - 1)
    s0 = np.sqrt(grid.spec.beta(grid.t[0]))
    s1 = np.sqrt(grid.spec.beta(grid.t[-1]))
    dv = np.max(np.abs(a1 - a0)) if a0.size else 0.0
    dd = np.max(np.abs(s1 * b1 - s0 * b0)) if a0.size else 0.0
    defect = float(max(dv, dd))
    norm = float(max(np.max(np.abs(a0)), np.max(np.abs(s0 * b0))))
    return {
        "period": span,
        "defect": defect,
        "data_norm": norm,
        "relative_defect": defect / norm if norm > 0 else 0.0,
        "solution": sol,
    }


@dataclass
class StripReport:
    strip: tuple
    x_out: tuple
    initial_defect: float
    gap: float
    gap_slice: int
    gap_ratio: float
    residual_u: float
    residual_uw: float
    w_zero_below_cone: bool
    entry_slice: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def demo_strip_nonuniqueness(P, grid: Grid, data: CauchyData, strip, x_out):
    """Two solutions on a timelike strip with identical data on its initial slice.

    ``strip = (x_a, x_b)`` is an open spatial window on the ambient cylinder,
    taken over the time rows from ``data.n0`` to the top. The second candidate
    adds the advanced fundamental solution of an event ``x_out`` outside the
    strip, which solves the homogeneous equation inside the strip but only
    switches on once ``J+(x_out)`` enters it.
    """
    from .green import fundamental_solution_section

    D = _discrete(P, grid)
    if data.grid != grid:
        raise ValueError("data live on a different grid")
    xa, xb = strip
    cols = np.nonzero((grid.x[0] > xa) & (grid.x[0] < xb))[0]
    if grid.dim != 1 or cols.size < 3:
        raise PreconditionError("strip demo needs a 1+1 grid and at least 3 strip columns")
    out_node = node_index(grid, x_out)
    if xa < grid.x[0][out_node[1]] < xb:
        raise PreconditionError("x_out lies inside the strip")
    n0 = data.n0
    cone = causal.causal_future(causal.EventSet.from_nodes(grid, [out_node]), grid).mask
    in_strip = cone[:, cols]
    hit_rows = np.nonzero(in_strip.any(axis=1))[0]
    if hit_rows.size == 0:
        raise PreconditionError("J+(x_out) never meets the strip on this slab")
    entry = int(hit_rows[0])
    src_rows = np.nonzero(np.abs(data.f).reshape(grid.Nt, -1).max(axis=1) > 0)[0]
    last_src = int(src_rows.max()) if src_rows.size else -1
    if entry <= max(n0, last_src) + 1:
        raise PreconditionError(
            f"J+(x_out) enters the strip at slice {entry}, not strictly after the "
            f"initial slice {n0} and the source (last slice {last_src})"
        )

    sol = solve(D, data)
    w = fundamental_solution_section(D, out_node, "+")[..., 0]  # first component column
    u_s = sol.values[n0:, cols]
    uw_s = (sol.values + w)[n0:, cols]

    def strip_residual(vals):
        r = D.interior.apply(vals) - data.f
        inner = r[n0 + 1: grid.Nt - 1, cols[1:-1]]
        scale = D.full.row_norm() * max(float(np.max(np.abs(vals[n0:, cols]))), 1e-300)
        return float(np.max(np.abs(inner))) / scale

    res_u = strip_residual(sol.values)
    res_uw = strip_residual(sol.values + w)
    ref = float(np.max(np.abs(u_s)))
    init = float(np.max(np.abs(uw_s[0] - u_s[0]))) / ref
    diff = np.abs(uw_s - u_s).reshape(u_s.shape[0], -1).max(axis=1)
    mid = cols[cols.size // 2]
    mid_rows = np.nonzero(cone[:, mid])[0]
    gap_slice = int(mid_rows[0]) if mid_rows.size else grid.Nt - 1
    later = max(gap_slice, entry)
    gap = float(diff[later - n0:].max()) / ref
    w_zero = bool(np.all(w[:, cols][~cone[:, cols]] == 0))
    report = StripReport(
        strip=(float(xa), float(xb)),
        x_out=tuple(float(c) for c in grid.coords(out_node)),
        initial_defect=init,
        gap=gap,
        gap_slice=later,
        gap_ratio=gap / init if init > 0 else float("inf"),
        residual_u=res_u,
        residual_uw=res_uw,
        w_zero_below_cone=w_zero,
        entry_slice=entry,
    )
    sol_uw = Solution(grid, sol.values + w, D, data)
    sol_uw.residual = residual_report(sol_uw)
    return sol, sol_uw, report

