"""Scenario execution: config in, report and field files out."""

from __future__ import annotations

import json
import math
import os
import time
from pathlib import Path

import numpy as np

from . import causal, cauchy, green, sections
from .config import build_grid, build_operator, build_profile, build_spec, parse_set
from .errors import ConfigError
from .io import write_field, write_slices
from .manifold import Grid
from .report import Report
from .suites import DEFAULT_SEED, run_suite

__all__ = ["run_scenario", "output_root", "DEFAULT_OUT", "SCENARIOS"]

DEFAULT_OUT = "wavelab-out"


def output_root(cli_out=None, cfg: dict | None = None) -> Path:
    """``--out``, then ``WAVELAB_OUT``, then the config's ``output.dir``, then ``./wavelab-out``."""
    if cli_out:
        return Path(cli_out)
    env = os.environ.get("WAVELAB_OUT")
    if env:
        return Path(env)
    if cfg and "dir" in cfg.get("output", {}):
        d = Path(cfg["output"]["dir"])
        return d if d.is_absolute() else Path(cfg.get("_base", ".")) / d
    return Path(DEFAULT_OUT)


class _Context:
    """Everything a scenario handler needs: objects built from the config plus output plumbing."""

    def __init__(self, cfg: dict, out: Path, formats, plot: bool, seed: int, report: Report):
        self.cfg = cfg
        self.out = out
        self.formats = tuple(formats)
        self.plot = plot
        self.seed = seed
        self.report = report
        self.spec = build_spec(cfg)
        self.grid = build_grid(self.spec, cfg)
        self.operator = build_operator(self.spec, cfg)
        self.base = cfg.get("_base", ".")

    def field(self, stem: str, values: np.ndarray) -> None:
        values = np.asarray(values)
        if not np.all(np.isfinite(values)):
            self.report.nonfinite = True
        for path in write_field(self.out / stem, values, self.formats):
            self.report.artifacts.append(path.name)
        if self.plot:
            for path in write_slices(self.out / f"{stem}_slices", values, self.grid):
                self.report.artifacts.append(f"{stem}_slices/{path.name}")

    def data(self, grid: Grid | None = None) -> cauchy.CauchyData:
        grid = self.grid if grid is None else grid
        d = self.cfg.get("data", {})
        r = self.operator.rank
        n0 = int(d.get("slice", 0))
        if n0 >= grid.Nt:
            raise ConfigError(f"data.slice {n0} outside 0..{grid.Nt - 1}")
        u0 = build_profile(grid, d.get("u0"), r, False, self.base)
        u1 = build_profile(grid, d.get("u1"), r, False, self.base)
        f = build_profile(grid, d.get("f"), r, True, self.base)
        return cauchy.CauchyData(grid, n0, u0, u1, f)


def _grid_echo(grid: Grid) -> dict:
    return {
        "Nt": grid.Nt,
        "Nx": list(grid.Nx),
        "dt": grid.dt,
        "dx": list(grid.dx),
        "t_min": grid.spec.t_min,
        "t_max": grid.spec.t_max,
        "eta": grid.eta,
        "cfl_number": grid.cfl_number,
    }


def _cauchy(ctx: _Context) -> dict:
    sol = cauchy.solve(ctx.operator, ctx.data())
    ctx.field("u", sol.values)
    return {
        "residual_relative": sol.residual["relative"],
        "residual_max_abs": sol.residual["max_abs"],
        "leakage": cauchy.propagation_check(sol),
        "max_abs": float(np.max(np.abs(sol.values))),
    }


def _plane_wave(grid: Grid, k: int):
    spec = grid.spec
    t = grid.t
    beta, f = spec.beta(t), spec.warp(t)
    if np.ptp(beta) > 0 or np.ptp(f) > 0:
        raise ConfigError("plane_wave exact solution needs constant beta and warp")
    if spec.dim != 1:
        raise ConfigError("plane_wave exact solution is implemented for one spatial axis")
    kk = k * 2 * math.pi / spec.spatial.lengths[0]
    c = math.sqrt(beta[0]) / f[0]
    x = grid.x[0]
    u0 = np.sin(kk * x)
    u1 = -kk / f[0] * np.cos(kk * x)  # beta^{-1/2} d_t u
    tt, xx = grid.mesh()
    return u0, u1, np.sin(kk * (xx - c * (tt - spec.t_min)))


def _convergence(ctx: _Context) -> dict:
    conv = ctx.cfg["convergence"]
    k = int(conv["exact"].get("k", 1))
    resolutions = sorted(conv["resolutions"])
    eta = ctx.grid.eta
    first = Grid.from_cfl(ctx.spec, (resolutions[0],), eta)
    steps0 = first.Nt - 1
    errors = []
    for N in resolutions:
        if N % resolutions[0]:
            raise ConfigError("resolutions must be multiples of the coarsest one")
        grid = Grid(ctx.spec, steps0 * (N // resolutions[0]) + 1, (N,), eta)
        u0, u1, exact = _plane_wave(grid, k)
        sol = cauchy.solve(ctx.operator, cauchy.CauchyData(grid, 0, u0, u1))
        if not np.all(np.isfinite(sol.values)):
            ctx.report.nonfinite = True
        errors.append(float(np.max(np.abs(sol.values[..., 0] - exact))))
        if N == resolutions[-1]:
            ctx.grid = grid
            ctx.field("u", sol.values)
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    orders = [math.log2(r) for r in ratios]
    return {
        "resolutions": resolutions,
        "errors": errors,
        "ratios": ratios,
        "orders": orders,
        "error_ratio": ratios[-1],
        "observed_order": orders[-1],
    }


def _green(ctx: _Context) -> dict:
    g = ctx.cfg["green"]
    return green_metrics(ctx, g["point"], g.get("direction", "+"), int(g.get("tests", 50)))


def green_metrics(ctx: _Context, point, direction: str, tests: int = 50) -> dict:
    grid = ctx.grid
    D = ctx.operator.discretize(grid)
    x = grid.locate(point)
    cols = green.fundamental_solution_section(D, x, direction)
    F = green.fundamental_solution(D, x, direction)
    PF = sections.apply_op_to_distribution(D, F)
    rng = np.random.default_rng(ctx.seed)
    r = D.rank
    defect = 0.0
    for _ in range(tests):
        phi = rng.normal(size=grid.shape + (r,)) + 1j * rng.normal(size=grid.shape + (r,))
        got = sections.pair(PF, phi)
        defect = max(defect, float(np.max(np.abs(got - phi[x]))) / float(np.max(np.abs(phi[x]))))
    mask = np.zeros(grid.shape, dtype=bool)
    mask[x] = True
    leak = green.leakage(F.magnitude()[..., None], grid, mask, direction)
    ctx.field("F", cols.reshape(grid.shape + (r * r,)))
    return {
        "point": [float(c) for c in grid.coords(x)],
        "node": [int(i) for i in x],
        "direction": direction,
        "pairing_defect": defect,
        "support_leakage": leak,
        "tests": tests,
    }


_RELATIONS = {
    "J+": causal.causal_future,
    "J-": causal.causal_past,
    "I+": causal.chronological_future,
    "I-": causal.chronological_past,
    "J": causal.causal_hull,
}


def causal_metrics(ctx: _Context, descriptor: str, relation: str = "J+") -> dict:
    grid = ctx.grid
    A = parse_set(grid, descriptor)
    E = _RELATIONS[relation](A, grid)
    ctx.field("set", E.mask[..., None].astype(float))
    extents = []
    for n in range(grid.Nt):
        extents.append(E.slice_cells(n))
    box = E.bounding_box()
    return {
        "relation": relation,
        "source_cells": int(A.sum()),
        "cells": len(E),
        "slice_cells": extents,
        "bounding_box": None if box is None else [list(map(int, b)) for b in box],
    }


def _causal(ctx: _Context) -> dict:
    c = ctx.cfg["causal"]
    return causal_metrics(ctx, c["set"], c.get("relation", "J+"))


def _demo_strip(ctx: _Context) -> dict:
    s = ctx.cfg["strip"]
    u, uw, rep = cauchy.demo_strip_nonuniqueness(ctx.operator, ctx.grid, ctx.data(),
                                                  tuple(s["interval"]), tuple(s["x_out"]))
    ctx.field("u", u.values)
    ctx.field("u_plus_w", uw.values)
    return rep.as_dict()


def _demo_cylinder(ctx: _Context) -> dict:
    d = ctx.data()
    period = ctx.cfg.get("cylinder", {}).get("period")
    out = cauchy.demo_cylinder_time(ctx.operator, ctx.grid, d.u0, d.u1, d.f, period)
    ctx.field("u", out.pop("solution").values)
    return out


def _check(ctx: _Context) -> dict:
    rep = run_suite(ctx.cfg.get("suite", "all"), ctx.seed)
    ctx.report.merge(rep)
    return {}


SCENARIOS = {
    "cauchy": _cauchy,
    "convergence": _convergence,
    "green": _green,
    "causal": _causal,
    "demo_strip": _demo_strip,
    "demo_cylinder": _demo_cylinder,
    "check": _check,
}

# Checks applied when a config declares none of the same name.
DEFAULT_CHECKS = {
    "cauchy": [{"name": "residual_relative", "tolerance": 1e-12}],
    "convergence": [{"name": "error_ratio", "target": 4.0, "tolerance": 0.5}],
    "green": [{"name": "pairing_defect", "tolerance": 1e-11}],
    "causal": [],
    "demo_strip": [
        {"name": "initial_defect", "tolerance": 1e-10},
        {"name": "gap", "min": 1e-2},
        {"name": "residual_u", "tolerance": 1e-9},
        {"name": "residual_uw", "tolerance": 1e-9},
    ],
    "demo_cylinder": [],
    "check": [],
}


def _apply_checks(report: Report, kind: str, declared: list, metrics: dict) -> None:
    names = {c["name"] for c in declared}
    if len(names) != len(declared):
        raise ConfigError("a check name is declared more than once")
    pending = [c for c in DEFAULT_CHECKS[kind] if c["name"] not in names] + list(declared)
    for c in pending:
        if c["name"] not in metrics:
            raise ConfigError(f"check {c['name']!r} refers to no metric of a {kind} scenario; "
                              f"available: {sorted(k for k, v in metrics.items() if _scalar(v))}")
        value = metrics[c["name"]]
        if not _scalar(value):
            raise ConfigError(f"metric {c['name']!r} is not a scalar")
        if "min" in c:
            report.check(c["name"], value, minimum=c["min"])
        elif "tolerance" in c:
            report.check(c["name"], value, tolerance=c["tolerance"], target=c.get("target"))
        else:
            raise ConfigError(f"check {c['name']!r} needs a tolerance or a min")


def _scalar(v) -> bool:
    return isinstance(v, (bool, int, float, np.floating, np.integer))


def run_scenario(cfg: dict, out_root=None, formats=None, plot: bool = False,
                 seed: int | None = None) -> tuple:
    """Execute one validated config; returns ``(report, output_dir)``.

    Writes ``report.json`` (deterministic) and ``timings.json`` next to the
    field files.
    """
    seed = DEFAULT_SEED if seed is None else int(seed)
    name = cfg.get("name", cfg["kind"])
    out = output_root(out_root, cfg) / name
    out.mkdir(parents=True, exist_ok=True)
    formats = formats or cfg.get("output", {}).get("formats", ["bin"])
    report = Report(name, cfg["kind"], seed)
    t0 = time.perf_counter()
    ctx = _Context(cfg, out, formats, plot, seed, report)
    t_build = time.perf_counter()
    metrics = SCENARIOS[cfg["kind"]](ctx)
    t_run = time.perf_counter()
    report.grid = _grid_echo(ctx.grid)
    for k, v in metrics.items():
        report.metric(k, v)
    # inf can be a legitimate ratio (e.g. against an exactly zero defect); nan never is
    if any(isinstance(v, float) and math.isnan(v) for v in metrics.values()):
        report.nonfinite = True
    _apply_checks(report, cfg["kind"], cfg.get("checks", []), metrics)
    report.metric("nonfinite", report.nonfinite)
    (out / "report.json").write_text(report.to_json())
    timings = {"setup_s": t_build - t0, "run_s": t_run - t_build, "total_s": time.perf_counter() - t0}
    (out / "timings.json").write_text(json.dumps(timings, indent=2) + "\n")
    return report, out
