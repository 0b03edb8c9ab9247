"""Scenario configuration: JSON schema validation and object builders."""

from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .io import read_field
from .manifold import Grid, SpacetimeSpec, SpatialManifold, TimeFunction
from .operators import WaveOperator, connection_dalembert, dalembert

__all__ = [
    "load_config",
    "validate_config",
    "build_spec",
    "build_grid",
    "build_operator",
    "build_profile",
    "parse_set",
]


@lru_cache(maxsize=1)
def schema() -> dict:
    return json.loads(resources.files("wavelab").joinpath("schema.json").read_text())


def validate_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    return cfg


def load_config(path) -> dict:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = validate_config(cfg)
    cfg.setdefault("name", path.stem)
    cfg["_base"] = str(path.parent)
    return cfg


def _timefunction(d) -> TimeFunction:
    if isinstance(d, (int, float)):
        return TimeFunction.constant(float(d))
    try:
        return TimeFunction.from_dict(d)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad time function {d}: {exc}") from None


def build_spec(cfg: dict) -> SpacetimeSpec:
    st = cfg["spacetime"]
    lengths = tuple(st.get("lengths", [2 * math.pi]))
    preset = st.get("preset")
    beta = TimeFunction.constant(1.0)
    warp = TimeFunction.constant(1.0)
    if preset == "rescaled":
        beta = TimeFunction.constant(4.0)
    elif preset == "desitter":
        warp = TimeFunction.cosh()
    if "beta" in st:
        beta = _timefunction(st["beta"])
    if "warp" in st:
        warp = _timefunction(st["warp"])
    try:
        spec = SpacetimeSpec(SpatialManifold(lengths), beta, warp,
                             float(st.get("t_min", 0.0)), float(st.get("t_max", 1.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if "conformal_factor" in st:
        spec = spec.conformal(float(st["conformal_factor"]))
    return spec


def build_grid(spec: SpacetimeSpec, cfg: dict) -> Grid:
    g = cfg["grid"]
    Nx = g["Nx"]
    Nx = (Nx,) if isinstance(Nx, int) else tuple(Nx)
    if len(Nx) != spec.dim:
        raise ConfigError(f"grid.Nx has {len(Nx)} entries for a {spec.dim}-torus")
    eta = float(g.get("eta", 0.8))
    if "Nt" in g:
        return Grid(spec, int(g["Nt"]), Nx, eta)
    return Grid.from_cfl(spec, Nx, eta)


def build_operator(spec: SpacetimeSpec, cfg: dict) -> WaveOperator:
    op = cfg.get("operator", {"kind": "dalembert"})
    rank = int(op.get("rank", 1))
    names = ["t", "x", "y"][: spec.dim + 1]
    try:
        if op["kind"] == "dalembert":
            P = dalembert(spec, rank)
            if "potential" in op:
                P = WaveOperator(spec, rank, P.first_order, op["potential"], name="dalembert")
            return P
        if op["kind"] == "connection_dalembert":
            conn = op.get("connection", {})
            return connection_dalembert(spec, {n: conn.get(n) for n in names}, rank,
                                        potential=op.get("potential"))
        fo = op.get("first_order", {})
        return WaveOperator(spec, rank, tuple(fo.get(n) for n in names), op.get("potential"),
                            name="custom")
    except Exception as exc:  # sympy parse errors come in many types
        raise ConfigError(f"cannot build operator: {exc}") from None


def build_profile(grid: Grid, prof: dict | None, rank: int, spacetime: bool, base: str = "."):
    """Sample a named profile on one slice (``spacetime=False``) or the whole slab."""
    shape = (grid.shape if spacetime else grid.Nx) + (rank,)
    if prof is None or prof["kind"] == "zero":
        return np.zeros(shape)
    kind = prof["kind"]
    if kind == "file":
        arr = read_field(Path(base) / prof["path"])
        if not spacetime:
            arr = arr[prof.get("slice", 0)]
        if arr.shape != shape:
            raise ConfigError(f"field file shape {arr.shape} != expected {shape}")
        return arr if np.any(arr.imag) else arr.real
    if spacetime:
        coords = grid.mesh()
        lengths = (None,) + grid.spec.spatial.lengths
    else:
        coords = np.meshgrid(*grid.x, indexing="ij")
        lengths = grid.spec.spatial.lengths
    amp = float(prof.get("amplitude", 1.0))
    if kind == "gaussian":
        if "center" not in prof or "width" not in prof:
            raise ConfigError("gaussian profile needs center and width")
        center = prof["center"]
        if len(center) != len(coords):
            raise ConfigError(f"gaussian center needs {len(coords)} coordinates")
        w = float(prof["width"])
        r2 = 0.0
        first = None
        for c, x0, L in zip(coords, center, lengths):
            d = c - x0
            if L is not None:
                d = (d + L / 2) % L - L / 2
            if first is None and L is not None:
                first = d
            r2 = r2 + d**2
        val = amp * np.exp(-r2 / (2 * w**2))
        if prof.get("derivative", 0) == 1:
            val = -first / w**2 * val
    elif kind == "sine":
        k = prof.get("k", 1)
        k = [k] if isinstance(k, int) else list(k)
        space = coords[1:] if spacetime else coords
        if len(k) != len(space):
            raise ConfigError(f"sine profile needs {len(space)} wave numbers")
        arg = sum(ki * 2 * math.pi / L * c for ki, c, L in zip(k, space, grid.spec.spatial.lengths))
        val = amp * np.sin(arg + float(prof.get("phase", 0.0)))
    else:
        raise ConfigError(f"unknown profile kind {kind!r}")
    comps = np.asarray(prof.get("components", [1.0] + [0.0] * (rank - 1)), dtype=float)
    if comps.size != rank:
        raise ConfigError(f"profile components must have length {rank}")
    return val[..., None] * comps


def parse_set(grid: Grid, descriptor: str) -> np.ndarray:
    """Node mask from a set descriptor.

    ``point:t,x[,y]`` | ``points:t,x;t,x;...`` | ``slice:t`` |
    ``nodes:n,i;n,i`` | ``box:t0,t1,x0,x1`` (1+1 only).
    """
    try:
        kind, _, body = descriptor.partition(":")
        mask = np.zeros(grid.shape, dtype=bool)
        if kind == "point":
            mask[grid.locate([float(v) for v in body.split(",")])] = True
        elif kind == "points":
            for item in body.split(";"):
                mask[grid.locate([float(v) for v in item.split(",")])] = True
        elif kind == "nodes":
            for item in body.split(";"):
                mask[tuple(int(v) for v in item.split(","))] = True
        elif kind == "slice":
            n = grid.locate([float(body)] + [0.0] * grid.dim)[0]
            mask[n] = True
        elif kind == "box":
            t0, t1, x0, x1 = (float(v) for v in body.split(","))
            T, X = grid.mesh()
            mask = (T >= t0) & (T <= t1) & (X >= x0) & (X <= x1)
        else:
            raise ValueError(f"unknown set kind {kind!r}")
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad set descriptor {descriptor!r}: {exc}") from None
    if not mask.any():
        raise ConfigError(f"set descriptor {descriptor!r} selects no nodes")
    return mask
