"""Warped-product spacetimes ``R x T^d`` and their discretization grids.

The admissible family is a bounded time slab of ``R x T^d`` (d = 1 or 2)
carrying the metric ``g = -beta(t) dt^2 + f(t)^2 (dx_1^2 + ... + dx_d^2)``
on a flat torus. Compact slices make every member globally hyperbolic, and
each slice ``{t} x T^d`` is a smooth spacelike Cauchy hypersurface.
"""

from __future__ import annotations

import functools
import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy
from scipy.interpolate import CubicSpline

from .errors import CFLError, DomainError, UnsupportedOrderError, ValidationError

__all__ = [
    "TimeFunction",
    "SpatialManifold",
    "SpacetimeSpec",
    "Grid",
    "MetricData",
    "ValidationReport",
    "metric_data",
    "light_speed",
    "volume_weight",
    "node_index",
    "validate",
    "minkowski_cylinder",
    "desitter_type",
    "POSITIVITY_SAMPLES",
]

POSITIVITY_SAMPLES = 4096
DEFAULT_ETA = 0.8
_KINDS = ("constant", "cosh", "polynomial", "tabulated")


@dataclass(frozen=True)
class TimeFunction:
    """A positive scalar function of coordinate time.

    ``kind`` is one of ``constant``, ``cosh``, ``polynomial`` (ascending
    coefficients) or ``tabulated`` (cubic spline through samples). The
    stored function is ``scale * base(+-t)``; ``reflected`` selects the
    minus sign. Both transformations are exact in floating point.
    """

    kind: str
    params: tuple = ()
    scale: float = 1.0
    reflected: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown time function kind {self.kind!r}")
        if self.kind == "tabulated":
            times, values = self.params
            if len(times) != len(values) or len(times) < 4:
                raise ValueError("tabulated time function needs >= 4 matching samples")
            if np.any(np.diff(times) <= 0):
                raise ValueError("tabulated sample times must increase strictly")

    @classmethod
    def constant(cls, value: float) -> TimeFunction:
        return cls("constant", (float(value),))

    @classmethod
    def cosh(cls) -> TimeFunction:
        return cls("cosh")

    @classmethod
    def polynomial(cls, coeffs) -> TimeFunction:
        return cls("polynomial", tuple(float(c) for c in coeffs))

    @classmethod
    def tabulated(cls, times, values) -> TimeFunction:
        return cls("tabulated", (tuple(map(float, times)), tuple(map(float, values))))

    def scaled(self, factor: float) -> TimeFunction:
        return TimeFunction(self.kind, self.params, self.scale * factor, self.reflected)

    def reflect(self) -> TimeFunction:
        """The function ``t -> self(-t)``."""
        return TimeFunction(self.kind, self.params, self.scale, not self.reflected)

    @cached_property
    def _spline(self):
        times, values = self.params
        return CubicSpline(np.asarray(times), np.asarray(values))

    @cached_property
    def _poly(self):
        return np.polynomial.Polynomial(self.params)

    @property
    def max_derivative(self) -> int | None:
        """Highest available derivative order, ``None`` if unbounded."""
        return 3 if self.kind == "tabulated" else None

    def _base(self, s, nu):
        if self.kind == "constant":
            return np.full_like(s, self.params[0] if nu == 0 else 0.0)
        if self.kind == "cosh":
            return np.cosh(s) if nu % 2 == 0 else np.sinh(s)
        if self.kind == "polynomial":
            return self._poly.deriv(nu)(s) if nu else self._poly(s)
        if nu > 3:
            raise UnsupportedOrderError(
                f"tabulated time function has no derivative of order {nu}"
            )
        return self._spline(s, nu)

    def __call__(self, t, nu: int = 0):
        t = np.asarray(t, dtype=float)
        s = -t if self.reflected else t
        sign = -1.0 if (self.reflected and nu % 2) else 1.0
        out = self._base(s, nu)
        return (self.scale * sign) * out

    def symbol(self, t: sympy.Symbol, nu: int = 0) -> sympy.Expr:
        """Opaque sympy function of ``t`` whose derivatives stay bound to ``self``."""
        return _symbolic_class(self, nu)(t)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "constant":
            out["value"] = self.params[0]
        elif self.kind == "polynomial":
            out["coeffs"] = list(self.params)
        elif self.kind == "tabulated":
            out["times"], out["values"] = map(list, self.params)
        if self.scale != 1.0:
            out["scale"] = self.scale
        if self.reflected:
            out["reflected"] = True
        return out

    @classmethod
    def from_dict(cls, d: dict) -> TimeFunction:
        kind = d["kind"]
        if kind == "constant":
            tf = cls.constant(d["value"])
        elif kind == "cosh":
            tf = cls.cosh()
        elif kind == "polynomial":
            tf = cls.polynomial(d["coeffs"])
        elif kind == "tabulated":
            tf = cls.tabulated(d["times"], d["values"])
        else:
            raise ValueError(f"unknown time function kind {kind!r}")
        tf = tf.scaled(d.get("scale", 1.0))
        return tf.reflect() if d.get("reflected", False) else tf


# Registry binding generated sympy function names to numeric evaluators.
SYMBOLIC_FUNCTIONS: dict[str, callable] = {}
_counter = itertools.count()


@functools.lru_cache(maxsize=None)
def _symbolic_class(tf: TimeFunction, nu: int):
    name = f"tf{next(_counter)}_d{nu}"

    def fdiff(self, argindex=1):
        return _symbolic_class(tf, nu + 1)(self.args[0])

    attrs = {
        "nargs": 1,
        "fdiff": fdiff,
        "_eval_is_extended_real": lambda self: True,
        "_eval_conjugate": lambda self: self,
    }
    if nu == 0:
        # Only metric coefficients are turned into symbols; they are positive.
        attrs["_eval_is_positive"] = lambda self: True
    cls = type(name, (sympy.Function,), attrs)
    SYMBOLIC_FUNCTIONS[name] = lambda t, _tf=tf, _nu=nu: _tf(t, _nu)
    return cls


@dataclass(frozen=True)
class SpatialManifold:
    """Flat torus ``T^d`` with circumference ``lengths[i]`` along axis i."""

    lengths: tuple = (2 * math.pi,)

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(L) for L in self.lengths))
        if self.dim not in (1, 2):
            raise ValueError("spatial dimension must be 1 or 2")
        if any(L <= 0 for L in self.lengths):
            raise ValueError("torus circumferences must be positive")

    @property
    def dim(self) -> int:
        return len(self.lengths)


@dataclass(frozen=True)
class SpacetimeSpec:
    """Bounded slab ``[t_min, t_max] x T^d`` with metric ``-beta dt^2 + f^2 g0``."""

    spatial: SpatialManifold = field(default_factory=SpatialManifold)
    beta: TimeFunction = field(default_factory=lambda: TimeFunction.constant(1.0))
    warp: TimeFunction = field(default_factory=lambda: TimeFunction.constant(1.0))
    t_min: float = 0.0
    t_max: float = 1.0

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise ValueError("need t_min < t_max")

    @property
    def dim(self) -> int:
        return self.spatial.dim

    def conformal(self, kappa: float) -> SpacetimeSpec:
        """The spacetime with metric ``kappa * g`` for a constant ``kappa > 0``."""
        if not kappa > 0:
            raise DomainError(f"conformal factor must be positive, got {kappa}")
        return SpacetimeSpec(
            self.spatial,
            self.beta.scaled(kappa),
            self.warp.scaled(math.sqrt(kappa)),
            self.t_min,
            self.t_max,
        )

    def reflected(self) -> SpacetimeSpec:
        """Time reflection ``t -> -t``; the slab becomes ``[-t_max, -t_min]``."""
        return SpacetimeSpec(
            self.spatial, self.beta.reflect(), self.warp.reflect(), -self.t_max, -self.t_min
        )

    def check_time(self, t) -> None:
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t_min) or np.any(t > self.t_max) or np.any(~np.isfinite(t)):
            raise DomainError(
                f"time outside slab [{self.t_min}, {self.t_max}]: {t}"
            )

    def to_dict(self) -> dict:
        return {
            "lengths": list(self.spatial.lengths),
            "beta": self.beta.to_dict(),
            "warp": self.warp.to_dict(),
            "t_min": self.t_min,
            "t_max": self.t_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SpacetimeSpec:
        return cls(
            SpatialManifold(tuple(d.get("lengths", [2 * math.pi]))),
            TimeFunction.from_dict(d.get("beta", {"kind": "constant", "value": 1.0})),
            TimeFunction.from_dict(d.get("warp", {"kind": "constant", "value": 1.0})),
            float(d.get("t_min", 0.0)),
            float(d.get("t_max", 1.0)),
        )


def minkowski_cylinder(t_min=0.0, t_max=1.0, lengths=(2 * math.pi,)) -> SpacetimeSpec:
    return SpacetimeSpec(SpatialManifold(tuple(lengths)), t_min=t_min, t_max=t_max)


def desitter_type(t_min=0.0, t_max=1.0, lengths=(2 * math.pi,)) -> SpacetimeSpec:
    """``beta = 1``, ``f = cosh`` on a flat torus."""
    return SpacetimeSpec(
        SpatialManifold(tuple(lengths)), warp=TimeFunction.cosh(), t_min=t_min, t_max=t_max
    )


@dataclass(frozen=True)
class MetricData:
    beta: np.ndarray
    warp: np.ndarray
    g_tt_inv: np.ndarray
    g_xx_inv: np.ndarray
    vol_density: np.ndarray

    def astuple(self):
        return (self.beta, self.warp, self.g_tt_inv, self.g_xx_inv, self.vol_density)


def metric_data(spec: SpacetimeSpec, t) -> MetricData:
    """Metric coefficients at coordinate time ``t`` (scalar or array)."""
    spec.check_time(t)
    b = spec.beta(t)
    f = spec.warp(t)
    return MetricData(b, f, -1.0 / b, 1.0 / (f * f), np.sqrt(b) * f**spec.dim)


def light_speed(spec: SpacetimeSpec, t):
    """Coordinate slope ``sqrt(beta)/f`` of the null cone at time ``t``."""
    spec.check_time(t)
    return np.sqrt(spec.beta(t)) / spec.warp(t)


@dataclass(frozen=True)
class Grid:
    """Node lattice on the slab: ``Nt`` time levels including both ends and
    ``Nx[i]`` periodic nodes ``x_j = j * L_i / Nx[i]`` per spatial axis."""

    spec: SpacetimeSpec
    Nt: int
    Nx: tuple
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        Nx = (self.Nx,) if np.isscalar(self.Nx) else tuple(self.Nx)
        object.__setattr__(self, "Nx", tuple(int(n) for n in Nx))
        if len(self.Nx) != self.spec.dim:
            raise ValueError(f"need {self.spec.dim} spatial node counts, got {self.Nx}")
        if self.Nt < 3:
            raise ValueError(f"Nt must be >= 3, got {self.Nt}")
        if any(n < 4 for n in self.Nx):
            raise ValueError(f"Nx must be >= 4 per axis, got {self.Nx}")
        if not self.eta > 0:
            raise ValueError("CFL safety factor must be positive")

    @classmethod
    def from_cfl(cls, spec: SpacetimeSpec, Nx, eta: float = DEFAULT_ETA) -> Grid:
        """Smallest ``Nt`` whose CFL number does not exceed ``eta``."""
        Nx = (Nx,) if np.isscalar(Nx) else tuple(Nx)
        probe = cls(spec, 3, Nx, eta)
        c_max = probe.max_light_speed
        inv = math.sqrt(sum(1.0 / d**2 for d in probe.dx))
        steps = math.ceil((spec.t_max - spec.t_min) * c_max * inv / eta - 1e-12)
        grid = cls(spec, max(steps, 2) + 1, Nx, eta)
        while grid.cfl_number > eta:
            grid = cls(spec, grid.Nt + 1, Nx, eta)
        return grid

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def shape(self) -> tuple:
        return (self.Nt, *self.Nx)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def dt(self) -> float:
        return (self.spec.t_max - self.spec.t_min) / (self.Nt - 1)

    @property
    def dx(self) -> tuple:
        return tuple(L / n for L, n in zip(self.spec.spatial.lengths, self.Nx))

    @cached_property
    def t(self) -> np.ndarray:
        # Symmetric in the two endpoints so that time reflection maps nodes exactly.
        n = np.arange(self.Nt, dtype=float)
        m = (self.Nt - 1) - n
        return (m * self.spec.t_min + n * self.spec.t_max) / (self.Nt - 1)

    @cached_property
    def x(self) -> tuple:
        return tuple(np.arange(n) * d for n, d in zip(self.Nx, self.dx))

    def mesh(self) -> tuple:
        """Broadcastable coordinate arrays ``(T, X[, Y])`` of full grid shape."""
        return tuple(np.meshgrid(self.t, *self.x, indexing="ij"))

    @cached_property
    def light_speeds(self) -> np.ndarray:
        return light_speed(self.spec, self.t)

    @cached_property
    def max_light_speed(self) -> float:
        ts = np.concatenate(
            [np.linspace(self.spec.t_min, self.spec.t_max, POSITIVITY_SAMPLES), self.t]
        )
        return float(np.max(light_speed(self.spec, ts)))

    @property
    def cfl_number(self) -> float:
        """``max_t c(t) * dt * sqrt(sum_i 1/dx_i^2)``; equals ``c dt/dx`` in 1D."""
        inv = math.sqrt(sum(1.0 / d**2 for d in self.dx))
        return self.max_light_speed * self.dt * inv

    @property
    def required_dt(self) -> float:
        inv = math.sqrt(sum(1.0 / d**2 for d in self.dx))
        return self.eta / (self.max_light_speed * inv)

    def check_cfl(self) -> None:
        if self.cfl_number > self.eta * (1 + 1e-12):
            raise CFLError(
                f"CFL number {self.cfl_number:.6g} exceeds margin {self.eta}; "
                f"need dt <= {self.required_dt:.6g} (have {self.dt:.6g})",
                self.required_dt,
            )

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights ``sqrt|g| dt prod(dx)`` with halved time-end rows."""
        rho = np.sqrt(self.spec.beta(self.t)) * self.spec.warp(self.t) ** self.dim
        w_t = rho * self.dt
        w_t[0] *= 0.5
        w_t[-1] *= 0.5
        w = w_t * math.prod(self.dx)
        return np.broadcast_to(w.reshape((-1,) + (1,) * self.dim), self.shape).copy()

    def locate(self, event, strict: bool = False) -> tuple:
        """Node index nearest to the event ``(t, x[, y])``.

        Off-grid events are snapped with a warning, or rejected if ``strict``.
        """
        event = tuple(float(e) for e in event)
        if len(event) != 1 + self.dim:
            raise ValueError(f"event needs {1 + self.dim} coordinates, got {event}")
        self.spec.check_time(event[0])
        n = int(round((event[0] - self.spec.t_min) / self.dt))
        idx = [min(max(n, 0), self.Nt - 1)]
        for xi, d, N, L in zip(event[1:], self.dx, self.Nx, self.spec.spatial.lengths):
            idx.append(int(round((xi % L) / d)) % N)
        idx = tuple(idx)
        snapped = self.coords(idx)
        off = abs(snapped[0] - event[0]) > 1e-9 * self.dt or any(
            _torus_delta(a, b, L) > 1e-9 * d
            for a, b, L, d in zip(snapped[1:], event[1:], self.spec.spatial.lengths, self.dx)
        )
        if off:
            if strict:
                raise DomainError(f"event {event} is not a grid node")
            warnings.warn(f"event {event} snapped to node {snapped}", stacklevel=2)
        return idx

    def coords(self, node) -> tuple:
        return (float(self.t[node[0]]),) + tuple(
            float(x[i]) for x, i in zip(self.x, node[1:])
        )

    def with_spec(self, spec: SpacetimeSpec) -> Grid:
        return Grid(spec, self.Nt, self.Nx, self.eta)

    def reflected(self) -> Grid:
        return Grid(self.spec.reflected(), self.Nt, self.Nx, self.eta)


def _torus_delta(a, b, L):
    d = abs(a - b) % L
    return min(d, L - d)


def node_index(grid: Grid, point, strict: bool = False) -> tuple:
    """Integer tuples are node indices; anything else is an event to locate."""
    if all(isinstance(c, (int, np.integer)) for c in point):
        idx = tuple(int(c) for c in point)
        if len(idx) != 1 + grid.dim or not all(0 <= i < n for i, n in zip(idx, grid.shape)):
            raise DomainError(f"node index {idx} outside grid {grid.shape}")
        return idx
    return grid.locate(point, strict)


def volume_weight(grid: Grid, node) -> float:
    """Weight of ``node`` in the discrete integral ``sum w u ~ int u dV``."""
    return float(grid.weights[tuple(node)])


@dataclass
class ValidationReport:
    ok: bool
    failures: list
    cfl_number: float
    eta: float
    certificate: str

    def raise_if_failed(self) -> None:
        if self.ok:
            return
        cfl = [f for f in self.failures if f.startswith("CFL")]
        if cfl and len(cfl) == len(self.failures):
            raise CFLError(cfl[0], None)
        raise ValidationError("; ".join(self.failures), self.failures)


def validate(spec: SpacetimeSpec, grid: Grid | None = None) -> ValidationReport:
    """Certify membership in the globally hyperbolic family.

    Positivity of ``beta`` and ``f`` is checked on 4096 samples plus the
    slab endpoints (and grid nodes, when a grid is given).
    """
    failures = []
    ts = np.linspace(spec.t_min, spec.t_max, POSITIVITY_SAMPLES)
    if grid is not None:
        ts = np.union1d(ts, grid.t)
    for name, fn in (("beta", spec.beta), ("warp", spec.warp)):
        vals = fn(ts)
        bad = ts[~(vals > 0)]
        if bad.size:
            failures.append(
                f"{name} not positive at t = {', '.join(f'{v:.6g}' for v in bad[:5])}"
                + (f" (+{bad.size - 5} more)" if bad.size > 5 else "")
            )
    cfl = float("nan")
    eta = float("nan")
    if grid is not None and not failures:
        cfl, eta = grid.cfl_number, grid.eta
        if cfl > eta * (1 + 1e-12):
            failures.append(
                f"CFL number {cfl:.6g} exceeds margin {eta}; need dt <= {grid.required_dt:.6g}"
            )
    certificate = (
        "product foliation: each {t} x T^%d is a spacelike Cauchy hypersurface of the slab"
        % spec.dim
        if not failures
        else ""
    )
    return ValidationReport(not failures, failures, cfl, eta, certificate)
