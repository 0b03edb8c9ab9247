"""Grid sections, discrete distributions, supports and C^k norms.

On a finite grid the dual of the section space is finite dimensional, so a
distribution is stored extensionally as one ``dim_W x r`` weight block per
node and acts by ``T[phi] = sum_nodes weights @ phi``. Sections ``g`` embed
as ``T_g[phi] = sum_nodes W g^H phi``, the quadrature of ``int <g, phi> dV``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .causal import EventSet, torus_distance_map
from .errors import ShapeError, UnsupportedOrderError
from .manifold import Grid, node_index
from .stencil import Stencil, shift

__all__ = [
    "GridSection",
    "DiscreteDistribution",
    "SupportSet",
    "DEFAULT_TAU",
    "as_values",
    "pair",
    "from_section",
    "delta",
    "first_difference",
    "mollified_delta",
    "multiply",
    "apply_op_to_distribution",
    "support",
    "ck_norm",
    "weak_limit_probe",
]

DEFAULT_TAU = 1e-10
MAX_CK_ORDER = 4


@dataclass(frozen=True, eq=False)
class GridSection:
    """Values of a rank-``r`` section at every grid node, shape ``(*grid.shape, r)``."""

    grid: Grid
    values: np.ndarray
    real: bool = False

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape == self.grid.shape:
            v = v[..., None]
        if v.shape[:-1] != self.grid.shape:
            raise ShapeError(f"section shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("section values must be finite")
        if self.real and np.iscomplexobj(v):
            if np.any(v.imag):
                raise ValueError("real section has nonzero imaginary part")
            v = v.real
        object.__setattr__(self, "values", v)

    @property
    def rank(self) -> int:
        return self.values.shape[-1]

    @classmethod
    def zeros(cls, grid: Grid, rank: int = 1, real: bool = False) -> GridSection:
        dtype = float if real else complex
        return cls(grid, np.zeros(grid.shape + (rank,), dtype=dtype), real)

    @classmethod
    def from_function(cls, grid: Grid, fn, rank: int = 1) -> GridSection:
        """Sample ``fn(t, x[, y])``; a rank > 1 function returns the components last."""
        vals = np.asarray(fn(*grid.mesh()))
        if rank == 1 and vals.shape == grid.shape:
            vals = vals[..., None]
        return cls(grid, vals, real=not np.iscomplexobj(vals))

    def _wrap(self, v) -> GridSection:
        return GridSection(self.grid, v, self.real and not np.iscomplexobj(v))

    def __add__(self, other):
        return self._wrap(self.values + as_values(other))

    def __sub__(self, other):
        return self._wrap(self.values - as_values(other))

    def __mul__(self, a):
        return self._wrap(self.values * a)

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.values)


def as_values(u, grid: Grid | None = None) -> np.ndarray:
    """Raw value array ``(*grid.shape, r)`` of a section or array."""
    if isinstance(u, GridSection):
        return u.values
    v = np.asarray(u)
    if grid is not None and v.shape == grid.shape:
        v = v[..., None]
    return v


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Linear functional on rank-``r`` sections with values in ``C^dim_W``."""

    grid: Grid
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights)
        if w.ndim != self.grid.dim + 3 or w.shape[: self.grid.dim + 1] != self.grid.shape:
            raise ShapeError(f"weights shape {w.shape} does not fit grid {self.grid.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("distribution weights must be finite")
        object.__setattr__(self, "weights", w)

    @property
    def dim_w(self) -> int:
        return self.weights.shape[-2]

    @property
    def rank(self) -> int:
        return self.weights.shape[-1]

    def __call__(self, phi) -> np.ndarray:
        return pair(self, phi)

    def __add__(self, other: DiscreteDistribution) -> DiscreteDistribution:
        return DiscreteDistribution(self.grid, self.weights + other.weights)

    def __sub__(self, other: DiscreteDistribution) -> DiscreteDistribution:
        return DiscreteDistribution(self.grid, self.weights - other.weights)

    def __mul__(self, a) -> DiscreteDistribution:
        return DiscreteDistribution(self.grid, self.weights * a)

    __rmul__ = __mul__

    def magnitude(self) -> np.ndarray:
        """Per-node weight size divided by the volume weight (a density)."""
        w = np.sqrt(np.sum(np.abs(self.weights) ** 2, axis=(-2, -1)))
        return w / self.grid.weights

    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.weights)))


@dataclass(eq=False)
class SupportSet(EventSet):
    """Nodes whose magnitude exceeds ``tau`` times the global maximum."""

    tau: float = DEFAULT_TAU


def _check_grid(a: Grid, b: Grid) -> None:
    if a is not b and a != b:
        raise ShapeError("objects live on different grids")


def pair(T: DiscreteDistribution, phi) -> np.ndarray:
    """``T[phi]`` as a complex ``dim_W``-vector."""
    if isinstance(phi, GridSection):
        _check_grid(T.grid, phi.grid)
    v = as_values(phi, T.grid)
    if v.shape != T.grid.shape + (T.rank,):
        raise ShapeError(f"test section shape {v.shape} does not match rank {T.rank}")
    n = T.grid.size
    w = T.weights.reshape(n, T.dim_w, T.rank)
    return np.einsum("nwr,nr->w", w, v.reshape(n, T.rank))


def from_section(g, grid: Grid | None = None) -> DiscreteDistribution:
    """Regular distribution ``phi -> sum W <g, phi>`` of a section (``dim_W = 1``)."""
    if isinstance(g, GridSection):
        grid = g.grid
    if grid is None:
        raise ValueError("grid required for raw arrays")
    v = as_values(g, grid)
    W = grid.weights[..., None, None]
    return DiscreteDistribution(grid, W * np.conj(v)[..., None, :])


def delta(grid: Grid, event, rank: int = 1, strict: bool = False) -> DiscreteDistribution:
    """Point evaluation at an event or integer node index; ``dim_W = r``."""
    idx = node_index(grid, event, strict)
    w = np.zeros(grid.shape + (rank, rank))
    w[idx] = np.eye(rank)
    return DiscreteDistribution(grid, w)


def first_difference(grid: Grid, event, axis: int = 0, strict: bool = False
                     ) -> DiscreteDistribution:
    """Centered difference ``phi -> (phi(x + h) - phi(x - h)) / 2h`` along a spatial axis.

    Its support is the two neighbours of ``x``, not ``x`` itself: the grid
    cannot express a distribution supported at one node that sees derivatives.
    """
    idx = node_index(grid, event, strict)
    h = grid.dx[axis]
    w = np.zeros(grid.shape + (1, 1))
    for step, sign in ((1, 1.0), (-1, -1.0)):
        j = list(idx)
        j[axis + 1] = (j[axis + 1] + step) % grid.Nx[axis]
        w[tuple(j)] = sign / (2 * h)
    return DiscreteDistribution(grid, w)


def mollified_delta(grid: Grid, event, width: float, rank: int = 1) -> DiscreteDistribution:
    """Normalized Gaussian density of space-time ``width`` centred at a node."""
    idx = node_index(grid, event)
    cells = np.zeros(grid.Nx, dtype=bool)
    cells[idx[1:]] = True
    d2 = torus_distance_map(grid, cells) ** 2
    dt2 = (grid.t - grid.t[idx[0]]) ** 2
    r2 = dt2.reshape((-1,) + (1,) * grid.dim) + d2[None]
    bump = np.exp(-0.5 * r2 / width**2)
    mass = np.sum(grid.weights * bump)
    w = (grid.weights * bump / mass)[..., None, None] * np.eye(rank)
    return DiscreteDistribution(grid, w)


def multiply(T: DiscreteDistribution, f) -> DiscreteDistribution:
    """``(f T)[phi] = T[f phi]`` for a scalar or matrix-valued function on the grid."""
    f = np.asarray(f)
    if f.shape == T.grid.shape:
        return DiscreteDistribution(T.grid, T.weights * f[..., None, None])
    return DiscreteDistribution(T.grid, T.weights @ f)


def _pullback(stencil: Stencil, weights: np.ndarray) -> np.ndarray:
    """Weights of ``phi -> T[Q phi]``: ``w'(m) = sum_off w(m - off) C_off(m - off)``."""
    out = np.zeros(weights.shape, dtype=np.result_type(weights, stencil.dtype))
    for off in stencil.offsets:
        neg = tuple(-k for k in off)
        out += shift(weights @ stencil.coeffs[off], neg)
    return out


def _operator_stencil(P, grid: Grid) -> Stencil:
    if isinstance(P, Stencil):
        return P
    if hasattr(P, "transpose") and hasattr(P, "interior"):
        return P.transpose
    return P.discretize(grid).transpose


def apply_op_to_distribution(P, T: DiscreteDistribution) -> DiscreteDistribution:
    """``(P T)[phi] = T[P^T_W phi]``.

    ``P`` may be a :class:`~wavelab.operators.WaveOperator` (discretized on
    ``T.grid``), a discrete operator, or a raw :class:`Stencil` that is used
    as the test-side operator directly.
    """
    Q = _operator_stencil(P, T.grid)
    _check_grid(Q.grid, T.grid)
    return DiscreteDistribution(T.grid, _pullback(Q, T.weights))


def support(u, tau: float = DEFAULT_TAU) -> SupportSet:
    """Nodes carrying magnitude above ``tau`` times the maximum; empty for zero."""
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    if isinstance(u, DiscreteDistribution):
        grid, mag = u.grid, u.magnitude()
    elif isinstance(u, GridSection):
        grid = u.grid
        mag = np.sqrt(np.sum(np.abs(u.values) ** 2, axis=-1))
    else:
        raise TypeError("support expects a GridSection or DiscreteDistribution")
    peak = mag.max()
    mask = mag > tau * peak if peak > 0 else np.zeros(grid.shape, dtype=bool)
    return SupportSet(grid, mask, tau=tau)


# -- C^k norms ---------------------------------------------------------------


def _dt(u: np.ndarray, dt: float) -> np.ndarray:
    return np.gradient(u, dt, axis=0, edge_order=2)


_SPACE_STENCILS = {
    1: ({1: 0.5, -1: -0.5}, 1),
    2: ({1: 1.0, 0: -2.0, -1: 1.0}, 2),
    3: ({2: 0.5, 1: -1.0, -1: 1.0, -2: -0.5}, 3),
    4: ({2: 1.0, 1: -4.0, 0: 6.0, -1: -4.0, -2: 1.0}, 4),
}


def _dx(u: np.ndarray, h: float, axis: int, m: int) -> np.ndarray:
    coeffs, p = _SPACE_STENCILS[m]
    out = np.zeros_like(u)
    for k, c in coeffs.items():
        out = out + c * np.roll(u, -k, axis=axis)
    return out / h**p


def _partial(u: np.ndarray, grid: Grid, counts: tuple) -> np.ndarray:
    out = u
    for _ in range(counts[0]):
        out = _dt(out, grid.dt)
    for axis, m in enumerate(counts[1:]):
        if m:
            out = _dx(out, grid.dx[axis], axis + 1, m)
    return out


def ck_norm(u, k: int, A=None) -> float:
    """``max_{j <= k} sup_A |nabla^j u|`` with flat coordinates and trivial connection.

    The ``j``-th derivative tensor is measured in the Euclidean norm over all
    ordered index tuples, so a mixed partial with multiplicity ``m`` enters
    ``m`` times. ``A`` restricts the supremum to a node mask or event set.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > MAX_CK_ORDER:
        raise UnsupportedOrderError(f"C^k norms implemented up to k = {MAX_CK_ORDER}")
    if not isinstance(u, GridSection):
        raise TypeError("ck_norm expects a GridSection")
    grid = u.grid
    mask = np.ones(grid.shape, dtype=bool) if A is None else np.asarray(getattr(A, "mask", A), bool)
    if not mask.any():
        return 0.0
    v = u.values
    n_axes = grid.dim + 1
    best = 0.0
    for j in range(k + 1):
        total = np.zeros(grid.shape)
        for counts in _compositions(j, n_axes):
            mult = math.factorial(j) // math.prod(math.factorial(c) for c in counts)
            d = _partial(v, grid, counts)
            total += mult * np.sum(np.abs(d) ** 2, axis=-1)
        best = max(best, float(np.sqrt(total[mask].max())))
    return best


def _compositions(j: int, n: int):
    for combo in itertools.combinations_with_replacement(range(n), j):
        yield tuple(combo.count(a) for a in range(n))


# -- weak convergence ----------------------------------------------------------


@dataclass
class WeakLimitReport:
    defects: list
    monotone: bool
    pushed_defects: list = field(default_factory=list)
    bounds: list = field(default_factory=list)
    stencil_norm: float | None = None
    bounded: bool = True

    def as_dict(self) -> dict:
        return {
            "defects": self.defects,
            "monotone": self.monotone,
            "pushed_defects": self.pushed_defects,
            "bounds": self.bounds,
            "stencil_norm": self.stencil_norm,
            "bounded": self.bounded,
        }


def weak_limit_probe(Ts, T: DiscreteDistribution, battery, P=None) -> WeakLimitReport:
    """Defects ``max_phi |T_n[phi] - T[phi]|`` along a sequence.

    With an operator ``P`` the defects of ``P T_n`` against ``P T`` are also
    reported together with the bound ``||Q||_inf * TV(T_n - T) * max|phi|``,
    where ``Q = P^T_W`` is the test-side stencil and TV the weight total
    variation; linearity guarantees the pushed defects never exceed it.
    """
    battery = [as_values(phi, T.grid) for phi in battery]
    defects = []
    for Tn in Ts:
        defects.append(max(float(np.max(np.abs(pair(Tn - T, phi)))) for phi in battery))
    monotone = all(b <= a for a, b in zip(defects, defects[1:]))
    report = WeakLimitReport(defects, monotone)
    if P is not None:
        Q = _operator_stencil(P, T.grid)
        norm = Q.row_norm()
        PT = apply_op_to_distribution(Q, T)
        sup_phi = max(float(np.max(np.abs(phi))) for phi in battery)
        for Tn in Ts:
            diff = apply_op_to_distribution(Q, Tn) - PT
            pushed = max(float(np.max(np.abs(pair(diff, phi)))) for phi in battery)
            report.pushed_defects.append(pushed)
            report.bounds.append(norm * (Tn - T).total_variation() * sup_phi)
        report.stencil_norm = norm
        report.bounded = all(p <= b * (1 + 1e-12) for p, b in zip(report.pushed_defects, report.bounds))
    return report
