"""Causal structure of the discretized slab.

Every spacetime in the family is conformal to ``-dEta^2 + g0`` with the
conformal time ``Eta(t) = int c(t) dt``, ``c = sqrt(beta)/f``. Hence the
causal future of an event ``(t0, x0)`` meets the slice at time ``t`` in the
torus ball of radius ``Eta(t) - Eta(t0)`` about ``x0``. Radii are carried as
continuous reals (trapezoid rule on the grid nodes) and rasterized only when
a slice is queried:

* closed sets (J) include a cell iff its centre lies within ``r + h``,
* open sets (I) include a cell iff its centre lies within ``r - h`` (strictly),

with ``h`` half the largest cell width.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, ndimage, optimize

from .errors import DomainError, PreconditionError
from .manifold import Grid, SpacetimeSpec, light_speed

__all__ = [
    "EventSet",
    "Diamond",
    "CauchyGraphReport",
    "frontier_radii",
    "conformal_time",
    "causal_time_separation",
    "gudermannian",
    "causal_future",
    "causal_past",
    "chronological_future",
    "chronological_past",
    "causal_hull",
    "causal_diamond",
    "is_achronal",
    "is_acausal",
    "is_cauchy_graph",
    "conformal_invariance_check",
    "past_compact_trace",
    "torus_distance_map",
]

# Raster comparisons are widened by this fraction of a cell so that
# last-ulp differences in the radii never flip a cell.
SNAP = 1e-9


def gudermannian(t):
    return 2.0 * np.arctan(np.tanh(np.asarray(t, dtype=float) / 2.0))


@dataclass
class EventSet:
    """Boolean raster over the grid nodes, one spatial mask per time slice.

    ``frontier[n]`` is the continuous cone radius at slice ``n`` when the set
    was generated by propagation from a single source slice (NaN elsewhere).
    """

    grid: Grid
    mask: np.ndarray
    frontier: np.ndarray | None = None

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.grid.shape:
            raise ValueError(f"mask shape {self.mask.shape} != grid shape {self.grid.shape}")

    @classmethod
    def empty(cls, grid: Grid) -> EventSet:
        return cls(grid, np.zeros(grid.shape, dtype=bool))

    @classmethod
    def from_nodes(cls, grid: Grid, nodes) -> EventSet:
        mask = np.zeros(grid.shape, dtype=bool)
        for node in nodes:
            mask[tuple(node)] = True
        return cls(grid, mask)

    @classmethod
    def from_events(cls, grid: Grid, events, strict: bool = False) -> EventSet:
        return cls.from_nodes(grid, [grid.locate(e, strict) for e in events])

    @classmethod
    def slice(cls, grid: Grid, n: int) -> EventSet:
        mask = np.zeros(grid.shape, dtype=bool)
        mask[n] = True
        return cls(grid, mask)

    def __contains__(self, node) -> bool:
        return bool(self.mask[tuple(node)])

    def __and__(self, other: EventSet) -> EventSet:
        return EventSet(self.grid, self.mask & other.mask)

    def __or__(self, other: EventSet) -> EventSet:
        return EventSet(self.grid, self.mask | other.mask)

    def __invert__(self) -> EventSet:
        return EventSet(self.grid, ~self.mask)

    def __eq__(self, other) -> bool:
        return isinstance(other, EventSet) and np.array_equal(self.mask, other.mask)

    def __len__(self) -> int:
        return int(self.mask.sum())

    @property
    def is_empty(self) -> bool:
        return not self.mask.any()

    def nodes(self) -> np.ndarray:
        return np.argwhere(self.mask)

    def subset_of(self, other: EventSet) -> bool:
        return not np.any(self.mask & ~other.mask)

    def bounding_box(self):
        """Index ranges ``((n0, n1), (i0, i1), ...)`` or ``None`` when empty."""
        if self.is_empty:
            return None
        idx = self.nodes()
        return tuple((int(lo), int(hi)) for lo, hi in zip(idx.min(axis=0), idx.max(axis=0)))

    def slice_cells(self, n: int) -> int:
        return int(self.mask[n].sum())


@dataclass
class Diamond:
    events: EventSet
    empty: bool
    compact: bool
    bounding_box: tuple | None


@dataclass
class CauchyGraphReport:
    ok: bool
    reason: str = ""
    violation: tuple | None = field(default=None, repr=False)

    def __bool__(self) -> bool:
        return self.ok


# -- frontier radii ----------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _exact_prefix(grid: Grid):
    """Trapezoid prefix sums of ``c`` held exactly as integers times ``2**-E``."""
    c = grid.light_speeds
    steps = 0.5 * grid.dt * (c[:-1] + c[1:])
    ratios = [float(h).as_integer_ratio() for h in steps]
    E = max(den.bit_length() - 1 for _, den in ratios)
    prefix = [0]
    for num, den in ratios:
        prefix.append(prefix[-1] + (num << (E - (den.bit_length() - 1))))
    return prefix, E


@functools.lru_cache(maxsize=4096)
def _radius_row(grid: Grid, n: int) -> np.ndarray:
    prefix, E = _exact_prefix(grid)
    pn = prefix[n]
    # Exact integer difference, one correctly rounded conversion.
    return np.array([math.ldexp(float(abs(p - pn)), -E) for p in prefix])


def frontier_radii(grid: Grid, n: int) -> np.ndarray:
    """Cone radius ``|int_{t_n}^{t_m} c dt|`` (trapezoid rule) for every slice ``m``."""
    return _radius_row(grid, int(n)).copy()


def conformal_time(spec: SpacetimeSpec, t) -> np.ndarray:
    """``Eta(t) = int_{t_min}^t c`` by adaptive quadrature (independent of any grid)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    spec.check_time(t)
    c = lambda s: float(light_speed(spec, s))
    out = np.empty_like(t)
    cache = {}
    for i, ti in enumerate(t):
        if ti not in cache:
            cache[ti] = integrate.quad(c, spec.t_min, ti, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        out[i] = cache[ti]
    return out


def causal_time_separation(spec: SpacetimeSpec, t0: float, distance: float) -> float:
    """Minimal coordinate time for a causal curve starting at ``t0`` to cover ``distance``.

    Returns ``inf`` if the slab ends first.
    """
    if distance <= 0:
        return 0.0
    eta0 = conformal_time(spec, t0)[0]
    eta_end = conformal_time(spec, spec.t_max)[0]
    if eta_end - eta0 < distance:
        return math.inf
    fn = lambda s: conformal_time(spec, s)[0] - eta0 - distance
    return optimize.brentq(fn, t0, spec.t_max, xtol=1e-14, rtol=1e-15) - t0


def torus_distance_map(grid: Grid, cells: np.ndarray) -> np.ndarray:
    """Flat-torus distance from every cell centre to the nearest marked cell."""
    cells = np.asarray(cells, dtype=bool)
    if not cells.any():
        return np.full(cells.shape, np.inf)
    tiled = np.tile(cells, (3,) * cells.ndim)
    dist = ndimage.distance_transform_edt(~tiled, sampling=grid.dx)
    centre = tuple(slice(n, 2 * n) for n in cells.shape)
    return dist[centre]


def _as_mask(A, grid: Grid) -> np.ndarray:
    if hasattr(A, "mask"):
        return np.asarray(A.mask, dtype=bool)
    if isinstance(A, np.ndarray) and A.dtype == bool:
        if A.shape != grid.shape:
            raise ValueError(f"mask shape {A.shape} does not match grid {grid.shape}")
        return A
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    return EventSet.from_events(grid, A).mask


def _propagate(mask: np.ndarray, grid: Grid, future: bool, closed: bool, dilate: int = 0):
    out = np.zeros(grid.shape, dtype=bool)
    flat = mask.reshape(grid.Nt, -1)
    source_slices = np.nonzero(flat.any(axis=1))[0]
    h = 0.5 * max(grid.dx) + dilate * max(grid.dx)
    snap = SNAP * min(grid.dx)
    spatial = (slice(None),) + (None,) * grid.dim
    for n in source_slices:
        dist = torus_distance_map(grid, mask[n])
        radii = _radius_row(grid, int(n))
        targets = np.arange(n, grid.Nt) if future else np.arange(0, n + 1)
        r = radii[targets]
        if closed:
            hit = dist[None] <= (r + h + snap)[spatial]
        else:
            hit = dist[None] < (r - h - snap)[spatial]
        out[targets] |= hit
    frontier = None
    if len(source_slices) == 1:
        n = int(source_slices[0])
        frontier = np.full(grid.Nt, np.nan)
        radii = _radius_row(grid, n)
        sel = slice(n, None) if future else slice(0, n + 1)
        frontier[sel] = radii[sel]
    return out, frontier


def causal_future(A, grid: Grid, dilate: int = 0) -> EventSet:
    """Rasterized ``J+(A)``.

    ``A`` is an ``EventSet`` or one/several events ``(t, x[, y])``. ``dilate``
    widens the closed raster by that many cells.
    """
    mask, frontier = _propagate(_as_mask(A, grid), grid, True, True, dilate)
    return EventSet(grid, mask, frontier)


def causal_past(A, grid: Grid, dilate: int = 0) -> EventSet:
    mask, frontier = _propagate(_as_mask(A, grid), grid, False, True, dilate)
    return EventSet(grid, mask, frontier)


def chronological_future(A, grid: Grid) -> EventSet:
    """Rasterized ``I+(A)`` (strict inequality, inward rounding)."""
    mask, frontier = _propagate(_as_mask(A, grid), grid, True, False)
    return EventSet(grid, mask, frontier)


def chronological_past(A, grid: Grid) -> EventSet:
    mask, frontier = _propagate(_as_mask(A, grid), grid, False, False)
    return EventSet(grid, mask, frontier)


def causal_hull(A, grid: Grid, dilate: int = 0) -> EventSet:
    """``J(A) = J+(A) | J-(A)``."""
    return causal_future(A, grid, dilate) | causal_past(A, grid, dilate)


def causal_diamond(p, q, grid: Grid) -> Diamond:
    """``J+(p) & J-(q)`` with an emptiness flag for ``q`` outside ``J+(p)``."""
    jp = causal_future(p, grid)
    q_node = grid.locate(q) if not isinstance(q, EventSet) else None
    if q_node is not None and q_node not in jp:
        return Diamond(EventSet.empty(grid), True, True, None)
    events = jp & causal_past(q, grid)
    # A finite raster with closed rounding is compact by construction.
    return Diamond(events, events.is_empty, True, events.bounding_box())


def _graph_times(h, grid: Grid) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != tuple(grid.Nx):
        raise PreconditionError(f"graph needs one value per cell {grid.Nx}, got {h.shape}")
    return h


def _graph_violation(h, grid: Grid, strict: bool):
    h = _graph_times(h, grid)
    defined = np.isfinite(h)
    spec = grid.spec
    vals = h[defined]
    if np.any(vals <= spec.t_min) or np.any(vals >= spec.t_max):
        raise DomainError("graph values must lie strictly inside the slab")
    eta = np.full(h.shape, np.nan)
    eta[defined] = conformal_time(spec, vals)
    coords = np.stack(np.meshgrid(*grid.x, indexing="ij"), axis=-1)[defined]
    e = eta[defined]
    # All-pairs torus distances.
    diff = np.abs(coords[:, None, :] - coords[None, :, :])
    L = np.asarray(grid.spec.spatial.lengths)
    diff = np.minimum(diff, L - diff)
    dist = np.sqrt((diff**2).sum(-1))
    lift = e[None, :] - e[:, None]
    tol = 1e-12 * max(1.0, float(np.max(np.abs(e))) if e.size else 1.0)
    if strict:
        bad = (lift >= dist - tol) & (dist > 0)
    else:
        bad = lift > dist + tol
    if not bad.any():
        return None
    i, j = np.argwhere(bad)[0]
    cells = np.argwhere(defined)
    return tuple(cells[i]), tuple(cells[j])


def is_achronal(h, grid: Grid) -> bool:
    """No timelike curve joins two points of the graph ``t = h(x)``.

    All-pairs test: the points ``(h(x), x)`` and ``(h(y), y)`` with
    ``h(y) >= h(x)`` are timelike related iff ``Eta(h(y)) - Eta(h(x))``
    exceeds the torus distance of ``x`` and ``y``.
    """
    return _graph_violation(h, grid, strict=False) is None


def is_acausal(h, grid: Grid) -> bool:
    """As :func:`is_achronal` with causal (non-strict) connectability."""
    return _graph_violation(h, grid, strict=True) is None


def is_cauchy_graph(h, grid: Grid) -> CauchyGraphReport:
    """Sufficient test for a Cauchy hypersurface within the product family.

    Every inextendible timelike curve is t-monotone and spans the slab, so a
    graph defined on all of ``S`` is crossed at least once; achronality
    gives at most once.
    """
    h = _graph_times(h, grid)
    if not np.all(np.isfinite(h)):
        missing = int((~np.isfinite(h)).sum())
        return CauchyGraphReport(False, f"graph undefined on {missing} cells")
    violation = _graph_violation(h, grid, strict=False)
    if violation is not None:
        return CauchyGraphReport(False, f"timelike related cells {violation}", violation)
    return CauchyGraphReport(True, "achronal graph over all of S")


def conformal_invariance_check(A, spec: SpacetimeSpec, kappa: float, grid: Grid) -> bool:
    """``J+(A)`` under ``g`` and under ``kappa * g`` agree cell for cell."""
    if not kappa > 0:
        raise DomainError(f"conformal factor must be positive, got {kappa}")
    base = grid.with_spec(spec)
    scaled = grid.with_spec(spec.conformal(kappa))
    mask = _as_mask(A, base)
    a = causal_future(EventSet(base, mask), base)
    b = causal_future(EventSet(scaled, mask), scaled)
    return bool(np.array_equal(a.mask, b.mask))


def past_compact_trace(A: EventSet, p, grid: Grid) -> EventSet:
    """``A & J-(p)``; its ``bounding_box()`` reports the (finite) extent."""
    return A & causal_past(p, grid)
