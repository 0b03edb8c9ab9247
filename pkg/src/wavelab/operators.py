"""Normally hyperbolic operators on the warped family and their discretization.

An operator acts on sections of the trivial bundle ``M x C^r`` as

    P u = -g^{mu nu} d_mu d_nu u + A_mu d_mu u + B u

with diagonal inverse metric ``g^{tt} = -1/beta``, ``g^{xx} = 1/f^2``. The
first-order matrices ``A_mu`` and the potential ``B`` are sympy matrices in
``t, x[, y]`` so that formal adjoints can be derived symbolically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy

from .errors import ShapeError
from .manifold import SYMBOLIC_FUNCTIONS, Grid, SpacetimeSpec
from .stencil import Stencil, space_offset, time_offset

__all__ = [
    "WaveOperator",
    "DiscreteOperator",
    "coordinates",
    "dalembert",
    "connection_dalembert",
    "christoffel",
    "formal_adjoint",
    "discrete_adjoint",
    "principal_symbol",
    "composed_symbol",
    "metric_pairing",
    "apply",
    "symbolic_apply",
    "formal_adjoint_defect",
]

T, X, Y = sympy.symbols("t x y", real=True)


def coordinates(spec: SpacetimeSpec) -> tuple:
    return (T, X, Y)[: spec.dim + 1]


def _metric_exprs(spec: SpacetimeSpec):
    beta = spec.beta.symbol(T)
    f = spec.warp.symbol(T)
    return beta, f


def _as_matrix(value, rank: int) -> sympy.Matrix:
    if value is None:
        return sympy.zeros(rank, rank)
    if isinstance(value, str):
        value = sympy.sympify(value, locals={"t": T, "x": X, "y": Y})
    if isinstance(value, (int, float, complex, sympy.Expr)):
        return sympy.sympify(value) * sympy.eye(rank)
    M = sympy.Matrix(value)
    if M.shape != (rank, rank):
        raise ShapeError(f"coefficient matrix has shape {M.shape}, expected {(rank, rank)}")
    return M.applyfunc(
        lambda e: sympy.sympify(e, locals={"t": T, "x": X, "y": Y})
        if isinstance(e, str)
        else e
    )


@dataclass(frozen=True, eq=False)
class WaveOperator:
    """Second-order operator with metric principal part.

    ``first_order`` holds one ``r x r`` sympy matrix per coordinate in the
    order ``t, x[, y]``; ``potential`` is ``B``.
    """

    spec: SpacetimeSpec
    rank: int
    first_order: tuple
    potential: sympy.Matrix
    name: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.spec.dim + 1
        if len(self.first_order) != n:
            raise ShapeError(f"need {n} first-order matrices, got {len(self.first_order)}")
        fo = tuple(_as_matrix(A, self.rank) for A in self.first_order)
        object.__setattr__(self, "first_order", fo)
        object.__setattr__(self, "potential", _as_matrix(self.potential, self.rank))

    @cached_property
    def principal(self) -> tuple:
        """Symbolic ``(a_tt, a_xx)`` with ``-g^{mu nu} d_mu d_nu = a_tt d_t^2 - a_xx Lap_x``."""
        beta, f = _metric_exprs(self.spec)
        return 1 / beta, 1 / f**2

    @cached_property
    def _numeric(self):
        syms = coordinates(self.spec)
        mods = [SYMBOLIC_FUNCTIONS, "numpy"]
        a_tt, a_xx = self.principal
        scalars = [sympy.lambdify(syms, e, modules=mods) for e in (a_tt, a_xx)]
        mats = [
            [[sympy.lambdify(syms, M[i, j], modules=mods) for j in range(self.rank)]
             for i in range(self.rank)]
            for M in (*self.first_order, self.potential)
        ]
        return scalars, mats

    def coefficients(self, *coords) -> dict:
        """Evaluate all coefficients on broadcastable coordinate arrays.

        Returns ``a_tt`` and ``a_xx`` of the broadcast shape, ``A`` as a list
        of arrays ``(*shape, r, r)`` and ``B`` likewise.
        """
        coords = [np.asarray(c, dtype=float) for c in coords]
        shape = np.broadcast_shapes(*(c.shape for c in coords))
        scalars, mats = self._numeric
        a_tt = np.broadcast_to(scalars[0](*coords), shape).astype(float)
        a_xx = np.broadcast_to(scalars[1](*coords), shape).astype(float)
        blocks = [_eval_block(m, coords, shape, self.rank) for m in mats]
        return {"a_tt": a_tt, "a_xx": a_xx, "A": blocks[:-1], "B": blocks[-1]}

    def at(self, event) -> dict:
        return self.coefficients(*[np.asarray(float(c)) for c in event])

    def discretize(self, grid: Grid) -> DiscreteOperator:
        if grid.spec != self.spec:
            raise ValueError("grid belongs to a different spacetime")
        return DiscreteOperator(self, grid)


def _eval_block(funcs, coords, shape, rank):
    vals = [[np.broadcast_to(fn(*coords), shape) for fn in row] for row in funcs]
    dtype = np.result_type(*(v.dtype for row in vals for v in row), float)
    out = np.empty(shape + (rank, rank), dtype=dtype)
    for i in range(rank):
        for j in range(rank):
            out[..., i, j] = vals[i][j]
    return out


def dalembert(spec: SpacetimeSpec, rank: int = 1) -> WaveOperator:
    """Scalar (or ``rank``-fold diagonal) wave operator of the metric."""
    beta, f = _metric_exprs(spec)
    d = spec.dim
    db = sympy.diff(beta, T)
    df = sympy.diff(f, T)
    A_t = (d * df / f) / beta - db / (2 * beta**2)
    fo = [A_t * sympy.eye(rank)] + [sympy.zeros(rank, rank) for _ in range(d)]
    return WaveOperator(spec, rank, tuple(fo), sympy.zeros(rank, rank), name="dalembert")


def christoffel(spec: SpacetimeSpec):
    """``Gamma[l][m][n]`` from the symbolic metric ``diag(-beta, f^2, ..)``."""
    beta, f = _metric_exprs(spec)
    syms = coordinates(spec)
    n = len(syms)
    g = sympy.diag(-beta, *([f**2] * spec.dim))
    ginv = g.inv()
    gam = [[[0] * n for _ in range(n)] for _ in range(n)]
    for lam in range(n):
        for mu in range(n):
            for nu in range(n):
                s = 0
                for k in range(n):
                    s += ginv[lam, k] * (
                        sympy.diff(g[k, mu], syms[nu])
                        + sympy.diff(g[k, nu], syms[mu])
                        - sympy.diff(g[mu, nu], syms[k])
                    )
                gam[lam][mu][nu] = sympy.simplify(s / 2)
    return gam, ginv


def connection_dalembert(spec: SpacetimeSpec, connection, rank: int | None = None,
                         potential=None) -> WaveOperator:
    """Connection wave operator ``-tr_g(nabla^2) (+ potential)`` for ``nabla = d + A``.

    ``connection`` lists one ``r x r`` matrix per coordinate ``t, x[, y]``
    (sympy-parsable strings allowed) or maps coordinate names to matrices.
    """
    syms = coordinates(spec)
    names = [str(s) for s in syms]
    if isinstance(connection, dict):
        conn = [connection.get(nm) for nm in names]
    else:
        conn = list(connection)
    if rank is None:
        probe = next((c for c in conn if c is not None and not isinstance(c, (str, int, float))), None)
        rank = sympy.Matrix(probe).shape[0] if probe is not None else 1
    As = [_as_matrix(c, rank) for c in conn]
    if len(As) != len(syms):
        raise ShapeError(f"need {len(syms)} connection matrices, got {len(As)}")
    gam, ginv = christoffel(spec)
    n = len(syms)
    # g^{mu nu} Gamma^lambda_{mu nu}
    contr = [sympy.simplify(sum(ginv[m, m] * gam[lam][m][m] for m in range(n))) for lam in range(n)]
    eye = sympy.eye(rank)
    first = []
    for mu in range(n):
        first.append(-2 * ginv[mu, mu] * As[mu] + contr[mu] * eye)
    B = sympy.zeros(rank, rank)
    for mu in range(n):
        B += -ginv[mu, mu] * (As[mu].diff(syms[mu]) + As[mu] * As[mu])
        B += contr[mu] * As[mu]
    if potential is not None:
        B += _as_matrix(potential, rank)
    return WaveOperator(spec, rank, tuple(first), B, name="connection",
                        meta={"connection": As})


def formal_adjoint(P: WaveOperator) -> WaveOperator:
    """Formal adjoint for ``int <u, P v> dvol = int <P* u, v> dvol`` (Hermitian fibres)."""
    beta, f = _metric_exprs(P.spec)
    syms = coordinates(P.spec)
    rho = sympy.sqrt(beta) * f**P.spec.dim
    s = -rho / beta  # rho * g^{tt}
    ds = sympy.diff(s, T)
    dds = sympy.diff(s, T, 2)
    eye = sympy.eye(P.rank)
    AH = [A.H for A in P.first_order]
    first = [-AH[0] - 2 * (ds / rho) * eye] + [-A for A in AH[1:]]
    B = P.potential.H - (dds / rho) * eye
    for mu, A in enumerate(AH):
        B -= (rho * A).diff(syms[mu]) / rho
    return WaveOperator(P.spec, P.rank, tuple(first), B, name=P.name + "*", meta=dict(P.meta))


class DiscreteOperator:
    """Leapfrog discretization of a :class:`WaveOperator` on a grid.

    ``full`` carries every row (used to seed Cauchy problems), ``interior``
    drops the first and last time rows and is what Green operators invert.
    """

    def __init__(self, op: WaveOperator, grid: Grid):
        self.op = op
        self.grid = grid
        self.rank = op.rank
        c = op.coefficients(*grid.mesh())
        self.coeff_values = c
        self.full = _build_stencil(grid, c, op.rank)

    @cached_property
    def interior(self) -> Stencil:
        return self.full.interior()

    @cached_property
    def transpose(self) -> Stencil:
        """Discrete W-adjoint of the interior stencil."""
        return self.interior.transpose(self.grid.weights)

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.interior.apply(u)

    def apply_transpose(self, u: np.ndarray) -> np.ndarray:
        return self.transpose.apply(u)


def _build_stencil(grid: Grid, c: dict, rank: int) -> Stencil:
    dim = grid.dim
    eye = np.eye(rank)
    inv_dt2 = 1.0 / grid.dt**2
    half_inv_dt = 0.5 / grid.dt
    a_tt = c["a_tt"][..., None, None] * eye
    a_xx = c["a_xx"][..., None, None] * eye
    A = c["A"]
    coeffs = {
        time_offset(1, dim): a_tt * inv_dt2 + A[0] * half_inv_dt,
        time_offset(-1, dim): a_tt * inv_dt2 - A[0] * half_inv_dt,
    }
    centre = -2.0 * a_tt * inv_dt2 + c["B"]
    for axis in range(dim):
        h = grid.dx[axis]
        inv_h2 = 1.0 / h**2
        half_inv_h = 0.5 / h
        coeffs[space_offset(axis, 1, dim)] = -a_xx * inv_h2 + A[axis + 1] * half_inv_h
        coeffs[space_offset(axis, -1, dim)] = -a_xx * inv_h2 - A[axis + 1] * half_inv_h
        centre = centre + 2.0 * a_xx * inv_h2
    coeffs[time_offset(0, dim)] = centre
    dtype = np.result_type(*coeffs.values())
    coeffs = {k: np.ascontiguousarray(v, dtype=dtype) for k, v in coeffs.items()}
    return Stencil(grid, coeffs, rank)


def discrete_adjoint(D: DiscreteOperator) -> Stencil:
    """``P^T_W = W^-1 P^H W`` for the interior stencil."""
    return D.transpose


def apply(P: WaveOperator, u: np.ndarray, grid: Grid) -> np.ndarray:
    """Finite-difference evaluation of ``P u`` on every node.

    Centered differences inside, second-order one-sided differences on the
    first and last time levels, periodic in space. Diagnostic only: the
    Green and Cauchy machinery use :class:`DiscreteOperator`.
    """
    u = np.asarray(u)
    if u.ndim == grid.dim + 1:
        u = u[..., None]
    if u.shape != grid.shape + (P.rank,):
        raise ShapeError(f"section shape {u.shape} does not match grid")
    c = P.coefficients(*grid.mesh())
    dt = grid.dt
    u_t = np.empty_like(u)
    u_tt = np.empty_like(u)
    u_t[1:-1] = (u[2:] - u[:-2]) / (2 * dt)
    u_t[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * dt)
    u_t[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * dt)
    u_tt[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / dt**2
    if grid.Nt >= 4:
        u_tt[0] = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / dt**2
        u_tt[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / dt**2
    else:
        u_tt[0] = u_tt[1]
        u_tt[-1] = u_tt[1]
    out = c["a_tt"][..., None] * u_tt + (c["A"][0] @ u_t[..., None])[..., 0]
    for axis in range(grid.dim):
        h = grid.dx[axis]
        ax = axis + 1
        up = np.roll(u, -1, axis=ax)
        dn = np.roll(u, 1, axis=ax)
        out = out - c["a_xx"][..., None] * (up - 2 * u + dn) / h**2
        out = out + (c["A"][ax] @ ((up - dn) / (2 * h))[..., None])[..., 0]
    out = out + (c["B"] @ u[..., None])[..., 0]
    return out


def metric_pairing(spec: SpacetimeSpec, event, xi) -> float:
    """``g^{-1}(xi, xi)`` from the numerically inverted covariant metric."""
    t = float(event[0])
    g = np.diag([-float(spec.beta(t))] + [float(spec.warp(t)) ** 2] * spec.dim)
    xi = np.asarray(xi, dtype=float)
    return float(xi @ np.linalg.inv(g) @ xi)


def principal_symbol(P: WaveOperator, event, xi) -> np.ndarray:
    """Principal symbol ``sigma_P(xi) = (a_tt xi_t^2 - a_xx |xi_x|^2) Id``.

    Normal hyperbolicity means this equals ``-g^{-1}(xi, xi) Id``.
    """
    xi = np.asarray(xi, dtype=float)
    c = P.at(event)
    val = float(c["a_tt"]) * xi[0] ** 2 - float(c["a_xx"]) * float(xi[1:] @ xi[1:])
    return val * np.eye(P.rank)


def composed_symbol(P: WaveOperator, event, xi) -> np.ndarray:
    """Symbol of ``-tr_g(nabla o nabla)`` composed from first-order symbols.

    ``sigma_nabla(xi) phi = xi (x) phi``; applying it twice and contracting
    with the inverse metric recovers the principal symbol independently of
    the coefficient bookkeeping in :class:`WaveOperator`.
    """
    spec = P.spec
    t = float(event[0])
    g = np.diag([-float(spec.beta(t))] + [float(spec.warp(t)) ** 2] * spec.dim)
    ginv = np.linalg.inv(g)
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((P.rank, P.rank))
    for b in range(P.rank):
        phi = np.eye(P.rank)[b]
        once = np.einsum("m,r->mr", xi, phi)
        twice = np.einsum("n,mr->nmr", xi, once)
        out[:, b] = -np.einsum("mn,nmr->r", ginv, twice)
    return out


def symbolic_apply(P: WaveOperator, u) -> sympy.Matrix:
    """``P u`` for a column of sympy expressions in ``t, x[, y]``."""
    syms = coordinates(P.spec)
    u = sympy.Matrix(u)
    if u.shape != (P.rank, 1):
        raise ShapeError(f"expected {P.rank} component expressions")
    a_tt, a_xx = P.principal
    out = a_tt * u.diff(T, 2)
    for s in syms[1:]:
        out -= a_xx * u.diff(s, 2)
    for A, s in zip(P.first_order, syms):
        out += A * u.diff(s)
    return out + P.potential * u


def formal_adjoint_defect(P: WaveOperator, phi, psi, grid: Grid, Q: WaveOperator | None = None) -> dict:
    """Both sides of ``int <psi, P phi> dV = int <Q psi, phi> dV`` by grid quadrature.

    ``phi`` and ``psi`` are component expressions; ``P`` is applied
    symbolically so no finite differences enter. They should decay to
    roundoff before the time ends of the slab, where the weighted trapezoid
    rule is spectrally accurate. ``Q`` defaults to ``formal_adjoint(P)``.
    """
    Q = formal_adjoint(P) if Q is None else Q
    syms = coordinates(P.spec)
    mods = [SYMBOLIC_FUNCTIONS, "numpy"]
    coords = grid.mesh()
    shape = grid.shape

    def ev(exprs):
        return np.stack([np.broadcast_to(sympy.lambdify(syms, e, modules=mods)(*coords), shape)
                         for e in exprs], axis=-1).astype(complex)

    phi = sympy.Matrix(phi)
    psi = sympy.Matrix(psi)
    Pphi = ev(symbolic_apply(P, phi))
    Qpsi = ev(symbolic_apply(Q, psi))
    phi_v = ev(phi)
    psi_v = ev(psi)
    W = grid.weights[..., None]
    lhs = complex(np.sum(W * np.conj(psi_v) * Pphi))
    rhs = complex(np.sum(W * np.conj(Qpsi) * phi_v))
    scale = max(abs(lhs), abs(rhs), float(np.sum(W * np.abs(psi_v) * np.abs(Pphi))))
    return {"lhs": lhs, "rhs": rhs, "absolute": abs(lhs - rhs),
            "relative": abs(lhs - rhs) / scale if scale > 0 else 0.0}
