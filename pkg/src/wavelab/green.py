"""Advanced and retarded Green operators, fundamental solutions and the
identities they satisfy on the grid.

``G+`` solves the interior recurrence ``P u = phi`` by a forward sweep that
starts from zero below the support of ``phi``; ``G-`` sweeps backward from
zero above it. The same sweeps applied to the W-transpose ``P^T_W`` give
the Green operators of the adjoint, and the fundamental solution at an
event is read off from one adjoint sweep per test section.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import causal
from .errors import PaddingError, PreconditionError, ShapeError
from .manifold import Grid, node_index
from .operators import DiscreteOperator, WaveOperator
from .sections import DiscreteDistribution, GridSection, as_values, from_section, support
from .stencil import Stencil

__all__ = [
    "PADDING",
    "GreenOperator",
    "green_operator",
    "green_apply",
    "check_padding",
    "fundamental_solution",
    "fundamental_solution_section",
    "fundamental_solution_pairing",
    "fundamental_solution_dense",
    "adjoint_identity_check",
    "exact_sequence_check",
    "green_continuity_probe",
    "leakage",
    "smoothstep",
]

PADDING = 2


def _discrete(P, grid: Grid | None) -> DiscreteOperator:
    if isinstance(P, DiscreteOperator):
        return P
    if isinstance(P, WaveOperator):
        if grid is None:
            raise ValueError("a grid is needed to discretize the operator")
        return P.discretize(grid)
    raise TypeError("expected a WaveOperator or DiscreteOperator")


def _sign(direction) -> bool:
    if direction in ("+", "advanced", 1, True):
        return True
    if direction in ("-", "retarded", -1, False):
        return False
    raise ValueError(f"direction must be '+' or '-', got {direction!r}")


def check_padding(grid: Grid, phi: np.ndarray, padding: int = PADDING) -> None:
    """Require ``phi`` to vanish on ``padding`` slices at both time ends."""
    flat = np.abs(phi).reshape(grid.Nt, -1).max(axis=1)
    rows = np.nonzero(flat)[0]
    if rows.size == 0:
        return
    if rows[0] < padding or rows[-1] > grid.Nt - 1 - padding:
        raise PaddingError(
            f"section is supported on slices {rows[0]}..{rows[-1]} but must vanish on "
            f"{padding} slices at each end of 0..{grid.Nt - 1}"
        )


@dataclass(frozen=True, eq=False)
class GreenOperator:
    """``G+`` (advanced, ``forward=True``) or ``G-`` of a stencil.

    ``adjoint=True`` selects the Green operator of ``P^T_W`` instead of ``P``.
    """

    operator: DiscreteOperator
    forward: bool
    adjoint: bool = False

    @property
    def grid(self) -> Grid:
        return self.operator.grid

    @property
    def stencil(self) -> Stencil:
        return self.operator.transpose if self.adjoint else self.operator.interior

    @property
    def direction(self) -> str:
        return "+" if self.forward else "-"

    def __call__(self, phi):
        return green_apply(self, phi)


def green_operator(P, direction="+", grid: Grid | None = None, adjoint: bool = False) -> GreenOperator:
    return GreenOperator(_discrete(P, grid), _sign(direction), adjoint)


def green_apply(G: GreenOperator, phi) -> np.ndarray:
    """``G phi`` by one causal sweep; raises :class:`PaddingError` near the time ends."""
    grid = G.grid
    v = as_values(phi, grid)
    if v.shape != grid.shape + (G.operator.rank,):
        raise ShapeError(f"section shape {v.shape} does not match grid and rank")
    check_padding(grid, v)
    return G.stencil.sweep(v, forward=G.forward)


def _G(D: DiscreteOperator, phi, forward: bool, adjoint: bool = False) -> np.ndarray:
    return green_apply(GreenOperator(D, forward, adjoint), phi)


def causal_propagator(D: DiscreteOperator, phi) -> np.ndarray:
    """``G phi = G+ phi - G- phi``."""
    return _G(D, phi, True) - _G(D, phi, False)


# -- fundamental solutions ---------------------------------------------------------


def _base_node(grid: Grid, x) -> tuple:
    idx = node_index(grid, x)
    if not PADDING <= idx[0] <= grid.Nt - 1 - PADDING:
        raise PreconditionError(
            f"base point slice {idx[0]} too close to the time boundary (need {PADDING} slices)"
        )
    return idx


def fundamental_solution_section(P, x, direction="+", grid: Grid | None = None) -> np.ndarray:
    """Columns ``G_+-(e_k delta_x / W_x)``, shape ``(*grid.shape, r, r)``.

    Column ``k`` is the section whose regular distribution is the ``k``-th
    component of ``F_+-(x)``.
    """
    D = _discrete(P, grid)
    g = D.grid
    idx = _base_node(g, x)
    r = D.rank
    forward = _sign(direction)
    cols = []
    for k in range(r):
        src = np.zeros(g.shape + (r,))
        src[idx + (k,)] = 1.0 / g.weights[idx]
        cols.append(_G(D, src, forward))
    return np.stack(cols, axis=-1)


def fundamental_solution(P, x, direction="+", grid: Grid | None = None) -> DiscreteDistribution:
    """``F_+-(x)`` as a distribution with ``dim_W = r``.

    ``F(x)[phi]_k = (G~_-+ phi)(x)_k``: the Green operator of the adjoint
    stencil with the opposite direction, evaluated at ``x``. The weight
    vector stored here equals that adjoint sweep for every test section.
    """
    D = _discrete(P, grid)
    cols = fundamental_solution_section(D, x, direction)
    W = D.grid.weights[..., None, None]
    # row k of the weights is W * conj(column k)^T
    weights = W * np.conj(np.swapaxes(cols, -1, -2))
    return DiscreteDistribution(D.grid, weights)


def fundamental_solution_pairing(P, x, phi, direction="+", grid: Grid | None = None) -> np.ndarray:
    """``F_+-(x)[phi]`` through one adjoint sweep, without forming weights."""
    D = _discrete(P, grid)
    idx = _base_node(D.grid, x)
    z = _G(D, as_values(phi, D.grid), not _sign(direction), adjoint=True)
    return z[idx]


def fundamental_solution_dense(P, x, direction="+", grid: Grid | None = None, max_nodes: int = 4096) -> np.ndarray:
    """Dense-matrix oracle for the columns of :func:`fundamental_solution_section`.

    Solves the square linear system of interior rows ``1..Nt-2`` for the
    unknown levels away from the two prescribed zero slices.
    """
    D = _discrete(P, grid)
    g = D.grid
    if g.size > max_nodes:
        raise ValueError(f"dense route limited to {max_nodes} nodes, grid has {g.size}")
    idx = _base_node(g, x)
    forward = _sign(direction)
    r = D.rank
    M = D.interior.to_sparse().toarray()
    per_row = int(np.prod(g.Nx)) * r
    rows = np.arange(per_row, (g.Nt - 1) * per_row)
    cols = np.arange(2 * per_row, g.Nt * per_row) if forward else np.arange(0, (g.Nt - 2) * per_row)
    A = M[np.ix_(rows, cols)]
    out = np.zeros(g.shape + (r, r), dtype=np.result_type(M, float))
    for k in range(r):
        b = np.zeros(g.size * r)
        flat = np.ravel_multi_index(idx, g.shape) * r + k
        b[flat] = 1.0 / g.weights[idx]
        sol = np.zeros(g.size * r, dtype=out.dtype)
        sol[cols] = scipy.linalg.solve(A, b[rows])
        out[..., k] = sol.reshape(g.shape + (r,))
    return out


# -- metrics -----------------------------------------------------------------------


def leakage(values: np.ndarray, grid: Grid, source_mask: np.ndarray, direction=None,
            margin: int = 2) -> float:
    """Relative size of ``values`` outside ``J(source)`` dilated by ``margin`` cells.

    ``direction`` ``'+'``/``'-'`` selects ``J+``/``J-``; ``None`` the union.
    """
    mag = np.sqrt(np.sum(np.abs(values) ** 2, axis=tuple(range(grid.dim + 1, values.ndim))))
    peak = float(mag.max())
    if peak == 0:
        return 0.0
    if direction is None:
        region = causal.causal_hull(source_mask, grid, dilate=margin).mask
    elif _sign(direction):
        region = causal.causal_future(source_mask, grid, dilate=margin).mask
    else:
        region = causal.causal_past(source_mask, grid, dilate=margin).mask
    outside = ~region
    return float(mag[outside].max()) / peak if outside.any() else 0.0


def _inner(grid: Grid, a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.sum(grid.weights[..., None] * np.conj(a) * b))


def _rel(a, b) -> float:
    num = float(np.max(np.abs(a - b)))
    den = float(np.max(np.abs(b)))
    return num / den if den > 0 else num


def adjoint_identity_check(P, phi, psi, direction="+", grid: Grid | None = None) -> dict:
    """Both sides of ``<G~_-+ phi, psi>_W = <phi, G_+- psi>_W`` and their defect.

    ``G~`` is built from the W-transpose of the stencil. The relative defect
    divides by ``|lhs| + |rhs|`` when that is nonzero.
    """
    D = _discrete(P, grid)
    g = D.grid
    phi = as_values(phi, g)
    psi = as_values(psi, g)
    fwd = _sign(direction)
    lhs = _inner(g, _G(D, phi, not fwd, adjoint=True), psi)
    rhs = _inner(g, phi, _G(D, psi, fwd))
    absdef = abs(lhs - rhs)
    scale = abs(lhs) + abs(rhs)
    return {"lhs": lhs, "rhs": rhs, "absolute": absdef,
            "relative": absdef / scale if scale > 0 else 0.0}


def smoothstep(s):
    """``C^2`` ramp from 0 (``s <= 0``) to 1 (``s >= 1``)."""
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10 - 15 * s + 6 * s**2)


@dataclass
class ExactSequenceReport:
    complex_GP: float = 0.0
    complex_PG: float = 0.0
    injectivity: float = 0.0
    kernel_image: float = 0.0
    kernel_image_support: float = 0.0
    splitting: float = 0.0
    splitting_compact: bool = True
    band: tuple = ()
    count: int = 0
    details: list = field(default_factory=list)

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out.pop("details")
        return out


def exact_sequence_check(P, battery, grid: Grid | None = None, band=None,
                         support_checks: bool = False) -> ExactSequenceReport:
    """Exactness of ``0 -> D -P-> D -G-> C_sc -P-> C_sc`` on a battery.

    Battery elements must vanish on three slices at each end so that ``P phi``
    still satisfies the two-slice padding. For each ``phi``:

    * complex property: ``G(P phi) = 0`` relative to ``|phi|`` and
      ``P(G phi) = 0`` relative to ``|G phi|``;
    * injectivity: ``G+(P phi) = phi``;
    * kernel in image: ``phi' = P phi`` has ``G phi' = 0`` and is recovered as
      ``P(G+ phi')`` with ``G+ phi'`` compactly supported;
    * splitting: ``rho = G phi`` is cut as ``rho = rho_1 + rho_2`` with a
      smoothstep in ``t`` across ``band``; ``psi' = P rho_2`` is compactly
      supported and ``G psi' = rho``.

    Relative defects use max norms; ``P(G phi)`` is measured against ``G phi``.
    """
    D = _discrete(P, grid)
    g = D.grid
    Pint = D.interior
    if band is None:
        t0, t1 = g.spec.t_min, g.spec.t_max
        band = (t0 + 0.4 * (t1 - t0), t0 + 0.6 * (t1 - t0))
    chi = smoothstep((g.t - band[0]) / (band[1] - band[0]))
    chi = chi.reshape((-1,) + (1,) * (g.dim + 1))
    rep = ExactSequenceReport(band=tuple(float(b) for b in band))
    for phi in battery:
        phi = as_values(phi, g)
        check_padding(g, phi, PADDING + 1)
        Pphi = Pint.apply(phi)
        Gphi = causal_propagator(D, phi)
        GPphi = causal_propagator(D, Pphi)
        nphi = float(np.max(np.abs(phi)))
        nG = float(np.max(np.abs(Gphi)))
        rep.complex_GP = max(rep.complex_GP, float(np.max(np.abs(GPphi))) / nphi)
        rep.complex_PG = max(rep.complex_PG, float(np.max(np.abs(Pint.apply(Gphi)))) / nG)
        rec = _G(D, Pphi, True)
        rep.injectivity = max(rep.injectivity, _rel(rec, phi))
        rep.kernel_image = max(rep.kernel_image, _rel(Pint.apply(rec), Pphi))
        if support_checks:
            src = support(GridSection(g, Pphi)).mask
            hull = causal.causal_future(src, g, dilate=2).mask & causal.causal_past(src, g, dilate=2).mask
            mag = np.sqrt(np.sum(np.abs(rec) ** 2, axis=-1))
            outside = ~hull
            leak = float(mag[outside].max()) / float(mag.max()) if outside.any() else 0.0
            rep.kernel_image_support = max(rep.kernel_image_support, leak)
        rho = Gphi
        # P rho_2 written as the commutator [P, chi] rho: equal in exact
        # arithmetic since P rho = 0, and exactly zero where chi is constant.
        psi2 = Pint.apply(chi * rho) - chi * Pint.apply(rho)
        rows = np.nonzero(np.abs(psi2).reshape(g.Nt, -1).max(axis=1))[0]
        compact = rows.size == 0 or (rows[0] >= PADDING and rows[-1] <= g.Nt - 1 - PADDING)
        rep.splitting_compact = rep.splitting_compact and bool(compact)
        if compact:
            rep.splitting = max(rep.splitting, _rel(causal_propagator(D, psi2), rho))
        else:
            rep.splitting = float("inf")
        rep.count += 1
    return rep


def green_continuity_probe(P, phis, phi, direction="+", grid: Grid | None = None) -> dict:
    """Defects ``|G phi_j - G phi|`` against ``|phi_j - phi|`` (max norms)."""
    D = _discrete(P, grid)
    fwd = _sign(direction)
    phi = as_values(phi, D.grid)
    Gphi = _G(D, phi, fwd)
    inputs, outputs, ratios = [], [], []
    for p in phis:
        p = as_values(p, D.grid)
        din = float(np.max(np.abs(p - phi)))
        dout = float(np.max(np.abs(_G(D, p, fwd) - Gphi)))
        inputs.append(din)
        outputs.append(dout)
        ratios.append(dout / din if din > 0 else 0.0)
    monotone = all(b <= 2 * a for a, b in zip(outputs, outputs[1:]))
    return {
        "input_defects": inputs,
        "output_defects": outputs,
        "ratios": ratios,
        "bound": max(ratios) if ratios else 0.0,
        "monotone_within_2": monotone,
    }
