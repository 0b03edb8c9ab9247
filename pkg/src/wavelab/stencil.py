"""Three-level stencils over the space-time grid.

A stencil ``Q`` acts on grid sections of rank ``r`` as

    (Q u)(n, j) = sum_off C_off(n, j) @ u((n, j) + off)

with offsets ``(-1, 0..)``, ``(+1, 0..)`` in time, ``(0, +-e_i)`` in space
(periodic) and the centre ``(0, 0..)``. Every coefficient is an ``r x r``
block per node. Values outside the time range are treated as zero.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ShapeError


def time_offset(dn: int, dim: int) -> tuple:
    return (dn,) + (0,) * dim


def space_offset(axis: int, step: int, dim: int) -> tuple:
    off = [0] * (dim + 1)
    off[axis + 1] = step
    return tuple(off)


def canonical_offsets(dim: int) -> list:
    """Fixed summation order; sweeps rely on it for reflection symmetry."""
    offs = [time_offset(-1, dim), time_offset(1, dim), time_offset(0, dim)]
    for axis in range(dim):
        offs += [space_offset(axis, 1, dim), space_offset(axis, -1, dim)]
    return offs


def shift(u: np.ndarray, off: tuple) -> np.ndarray:
    """``out[node] = u[node + off]``; zero beyond the time range, periodic in space."""
    dn = off[0]
    out = u
    for axis, k in enumerate(off[1:], start=1):
        if k:
            out = np.roll(out, -k, axis=axis)
    if dn:
        res = np.zeros_like(out)
        if dn > 0:
            res[:-dn] = out[dn:]
        else:
            res[-dn:] = out[:dn]
        out = res
    return out


def block_apply(C: np.ndarray, u: np.ndarray) -> np.ndarray:
    return (C @ u[..., None])[..., 0]


def hermitian(C: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(C, -1, -2))


class Stencil:
    """Coefficient blocks keyed by offset, each of shape ``(Nt, *Nx, r, r)``."""

    def __init__(self, grid, coeffs: dict, rank: int):
        self.grid = grid
        self.rank = rank
        dim = grid.dim
        shape = grid.shape + (rank, rank)
        self.coeffs = {}
        for off in canonical_offsets(dim):
            C = coeffs.get(off)
            if C is None:
                C = np.zeros(shape)
            if C.shape != shape:
                raise ShapeError(f"coefficient {off} has shape {C.shape}, expected {shape}")
            self.coeffs[off] = C
        self.dtype = np.result_type(*self.coeffs.values())

    @property
    def offsets(self) -> list:
        return canonical_offsets(self.grid.dim)

    def _check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u)
        if u.shape != self.grid.shape + (self.rank,):
            raise ShapeError(
                f"section shape {u.shape} != {self.grid.shape + (self.rank,)}"
            )
        return u

    def apply(self, u: np.ndarray) -> np.ndarray:
        u = self._check(u)
        out = np.zeros(u.shape, dtype=np.result_type(self.dtype, u.dtype))
        for off in self.offsets:
            out += block_apply(self.coeffs[off], shift(u, off))
        return out

    def interior(self) -> Stencil:
        """Copy with the first and last time rows removed (set to zero)."""
        coeffs = {}
        for off, C in self.coeffs.items():
            C = C.copy()
            C[0] = 0
            C[-1] = 0
            coeffs[off] = C
        return Stencil(self.grid, coeffs, self.rank)

    def transpose(self, weights: np.ndarray) -> Stencil:
        """Adjoint under ``<u, v>_W = sum_nodes W u^H v``.

        ``C'_{-off}(m) = W(m)^-1 W(m - off) C_off(m - off)^H``.
        """
        W = np.asarray(weights, dtype=float)[..., None, None]
        coeffs = {}
        for off, C in self.coeffs.items():
            neg = tuple(-k for k in off)
            moved = shift(W * C, neg)
            coeffs[neg] = hermitian(moved) / W
        return Stencil(self.grid, coeffs, self.rank)

    def row_norm(self) -> float:
        """Max absolute row sum (the induced infinity norm)."""
        total = 0
        for C in self.coeffs.values():
            total = total + np.abs(C).sum(axis=-1)
        return float(np.max(total))

    def active_rows(self, forward: bool) -> np.ndarray:
        C = self.coeffs[time_offset(1 if forward else -1, self.grid.dim)]
        flat = C.reshape(self.grid.Nt, -1)
        return np.any(flat != 0, axis=1)

    def sweep(self, rhs: np.ndarray, forward: bool = True, start=None) -> np.ndarray:
        """Causal solve of ``Q u = rhs`` one time level at a time.

        Forward: level ``n + 1`` is determined by row ``n`` whenever that row
        has a nonzero ``(+1)`` block, otherwise it stays zero. Backward is the
        mirror image. ``start = ((n_a, u_a), (n_b, u_b), first_row)`` presets
        two levels and the first row to march from; without it the march
        starts at row 1 (or ``Nt - 2``) from zero.
        """
        rhs = self._check(rhs)
        dim = self.grid.dim
        Nt = self.grid.Nt
        u = np.zeros(rhs.shape, dtype=np.result_type(self.dtype, rhs.dtype))
        lead = time_offset(1 if forward else -1, dim)
        back = time_offset(-1 if forward else 1, dim)
        centre = time_offset(0, dim)
        spatial = [o for o in self.offsets if o[0] == 0 and any(o[1:])]
        active = self.active_rows(forward)
        inv = _inverse_blocks(self.coeffs[lead], active)
        if forward:
            first = 1 if start is None else start[2]
            levels = range(first, Nt - 1)
        else:
            first = Nt - 2 if start is None else start[2]
            levels = range(first, 0, -1)
        if start is not None:
            (n0, a), (n1, b) = start[0], start[1]
            u[n0] = a
            u[n1] = b
        step = 1 if forward else -1
        for n in levels:
            if not active[n]:
                continue
            r = rhs[n] - block_apply(self.coeffs[back][n], u[n - step])
            r = r - block_apply(self.coeffs[centre][n], u[n])
            for off in spatial:
                r = r - block_apply(self.coeffs[off][n], shift(u[n][None], off)[0])
            u[n + step] = block_apply(inv[n], r)
        return u

    def to_sparse(self) -> sp.csr_matrix:
        """Assemble as a sparse matrix on the flattened ``(node, component)`` index."""
        grid = self.grid
        r = self.rank
        n_nodes = grid.size
        idx = np.arange(n_nodes).reshape(grid.shape)
        rows, cols, vals = [], [], []
        for off, C in self.coeffs.items():
            target = _shift_index(idx, off)
            valid = target >= 0
            src = idx[valid]
            dst = target[valid]
            block = C[valid]
            for a in range(r):
                for b in range(r):
                    v = block[:, a, b]
                    nz = v != 0
                    rows.append(src[nz] * r + a)
                    cols.append(dst[nz] * r + b)
                    vals.append(v[nz])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        N = n_nodes * r
        return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


def _shift_index(idx: np.ndarray, off: tuple) -> np.ndarray:
    moved = idx
    for axis, k in enumerate(off[1:], start=1):
        if k:
            moved = np.roll(moved, -k, axis=axis)
    out = np.full_like(moved, -1)
    dn = off[0]
    if dn > 0:
        out[:-dn] = moved[dn:]
    elif dn < 0:
        out[-dn:] = moved[:dn]
    else:
        out = moved
    return out


def _inverse_blocks(C: np.ndarray, active: np.ndarray) -> np.ndarray:
    inv = np.zeros_like(C, dtype=np.result_type(C.dtype, float))
    if active.any():
        inv[active] = np.linalg.inv(C[active])
    return inv
