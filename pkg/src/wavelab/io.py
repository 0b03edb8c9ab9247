"""Field files: a CSV form for inspection and a binary form for exact round trips.

CSV starts with the line ``# wavelab-field v1`` and a header row
``t_index,x_index[,y_index],re_0,im_0,...``. The binary layout is the magic
``WVLB``, little-endian u32 ``version, rank, Nt, Nx[, Ny]`` and then float64
``(re, im)`` pairs in t-major, x-minor, component-innermost order. The
number of spatial axes is recovered from the file size.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

__all__ = ["CSV_MAGIC", "BIN_MAGIC", "write_csv", "read_csv", "write_bin", "read_bin",
           "write_field", "read_field", "write_slices"]

CSV_MAGIC = "# wavelab-field v1"
BIN_MAGIC = b"WVLB"
VERSION = 1
_AXES = ("t_index", "x_index", "y_index")


def _as_field(values) -> np.ndarray:
    v = np.asarray(values)
    if v.ndim < 3:
        raise ValueError("field needs shape (Nt, Nx[, Ny], rank)")
    return v.astype(complex)


def write_csv(path, values) -> Path:
    v = _as_field(values)
    shape, rank = v.shape[:-1], v.shape[-1]
    path = Path(path)
    idx = np.indices(shape).reshape(len(shape), -1).T
    flat = v.reshape(-1, rank)
    cols = [*_AXES[: len(shape)]]
    for k in range(rank):
        cols += [f"re_{k}", f"im_{k}"]
    parts = np.empty((flat.shape[0], 2 * rank))
    parts[:, 0::2] = flat.real
    parts[:, 1::2] = flat.imag
    with path.open("w", newline="\n") as fh:
        fh.write(CSV_MAGIC + "\n")
        fh.write(",".join(cols) + "\n")
        for i, row in zip(idx, parts):
            fh.write(",".join(map(str, i)) + "," + ",".join(repr(float(x)) for x in row) + "\n")
    return path


def read_csv(path) -> np.ndarray:
    path = Path(path)
    with path.open() as fh:
        if fh.readline().strip() != CSV_MAGIC:
            raise ValueError(f"{path} is not a wavelab CSV field")
        header = fh.readline().strip().split(",")
    n_axes = sum(1 for h in header if h.endswith("_index"))
    rank = (len(header) - n_axes) // 2
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    idx = data[:, :n_axes].astype(int)
    shape = tuple(int(m) + 1 for m in idx.max(axis=0))
    out = np.zeros(shape + (rank,), dtype=complex)
    out[tuple(idx.T)] = data[:, n_axes::2] + 1j * data[:, n_axes + 1::2]
    return out


def write_bin(path, values) -> Path:
    v = _as_field(values)
    shape, rank = v.shape[:-1], v.shape[-1]
    path = Path(path)
    header = BIN_MAGIC + struct.pack("<" + "I" * (2 + len(shape)), VERSION, rank, *shape)
    payload = np.empty(v.shape + (2,), dtype="<f8")
    payload[..., 0] = v.real
    payload[..., 1] = v.imag
    path.write_bytes(header + payload.tobytes(order="C"))
    return path


def read_bin(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != BIN_MAGIC:
        raise ValueError(f"{path} is not a wavelab binary field")
    version, rank, nt = struct.unpack_from("<III", raw, 4)
    if version != VERSION:
        raise ValueError(f"unsupported field version {version}")
    for n_space in (1, 2):
        head = 16 + 4 * n_space
        if len(raw) < head:
            break
        spatial = struct.unpack_from("<" + "I" * n_space, raw, 16)
        count = nt * int(np.prod(spatial)) * rank
        if len(raw) == head + 16 * count:
            vals = np.frombuffer(raw, dtype="<f8", offset=head, count=2 * count)
            vals = vals.reshape((nt, *spatial, rank, 2))
            return vals[..., 0] + 1j * vals[..., 1]
    raise ValueError(f"{path}: size does not match a 1- or 2-axis field header")


def write_field(stem, values, formats=("bin",)) -> list:
    """Write ``stem.csv`` and/or ``stem.bin``; returns the written paths."""
    stem = Path(stem)
    out = []
    for fmt in formats:
        if fmt == "csv":
            out.append(write_csv(stem.with_suffix(".csv"), values))
        elif fmt == "bin":
            out.append(write_bin(stem.with_suffix(".bin"), values))
        else:
            raise ValueError(f"unknown field format {fmt!r}")
    return out


def read_field(path) -> np.ndarray:
    path = Path(path)
    return read_csv(path) if path.suffix == ".csv" else read_bin(path)


def write_slices(directory, values, grid, count: int = 5) -> list:
    """Per-slice CSV series (coordinates plus components) for external plotting."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    v = _as_field(values)
    rank = v.shape[-1]
    rows = np.unique(np.linspace(0, grid.Nt - 1, count).round().astype(int))
    coords = np.meshgrid(*grid.x, indexing="ij")
    names = ["x", "y"][: grid.dim]
    out = []
    for n in rows:
        path = directory / f"slice_{int(n):05d}.csv"
        with path.open("w", newline="\n") as fh:
            fh.write(f"# t = {grid.t[n]!r}\n")
            fh.write(",".join(names + [f"{p}_{k}" for k in range(rank) for p in ("re", "im")]) + "\n")
            flat = v[n].reshape(-1, rank)
            pts = np.stack([c.ravel() for c in coords], axis=1)
            for p, val in zip(pts, flat):
                nums = [repr(float(c)) for c in p]
                for z in val:
                    nums += [repr(float(z.real)), repr(float(z.imag))]
                fh.write(",".join(nums) + "\n")
        out.append(path)
    return out
