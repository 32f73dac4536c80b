"""Binary velocity snapshots and norm-series CSV.

Snapshot layout, all little-endian::

    offset  size  field
    0       4     magic  b"DDAS"
    4       4     uint32 version (1)
    8       4     uint32 N
    12      8     float64 L
    20      8     float64 nu
    28      8     float64 t
    36      ...   complex128 coefficients u_k, component 0 then component 1,
                  each an N x N array in row-major order over (n1, n2),
                  both indices in FFT order (0, 1, ..., N/2, -N/2+1, ..., -1)

The full spectrum is written (including the half implied by Hermitian
symmetry) so readers need no knowledge of the in-memory layout.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import norms
from .grid import FourierGrid

MAGIC = b"DDAS"
VERSION = 1
_HEADER = struct.Struct("<4sIIddd")
_DTYPE = np.dtype("<c16")


@dataclass
class Snapshot:
    grid: FourierGrid
    nu: float
    t: float
    u: np.ndarray  # (2, N, N//2+1)


def _full_spectrum(grid: FourierGrid, uh):
    return np.fft.fft2(grid.to_physical(uh), axes=(-2, -1)) / grid.N ** 2


def write_snapshot(path, grid: FourierGrid, u, nu: float, t: float) -> None:
    full = _full_spectrum(grid, np.asarray(u)).astype(_DTYPE)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, grid.N, grid.L, float(nu), float(t)))
        fh.write(full.tobytes(order="C"))


def read_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, N, L, nu, t = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {version}")
        data = fh.read()
    count = 2 * N * N
    if len(data) != count * _DTYPE.itemsize:
        raise ValueError(f"{path}: expected {count} coefficients, "
                         f"found {len(data) / _DTYPE.itemsize:g}")
    full = np.frombuffer(data, dtype=_DTYPE).reshape(2, N, N)
    grid = FourierGrid(N, L)
    u = np.ascontiguousarray(full[..., : N // 2 + 1]).astype(complex)
    return Snapshot(grid=grid, nu=nu, t=t, u=u)


def write_norm_series(path, grid: FourierGrid, times, fields, meta: dict | None = None) -> None:
    """CSV of ``t, l2, h1, h2`` for a sequence of fields."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh)
        w.writerow(["t", "l2", "h1", "h2"])
        for t, u in zip(times, fields):
            w.writerow([repr(float(t)), *(repr(x) for x in norms(grid, u))])
