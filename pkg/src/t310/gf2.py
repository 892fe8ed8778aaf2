"""Dense GF(2) linear algebra on bit-packed rows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Gf2Matrix:
    """Row-major 0/1 matrix; `bits` has shape (rows, cols)."""

    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8)
        if b.ndim != 2:
            raise ValueError("Gf2Matrix needs a 2-D array")
        object.__setattr__(self, "bits", b & 1)

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    @classmethod
    def from_columns(cls, columns) -> "Gf2Matrix":
        return cls(np.asarray(columns, dtype=np.uint8).T)

    def __matmul__(self, vec):
        v = np.asarray(vec, dtype=np.uint8)
        return (self.bits.astype(np.int64) @ v.astype(np.int64)) & 1


def _pack(bits: np.ndarray) -> np.ndarray:
    """Column j lands in word j // 64, bit j % 64."""
    rows, cols = bits.shape
    words = (cols + 63) // 64
    padded = np.zeros((rows, words * 64), dtype=np.uint8)
    padded[:, :cols] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view("<u8").astype(np.uint64)


def rref(m: Gf2Matrix) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form.  Returns (packed rows, pivot columns)."""
    a = _pack(m.bits)
    nrows = a.shape[0]
    pivots: list[int] = []
    r = 0
    for col in range(m.cols):
        if r == nrows:
            break
        w, b = divmod(col, 64)
        colbits = (a[r:, w] >> np.uint64(b)) & np.uint64(1)
        hits = np.flatnonzero(colbits)
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        mask = ((a[:, w] >> np.uint64(b)) & np.uint64(1)).astype(bool)
        mask[r] = False
        if mask.any():
            a[mask] ^= a[r]
        pivots.append(col)
        r += 1
    return a[:r], pivots


def gf2_rank(m: Gf2Matrix) -> int:
    return len(rref(m)[1])


def gf2_kernel(m: Gf2Matrix) -> list[np.ndarray]:
    """Basis of {v : m v = 0}; each vector is a uint8 array of length cols."""
    reduced, pivots = rref(m)
    pivot_cols = np.array(pivots, dtype=np.int64)
    free_cols = np.setdiff1d(np.arange(m.cols), pivot_cols)
    basis = []
    for free in free_cols:
        v = np.zeros(m.cols, dtype=np.uint8)
        v[free] = 1
        w, b = divmod(int(free), 64)
        if pivots:
            hit = ((reduced[:, w] >> np.uint64(b)) & np.uint64(1)).astype(bool)
            v[pivot_cols[hit]] = 1
        basis.append(v)
    return basis
