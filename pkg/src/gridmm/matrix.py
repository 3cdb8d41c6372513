"""Dense single-precision matrices, storage layouts, block views, and the
reference multiplication that everything else is checked against.

Accumulation order is normative everywhere in this package: products are
added in strictly ascending k, one at a time, in float32. That makes the
grid executor, the blocked runner, and this oracle bitwise comparable.
"""

from __future__ import annotations

import struct
from typing import Iterator

import numpy as np

from .arch import ModelError

__all__ = [
    "ROW_MAJOR",
    "COL_MAJOR",
    "Matrix",
    "BlockView",
    "oracle_matmul",
    "block_view",
    "transpose",
    "relayout",
    "save_binary",
    "load_binary",
    "save_csv",
    "load_csv",
]

ROW_MAJOR = "row-major"
COL_MAJOR = "column-major"
_LAYOUTS = (ROW_MAJOR, COL_MAJOR)


class Matrix:
    """A rows x cols float32 matrix with an explicit storage layout.

    `data` is the flat storage-order buffer; element (i, j) is data[i*cols+j]
    for row-major storage and data[j*rows+i] for column-major. Instances are
    immutable after construction and safe to share between workers.
    """

    __slots__ = ("rows", "cols", "layout", "data")

    def __init__(self, rows: int, cols: int, data, layout: str = ROW_MAJOR):
        if rows < 1 or cols < 1:
            raise ModelError(f"matrix dimensions must be positive, got {rows}x{cols}")
        if layout not in _LAYOUTS:
            raise ModelError(f"unknown layout {layout!r}")
        flat = np.array(data, dtype=np.float32).reshape(-1)
        if flat.size != rows * cols:
            raise ModelError(
                f"data has {flat.size} elements, expected {rows * cols} for {rows}x{cols}"
            )
        flat.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "data", flat)

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    @classmethod
    def from_array(cls, arr, layout: str = ROW_MAJOR) -> "Matrix":
        """Build from a 2-D array-like; the array is the logical content."""
        a = np.asarray(arr, dtype=np.float32)
        if a.ndim != 2:
            raise ModelError(f"expected a 2-D array, got ndim={a.ndim}")
        flat = a.reshape(-1) if layout == ROW_MAJOR else a.T.reshape(-1)
        return cls(a.shape[0], a.shape[1], flat, layout)

    def to_array(self) -> np.ndarray:
        """Logical 2-D view (read-only); storage layout does not leak."""
        if self.layout == ROW_MAJOR:
            return self.data.reshape(self.rows, self.cols)
        return self.data.reshape(self.cols, self.rows).T

    def at(self, i: int, j: int) -> np.float32:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise ModelError(f"index ({i}, {j}) out of range for {self.rows}x{self.cols}")
        if self.layout == ROW_MAJOR:
            return self.data[i * self.cols + j]
        return self.data[j * self.rows + i]

    def __array__(self, dtype=None, copy=None):
        a = self.to_array()
        return a if dtype is None else a.astype(dtype)

    def same_values(self, other: "Matrix", bitwise: bool = True) -> bool:
        if (self.rows, self.cols) != (other.rows, other.cols):
            return False
        a, b = self.to_array(), other.to_array()
        if bitwise:
            return bool(np.array_equal(a.view(np.uint32), b.view(np.uint32)))
        return bool(np.allclose(a, b))

    def __repr__(self) -> str:
        return f"Matrix({self.rows}x{self.cols}, {self.layout})"


class BlockView:
    """Partition of a matrix into equal blocks; block (I, J) element (i, j)
    is the base element (block_rows*I + i, block_cols*J + j)."""

    def __init__(self, base: Matrix, block_rows: int, block_cols: int):
        if base.rows % block_rows or base.cols % block_cols:
            raise ModelError(
                f"blocks {block_rows}x{block_cols} do not divide {base.rows}x{base.cols}"
            )
        self.base = base
        self.block_rows = block_rows
        self.block_cols = block_cols
        self.blocks_i = base.rows // block_rows
        self.blocks_j = base.cols // block_cols

    def block(self, I: int, J: int) -> np.ndarray:
        if not (0 <= I < self.blocks_i and 0 <= J < self.blocks_j):
            raise ModelError(f"block ({I}, {J}) out of range")
        a = self.base.to_array()
        return a[
            I * self.block_rows : (I + 1) * self.block_rows,
            J * self.block_cols : (J + 1) * self.block_cols,
        ]

    def at(self, I: int, J: int, i: int, j: int) -> np.float32:
        return self.block(I, J)[i, j]

    def blocks(self) -> Iterator[tuple[int, int, np.ndarray]]:
        for I in range(self.blocks_i):
            for J in range(self.blocks_j):
                yield I, J, self.block(I, J)


def block_view(m: Matrix, block_rows: int, block_cols: int) -> BlockView:
    return BlockView(m, block_rows, block_cols)


def transpose(m: Matrix) -> Matrix:
    # Flipping the layout label transposes logically without touching the
    # buffer, so transpose(transpose(m)) is bitwise the original.
    flipped = COL_MAJOR if m.layout == ROW_MAJOR else ROW_MAJOR
    return Matrix(m.cols, m.rows, m.data, flipped)


def relayout(m: Matrix, layout: str) -> Matrix:
    """Same logical matrix, re-stored in the requested layout."""
    if layout == m.layout:
        return m
    return Matrix.from_array(m.to_array(), layout)


def matmul_ascending_k(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """C = A @ B in float32 with one product added per element per k step,
    k strictly ascending. Shared by the oracle and the blocked runner."""
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ModelError(f"cannot multiply {a.shape} by {b.shape}")
    c = np.zeros((a.shape[0], b.shape[1]), dtype=np.float32)
    for k in range(a.shape[1]):
        c += a[:, k : k + 1] * b[k : k + 1, :]
    return c


def oracle_matmul(a: Matrix, b: Matrix) -> Matrix:
    """Reference product; the normative answer for every simulator path."""
    if a.cols != b.rows:
        raise ModelError(f"dimension mismatch: {a.rows}x{a.cols} times {b.rows}x{b.cols}")
    return Matrix.from_array(matmul_ascending_k(a.to_array(), b.to_array()), ROW_MAJOR)


_HEADER = struct.Struct("<QQ")


def save_binary(m: Matrix, path) -> None:
    """Flat binary: two little-endian u64 dims, then row-major LE float32."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(m.rows, m.cols))
        fh.write(np.ascontiguousarray(m.to_array(), dtype="<f4").tobytes())


def load_binary(path, layout: str = ROW_MAJOR) -> Matrix:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise ModelError(f"{path}: truncated header")
        rows, cols = _HEADER.unpack(raw)
        payload = fh.read()
    expected = rows * cols * 4
    if len(payload) != expected:
        raise ModelError(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    arr = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    return Matrix.from_array(arr, layout)


def save_csv(m: Matrix, path) -> None:
    np.savetxt(path, m.to_array(), delimiter=",", fmt="%.9g")


def load_csv(path, layout: str = ROW_MAJOR) -> Matrix:
    arr = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float32))
    return Matrix.from_array(arr, layout)
