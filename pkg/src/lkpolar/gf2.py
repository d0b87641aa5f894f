"""Bit-packed GF(2) matrices.

Rows are stored as little-endian 64-bit words: column ``c`` lives in word
``c // 64`` at bit ``c % 64``.  All operations return new matrices.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

WORD = 64
MAX_KRON_DIM = 1 << 14


class SingularMatrix(ValueError):
    pass


def _nwords(cols: int) -> int:
    return (cols + WORD - 1) // WORD


class BitMatrix:
    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: np.ndarray | None = None):
        if rows < 1 or cols < 1:
            raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
        shape = (rows, _nwords(cols))
        if data is None:
            data = np.zeros(shape, dtype=np.uint64)
        else:
            data = np.array(data, dtype=np.uint64).reshape(shape)
            # clear padding bits so equality and weights stay exact
            tail = cols % WORD
            if tail:
                data[:, -1] &= np.uint64((1 << tail) - 1)
        data.setflags(write=False)
        self.rows = rows
        self.cols = cols
        self.data = data

    # ---------------------------------------------------------------- builders
    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        a = np.asarray(arr)
        if a.ndim != 2:
            raise ValueError("expected a 2-D array")
        if a.size and not np.all((a == 0) | (a == 1)):
            raise ValueError("entries must be 0 or 1")
        rows, cols = a.shape
        padded = np.zeros((rows, _nwords(cols) * WORD), dtype=np.uint8)
        padded[:, :cols] = a
        bits = np.packbits(padded.reshape(rows, -1, 8), axis=-1, bitorder="little")
        data = bits.reshape(rows, -1).copy().view("<u8").astype(np.uint64)
        return cls(rows, cols, data)

    @classmethod
    def from_strings(cls, lines: Sequence[str]) -> "BitMatrix":
        return cls.from_array([[int(ch) for ch in line] for line in lines])

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_array(np.eye(n, dtype=np.uint8))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    # ---------------------------------------------------------------- access
    def to_array(self) -> np.ndarray:
        raw = self.data.astype("<u8").view(np.uint8).reshape(self.rows, -1)
        bits = np.unpackbits(raw, axis=1, bitorder="little")
        return bits[:, : self.cols].copy()

    def __getitem__(self, idx: tuple[int, int]) -> int:
        r, c = idx
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise IndexError(idx)
        return int((int(self.data[r, c // WORD]) >> (c % WORD)) & 1)

    def row_int(self, r: int) -> int:
        """Row ``r`` as a Python int with column c at bit c."""
        out = 0
        for w, word in enumerate(self.data[r]):
            out |= int(word) << (WORD * w)
        return out

    def row_ints(self) -> list[int]:
        return [self.row_int(r) for r in range(self.rows)]

    @classmethod
    def from_row_ints(cls, rows: Iterable[int], cols: int) -> "BitMatrix":
        rows = list(rows)
        nw = _nwords(cols)
        mask = (1 << WORD) - 1
        data = np.array(
            [[(r >> (WORD * w)) & mask for w in range(nw)] for r in rows], dtype=np.uint64
        )
        return cls(len(rows), cols, data)

    def to_strings(self) -> list[str]:
        return ["".join(str(b) for b in row) for row in self.to_array()]

    def row_weights(self) -> list[int]:
        return [int(w) for w in self.to_array().sum(axis=1)]

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.data.tobytes()))

    def __repr__(self) -> str:
        body = "\n ".join(self.to_strings())
        return f"BitMatrix({self.rows}x{self.cols}:\n {body})"

    # ---------------------------------------------------------------- algebra
    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_array(self.to_array().T)

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        return multiply(self, other)

    def hstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.rows != other.rows:
            raise ValueError("row count mismatch")
        return BitMatrix.from_array(np.hstack([self.to_array(), other.to_array()]))

    def vstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.cols:
            raise ValueError("column count mismatch")
        return BitMatrix(self.rows + other.rows, self.cols, np.vstack([self.data, other.data]))

    def select_columns(self, cols: Sequence[int]) -> "BitMatrix":
        return BitMatrix.from_array(self.to_array()[:, list(cols)])


def multiply(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: {a.rows}x{a.cols} times {b.rows}x{b.cols}")
    abits = a.to_array().astype(bool)
    out = np.zeros((a.rows, b.data.shape[1]), dtype=np.uint64)
    for k in range(a.cols):
        sel = abits[:, k]
        if sel.any():
            out[sel] ^= b.data[k]
    return BitMatrix(a.rows, b.cols, out)


def _eliminate(work: np.ndarray, ncols: int) -> tuple[np.ndarray, list[int]]:
    """Gauss-Jordan over packed rows in place; returns (rows, pivot columns)."""
    pivots = []
    r = 0
    nrows = work.shape[0]
    for c in range(ncols):
        if r == nrows:
            break
        w, bit = divmod(c, WORD)
        colbits = (work[r:, w] >> np.uint64(bit)) & np.uint64(1)
        hits = np.flatnonzero(colbits)
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
        others = ((work[:, w] >> np.uint64(bit)) & np.uint64(1)).astype(bool)
        others[r] = False
        work[others] ^= work[r]
        pivots.append(c)
        r += 1
    return work, pivots


def rank(a: BitMatrix) -> int:
    _, pivots = _eliminate(a.data.copy(), a.cols)
    return len(pivots)


def invert(a: BitMatrix) -> BitMatrix:
    if not a.is_square:
        raise ValueError("only square matrices can be inverted")
    n = a.rows
    aug = a.hstack(BitMatrix.identity(n))
    work, pivots = _eliminate(aug.data.copy(), n)
    if len(pivots) < n:
        raise SingularMatrix(f"matrix is singular (rank {len(pivots)} < {n})")
    full = BitMatrix(n, 2 * n, work).to_array()
    return BitMatrix.from_array(full[:, n:])


def kronecker(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    return BitMatrix.from_array(np.kron(a.to_array(), b.to_array()))


def kronecker_power(a: BitMatrix, n: int, limit: int = MAX_KRON_DIM) -> BitMatrix:
    if n < 1:
        raise ValueError("kronecker power needs n >= 1")
    if not a.is_square:
        raise ValueError("kronecker power needs a square matrix")
    if a.rows**n > limit:
        raise ValueError(f"kronecker power dimension {a.rows}**{n} exceeds limit {limit}")
    out = a.to_array()
    base = out
    for _ in range(n - 1):
        out = np.kron(out, base)
    return BitMatrix.from_array(out)


F2 = BitMatrix.from_array([[1, 0], [1, 1]])


def arikan_kernel(l: int) -> BitMatrix:
    """K_A = F_2^{(x)t} for l = 2^t."""
    t = l.bit_length() - 1
    if l < 2 or (1 << t) != l:
        raise ValueError(f"Arikan kernel size must be a power of two >= 2, got {l}")
    return kronecker_power(F2, t)


def is_invertible(a: BitMatrix) -> bool:
    return a.is_square and rank(a) == a.rows


def random_invertible(n: int, rng: np.random.Generator) -> BitMatrix:
    while True:
        m = BitMatrix.from_array(rng.integers(0, 2, size=(n, n), dtype=np.uint8))
        if is_invertible(m):
            return m
