"""Polarization kernels and their window-decoding structure.

A kernel K of size l = 2^t is factored as K = T K_A with K_A = F_2^{(x)t}.
The relation v = u T is rewritten as a parity-check system on the stacked
vector (u_{l-1}, ..., u_0, v_0, ..., v_{l-1}); bringing that system into
minimum-span form tells, for every kernel phase i, which Arikan input bits
v_0..v_{h_i} are needed and which of them (the window D_i) are still free.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .gf2 import BitMatrix, SingularMatrix, arikan_kernel, invert, multiply, rank


class UnsupportedSize(ValueError):
    pass


class InvalidPermutation(ValueError):
    pass


@dataclass(frozen=True)
class Kernel:
    matrix: BitMatrix
    name: str = ""

    def __post_init__(self):
        m = self.matrix
        if not m.is_square:
            raise ValueError(f"kernel must be square, got {m.rows}x{m.cols}")
        l = m.rows
        if l < 2 or l & (l - 1):
            raise ValueError(f"kernel size must be a power of two >= 2, got {l}")
        r = rank(m)
        if r < l:
            raise SingularMatrix(f"kernel is not invertible over GF(2) (rank {r} < {l})")

    @property
    def l(self) -> int:
        return self.matrix.rows

    @property
    def t(self) -> int:
        return self.l.bit_length() - 1

    @classmethod
    def from_rows(cls, rows, name: str = "") -> "Kernel":
        if rows and isinstance(rows[0], str):
            return cls(BitMatrix.from_strings(rows), name)
        return cls(BitMatrix.from_array(rows), name)

    @classmethod
    def arikan(cls, l: int) -> "Kernel":
        return cls(arikan_kernel(l), f"arikan{l}")

    def array(self) -> np.ndarray:
        return self.matrix.to_array()


# ------------------------------------------------------------------ permutations

def check_permutation(pi: Sequence[int], l: int) -> tuple[int, ...]:
    pi = tuple(int(p) for p in pi)
    if len(pi) != l or sorted(pi) != list(range(l)):
        raise InvalidPermutation(f"not a permutation of 0..{l - 1}: {pi}")
    return pi


def from_one_based(pi: Sequence[int]) -> tuple[int, ...]:
    """Convert a file/CLI permutation (1-based) to the internal 0-based form."""
    out = tuple(int(p) - 1 for p in pi)
    return check_permutation(out, len(out))


def to_one_based(pi: Sequence[int]) -> tuple[int, ...]:
    check_permutation(pi, len(pi))
    return tuple(int(p) + 1 for p in pi)


def inverse_permutation(pi: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(pi)
    for c, p in enumerate(pi):
        inv[p] = c
    return tuple(inv)


def permute_columns(k: Kernel, pi: Sequence[int]) -> Kernel:
    """Output column c takes input column pi[c] (0-based)."""
    pi = check_permutation(pi, k.l)
    return Kernel(k.matrix.select_columns(pi), k.name)


# ------------------------------------------------------------------ structure

def hamming_weight_multiset(m: BitMatrix) -> Counter:
    return Counter(m.row_weights())


def is_polarizing(k: Kernel) -> bool:
    """True iff no column permutation of K is upper triangular.

    Rows are peeled bottom-up: in an upper-triangular arrangement the last
    row has a single one, the row above has a single one outside that
    column, and so on.  The arrangement exists iff this peeling never stalls.
    """
    rows = k.matrix.row_ints()
    remaining = (1 << k.l) - 1
    for r in reversed(rows):
        live = r & remaining
        if live == 0 or live & (live - 1):
            return True
        remaining &= ~live
    return False


def decompose(k: Kernel) -> BitMatrix:
    """T with K = T K_A (K_A is its own inverse, so T = K K_A)."""
    return multiply(k.matrix, arikan_kernel(k.l))


def theta_prime(t_mat: BitMatrix) -> BitMatrix:
    """(S | I) where S[r][c] = T[l-1-c][r]."""
    t = t_mat.to_array()
    l = t.shape[0]
    s = t.T[:, ::-1]
    return BitMatrix.from_array(np.hstack([s, np.eye(l, dtype=np.uint8)]))


def _start(x: int) -> int:
    return (x & -x).bit_length() - 1


def _end(x: int) -> int:
    return x.bit_length() - 1


def min_span_form(theta_p: BitMatrix) -> tuple[BitMatrix, list[int], list[int]]:
    """Row-reduce (S | I) so row i starts in column i and all ends differ.

    Returns (theta, starts, ends).
    """
    l = theta_p.rows
    if theta_p.cols != 2 * l:
        raise ValueError("expected an l x 2l matrix")
    s = BitMatrix.from_array(theta_p.to_array()[:, :l])
    s_inv = invert(s)
    rows = multiply(s_inv, theta_p).row_ints()
    while True:
        by_end: dict[int, int] = {}
        clash = None
        for idx, r in enumerate(rows):
            e = _end(r)
            if e in by_end:
                clash = (by_end[e], idx)
                break
            by_end[e] = idx
        if clash is None:
            break
        a, b = clash
        # the earlier-starting row absorbs the other; its span shrinks
        if _start(rows[a]) > _start(rows[b]):
            a, b = b, a
        rows[a] ^= rows[b]
    theta = BitMatrix.from_row_ints(rows, 2 * l)
    return theta, [_start(r) for r in rows], [_end(r) for r in rows]


@dataclass(frozen=True)
class WindowProfile:
    l: int
    t_mat: BitMatrix
    theta: BitMatrix
    z: tuple[int, ...]
    j: tuple[int, ...]
    h: tuple[int, ...]
    windows: tuple[tuple[int, ...], ...]
    tau: tuple[int, ...]
    name: str = field(default="", compare=False)

    @property
    def t(self) -> int:
        return self.l.bit_length() - 1

    @property
    def window_sizes(self) -> tuple[int, ...]:
        return tuple(len(d) for d in self.windows)

    @cached_property
    def u_coef(self) -> np.ndarray:
        """u_coef[i, s] = theta[l-1-i, l-1-s] for s < i, else 0."""
        th = self.theta.to_array()
        l = self.l
        out = np.zeros((l, l), dtype=np.uint8)
        for i in range(l):
            for s in range(i):
                out[i, s] = th[l - 1 - i, l - 1 - s]
        return out

    @cached_property
    def v_coef(self) -> np.ndarray:
        """v_coef[i, t] = theta[l-1-i, l+t] for t <= j_i, else 0."""
        th = self.theta.to_array()
        l = self.l
        out = np.zeros((l, l), dtype=np.uint8)
        for i in range(l):
            out[i, : self.j[i] + 1] = th[l - 1 - i, l : l + self.j[i] + 1]
        return out


def window_profile(k: Kernel) -> WindowProfile:
    l = k.l
    t_mat = decompose(k)
    theta, starts, ends = min_span_form(theta_prime(t_mat))
    assert starts == list(range(l))
    j = tuple(ends[l - 1 - i] - l for i in range(l))
    h = tuple(itertools.accumulate(j, max))
    windows = tuple(
        tuple(sorted(set(range(h[i] + 1)) - set(j[: i + 1]))) for i in range(l)
    )
    t_inv = invert(t_mat).row_ints()
    tau = tuple(_end(r) for r in t_inv)
    return WindowProfile(l, t_mat, theta, tuple(ends), j, h, windows, tau, k.name)


def reconstruct_u(profile: WindowProfile, u_prefix: Sequence[int], v_prefix: Sequence[int], i: int) -> int:
    """u_i from u_0..u_{i-1} and v_0..v_{j_i}."""
    if len(u_prefix) < i:
        raise ValueError(f"need {i} decided u bits, got {len(u_prefix)}")
    need = profile.j[i] + 1
    if len(v_prefix) < need:
        raise ValueError(f"phase {i} needs v_0..v_{need - 1}, got {len(v_prefix)} bits")
    acc = 0
    for s in range(i):
        acc ^= int(u_prefix[s]) & int(profile.u_coef[i, s])
    for t in range(need):
        acc ^= int(v_prefix[t]) & int(profile.v_coef[i, t])
    return acc


# ------------------------------------------------------------------ exponents

def _span_min_weight(target: int, basis: list[int]) -> int:
    best = bin(target).count("1")
    if not basis:
        return best
    # Gray-code walk over the span
    cur = target
    for g in range(1, 1 << len(basis)):
        cur ^= basis[(g & -g).bit_length() - 1]
        w = bin(cur).count("1")
        if w < best:
            best = w
    return best


def partial_distances(k: Kernel) -> list[int]:
    if k.l > 16:
        raise UnsupportedSize(f"partial distances are brute-forced only for l <= 16, got {k.l}")
    rows = k.matrix.row_ints()
    return [_span_min_weight(rows[i], rows[i + 1 :]) for i in range(k.l)]


def error_exponent(k: Kernel) -> float:
    d = partial_distances(k)
    return sum(math.log(x, k.l) for x in d) / k.l
