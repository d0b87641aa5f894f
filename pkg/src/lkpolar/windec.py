"""Min-sum window decoding of large-kernel polar codes.

Everything is vectorised over a leading batch axis: a KernelProcessor holds
one kernel layer for many independent instances at once (frames times
positions in the Kronecker tree), and the code-level SC/SCL decoders push
whole batches of frames through the tree.

Within a kernel layer the decoder enumerates Arikan input paths v_0..v_h,
scored with the min-sum path metric, and reads kernel-phase LLRs off the
best path on each side of the u_i hypothesis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .cost import arikan_channel_cost
from .kernelalg import Kernel, UnsupportedSize, WindowProfile, window_profile


# ------------------------------------------------------------------ primitives

def q_op(a, b):
    """sgn(a) sgn(b) min(|a|, |b|) with sgn(0) = +1."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = np.minimum(np.abs(a), np.abs(b))
    return np.where((a < 0) ^ (b < 0), -m, m)


def p_op(a, b, c):
    """(-1)^c a + b."""
    return np.where(np.asarray(c) & 1, -np.asarray(a, dtype=float), a) + b


def penalty(s, v):
    """0 if the hard decision of ``s`` equals ``v``, else -|s|."""
    s = np.asarray(s, dtype=float)
    return np.where((s < 0) != (np.asarray(v) == 1), -np.abs(s), 0.0)


def path_score_update(score, llr, bit):
    return score + penalty(llr, bit)


def f2_transform(bits: np.ndarray) -> np.ndarray:
    """bits * F_2^{(x)m} along the last axis (natural order)."""
    x = np.array(bits, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    lead = x.shape[:-1]
    step = 1
    while step < n:
        y = x.reshape(lead + (n // (2 * step), 2, step))
        y[..., 0, :] ^= y[..., 1, :]
        step *= 2
    return x


def arikan_llr(llrs, i: int, v_prefix) -> np.ndarray:
    """Min-sum LLR of Arikan phase ``i`` computed from scratch.

    ``llrs`` has 2^lambda entries on its last axis, ``v_prefix`` holds
    v_0..v_{i-1}.  Leading axes broadcast.
    """
    y = np.asarray(llrs, dtype=float)
    v = np.asarray(v_prefix, dtype=np.uint8)
    m = y.shape[-1]
    if m & (m - 1):
        raise ValueError("LLR vector length must be a power of two")
    if not 0 <= i < m or v.shape[-1] < i:
        raise ValueError(f"phase {i} needs {i} prefix bits within length {m}")
    while m > 1:
        half = m // 2
        if i < half:
            y = q_op(y[..., :half], y[..., half:])
        else:
            w = f2_transform(v[..., :half])
            y = p_op(y[..., :half], y[..., half:], w)
            v = v[..., half:]
            i -= half
        m = half
    return y[..., 0]


# ------------------------------------------------------------------ kernel layer

class KernelProcessor:
    """Window decoder state for one kernel layer over a batch of instances.

    ``llrs`` has shape (..., l); the leading shape is the batch.  Call
    :meth:`phase_llr` then :meth:`commit` once per kernel phase.
    ``ops`` counts the min-sum additions and comparisons per instance.
    """

    def __init__(self, profile: WindowProfile, llrs):
        y = np.asarray(llrs, dtype=float)
        l = profile.l
        if y.shape[-1] != l:
            raise ValueError(f"expected {l} channel LLRs per instance, got {y.shape[-1]}")
        self.profile = profile
        self.lead = y.shape[:-1]
        y = y.reshape(-1, l)
        mcount = y.shape[0]
        self.l = l
        self.t = profile.t
        self.y = y
        self.u = np.zeros((mcount, l), dtype=np.uint8)
        self.V = np.zeros((mcount, 1, l), dtype=np.uint8)
        self.R = np.zeros((mcount, 1))
        self.alpha = [y[:, None, :]] + [np.zeros((mcount, 1, l >> k)) for k in range(1, self.t + 1)]
        self.phase = 0
        self.ops = 0
        self.phase_ops: list[int] = []
        self._llr = None
        self._flip = None
        self._tree: list[np.ndarray | None] = []
        self._run_start = 0

    @property
    def n_paths(self) -> int:
        return self.V.shape[1]

    # -- Arikan-level machinery
    def _arikan_step(self, p: int) -> np.ndarray:
        """LLR of Arikan phase p for every live path, reusing cached levels."""
        l, t = self.l, self.t
        k0 = next(k for k in range(1, t + 1) if p % (l >> k) == 0)
        mcount, npath = self.V.shape[:2]
        for k in range(k0, t + 1):
            size = l >> k
            a = self.alpha[k - 1]
            if (p // size) % 2 == 0:
                out = q_op(a[..., :size], a[..., size:])
            else:
                w = f2_transform(self.V[..., p - size:p])
                out = p_op(a[..., :size], a[..., size:], w)
            self.alpha[k] = np.broadcast_to(out, (mcount, npath, size))
        self.ops += npath * arikan_channel_cost(p, t)
        return self.alpha[t][..., 0]

    def _fork(self, p: int, s: np.ndarray):
        npath = self.V.shape[1]
        V = np.concatenate([self.V, self.V], axis=1)
        V[:, npath:, p] = 1
        self.V = V
        self.R = np.concatenate([self.R + penalty(s, 0), self.R + penalty(s, 1)], axis=1)
        self.ops += npath
        for k in range(1, self.t + 1):
            self.alpha[k] = np.concatenate([self.alpha[k], self.alpha[k]], axis=1)

    def _implied(self, i: int, U: np.ndarray) -> np.ndarray:
        prof = self.profile
        acc = U.astype(np.int64) @ prof.u_coef[i].astype(np.int64)
        acc += self.V.astype(np.int64) @ prof.v_coef[i].astype(np.int64)
        return (acc & 1).astype(np.uint8)

    def _take_paths(self, idx: np.ndarray):
        self.V = np.take_along_axis(self.V, idx[:, :, None], axis=1)
        self.R = np.take_along_axis(self.R, idx, axis=1)
        for k in range(1, self.t + 1):
            a = np.ascontiguousarray(self.alpha[k])
            self.alpha[k] = np.take_along_axis(a, idx[:, :, None], axis=1)

    # -- public protocol
    def phase_llr(self) -> np.ndarray:
        if self._llr is not None:
            return self._llr.reshape(self.lead)
        i = self.phase
        if i >= self.l:
            raise RuntimeError("all kernel phases already decided")
        prof = self.profile
        h, h_prev = prof.h[i], (prof.h[i - 1] if i else -1)
        before = self.ops
        if h > h_prev and h == i:
            # empty window: a single path, plain Arikan SC step
            s = self._arikan_step(i)[:, 0]
            self.V[:, 0, i] = 0
            flip = self._implied(i, self.u[:, None, :])[:, 0]
            self._flip = flip
            llr = np.where(flip == 1, -s, s)
        elif h > h_prev:
            for p in range(h_prev + 1, h + 1):
                self._fork(p, self._arikan_step(p))
            llr = self._build_tree(i)
        else:
            m = i - self._run_start
            top = self._tree[m]
            llr = top[:, 0] - top[:, 1]
            self.ops += 1
        self.phase_ops.append(self.ops - before)
        self._llr = llr
        return llr.reshape(self.lead)

    def _build_tree(self, i: int) -> np.ndarray:
        prof = self.profile
        end = i
        while end + 1 < self.l and prof.h[end + 1] == prof.h[i]:
            end += 1
        mcount, npath = self.V.shape[:2]
        U = np.repeat(self.u[:, None, :], npath, axis=1)
        key = np.zeros((mcount, npath), dtype=np.int64)
        for q in range(i, end + 1):
            bit = self._implied(q, U)
            U[:, :, q] = bit
            key = (key << 1) | bit
        order = np.argsort(key, axis=1, kind="stable")
        self._take_paths(order)
        depth = end - i + 1
        leaves = 1 << depth
        group = npath // leaves
        tree: list[np.ndarray | None] = [None] * depth
        tree[depth - 1] = self.R.reshape(mcount, leaves, group).max(axis=2)
        ops = leaves * (group - 1)
        for lev in range(depth - 2, -1, -1):
            tree[lev] = tree[lev + 1].reshape(mcount, 1 << (lev + 1), 2).max(axis=2)
            ops += 1 << (lev + 1)
        self._tree = tree
        self._run_start = i
        self.ops += ops + 1
        return tree[0][:, 0] - tree[0][:, 1]

    def commit(self, bits) -> None:
        if self._llr is None:
            raise RuntimeError(f"phase {self.phase} committed before its LLR was evaluated")
        b = np.asarray(bits, dtype=np.uint8).reshape(-1) & 1
        i = self.phase
        if self._flip is not None:
            self.V[:, 0, i] = b ^ self._flip
            self._flip = None
        else:
            m = i - self._run_start
            half = self.V.shape[1] // 2
            idx = b[:, None].astype(np.int64) * half + np.arange(half)
            self._take_paths(idx)
            for lev in range(m + 1, len(self._tree)):
                node = self._tree[lev]
                hs = node.shape[1] // 2
                sel = b[:, None].astype(np.int64) * hs + np.arange(hs)
                self._tree[lev] = np.take_along_axis(node, sel, axis=1)
            self._tree[m] = None
        self.u[:, i] = b
        self.phase += 1
        self._llr = None

    def gather(self, rows: np.ndarray, lead: tuple[int, ...]) -> None:
        """Keep instances ``rows`` (flat indices), reshaping the batch to ``lead``."""
        self.y = self.y[rows]
        self.u = self.u[rows]
        self.V = self.V[rows]
        self.R = self.R[rows]
        self.alpha = [a[rows] for a in self.alpha]
        self._tree = [None if t is None else t[rows] for t in self._tree]
        if self._flip is not None:
            self._flip = self._flip[rows]
        if self._llr is not None:
            self._llr = self._llr[rows]
        self.lead = lead

    def surviving_v(self) -> np.ndarray:
        return self.V.reshape(self.lead + self.V.shape[1:])


def kernel_phase_llr(state: KernelProcessor) -> np.ndarray:
    """LLR of the state's current kernel phase (idempotent until committed)."""
    return state.phase_llr()


def commit_decision(state: KernelProcessor, u_i) -> KernelProcessor:
    state.commit(u_i)
    return state


def kernel_phase_llrs(profile: WindowProfile, llrs, decisions=None):
    """Run a kernel layer through all phases.

    ``decisions`` (same leading shape, l bits) fixes each u_i; when omitted
    the hard decision of the phase LLR is used.  Returns (llrs, u, processor).
    """
    proc = KernelProcessor(profile, llrs)
    out = []
    for i in range(profile.l):
        s = proc.phase_llr()
        out.append(s)
        b = (s < 0).astype(np.uint8) if decisions is None else np.asarray(decisions)[..., i]
        proc.commit(b)
    return np.stack(out, axis=-1), proc.u.reshape(proc.lead + (profile.l,)), proc


# ------------------------------------------------------------------ brute force

def _all_words(m: int) -> np.ndarray:
    if m == 0:
        return np.zeros((1, 0), dtype=np.uint8)
    return np.array(list(itertools.product((0, 1), repeat=m)), dtype=np.uint8)


def brute_force_phase_llr(kernel: Kernel, u_prefix, llrs) -> np.ndarray:
    """Max-plus LLR of the next kernel phase by enumerating every completion."""
    l = kernel.l
    if l > 16:
        raise UnsupportedSize(f"brute force limited to l <= 16, got {l}")
    y = np.asarray(llrs, dtype=float)
    pre = np.asarray(u_prefix, dtype=np.uint8)
    i = pre.shape[-1]
    lead = np.broadcast_shapes(y.shape[:-1], pre.shape[:-1])
    y = np.broadcast_to(y, lead + (l,))
    pre = np.broadcast_to(pre, lead + (i,))
    tails = _all_words(l - i)
    U = np.concatenate(
        [np.broadcast_to(pre[..., None, :], lead + (len(tails), i)),
         np.broadcast_to(tails, lead + tails.shape)], axis=-1)
    c = (U.astype(np.int64) @ kernel.array().astype(np.int64)) & 1
    score = penalty(y[..., None, :], c).sum(axis=-1)
    zero = tails[:, 0] == 0
    return score[..., zero].max(axis=-1) - score[..., ~zero].max(axis=-1)


# ------------------------------------------------------------------ codes

@dataclass(frozen=True)
class PolarCodeSpec:
    kernel: Kernel
    n: int
    frozen: frozenset

    def __post_init__(self):
        object.__setattr__(self, "frozen", frozenset(int(f) for f in self.frozen))
        if self.n < 1:
            raise ValueError("need at least one kernel level")
        bad = [f for f in self.frozen if not 0 <= f < self.N]
        if bad:
            raise ValueError(f"frozen indices out of range: {sorted(bad)[:5]}")

    @property
    def l(self) -> int:
        return self.kernel.l

    @property
    def N(self) -> int:
        return self.kernel.l ** self.n

    @property
    def k(self) -> int:
        return self.N - len(self.frozen)

    @cached_property
    def frozen_mask(self) -> np.ndarray:
        m = np.zeros(self.N, dtype=bool)
        m[list(self.frozen)] = True
        return m

    @cached_property
    def info_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.frozen_mask)

    @cached_property
    def profile(self) -> WindowProfile:
        return window_profile(self.kernel)


def kron_transform(bits, kmat: np.ndarray, n: int) -> np.ndarray:
    """bits * K^{(x)n} along the last axis, one kernel level at a time."""
    x = np.asarray(bits, dtype=np.int64)
    l = kmat.shape[0]
    lead = x.shape[:-1]
    if x.shape[-1] != l**n:
        raise ValueError(f"expected length {l ** n}, got {x.shape[-1]}")
    x = x.reshape(lead + (l,) * n)
    km = kmat.astype(np.int64)
    nd = len(lead)
    for ax in range(n):
        x = np.moveaxis(np.moveaxis(x, nd + ax, -1) @ km & 1, -1, nd + ax)
    return x.reshape(lead + (l**n,)).astype(np.uint8)


def encode(spec: PolarCodeSpec, u) -> np.ndarray:
    u = np.asarray(u, dtype=np.uint8)
    if u.shape[-1] != spec.N:
        raise ValueError(f"input length {u.shape[-1]} != N={spec.N}")
    if np.any(u[..., spec.frozen_mask]):
        raise ValueError("frozen positions must carry zeros")
    return kron_transform(u, spec.kernel.array(), spec.n)


class _TreeDecoder:
    """SC / SCL over the l-ary Kronecker tree for a batch of frames.

    All per-path state lives in ``self.layers`` and ``self.u_hat`` so a list
    decoder can clone and prune paths with a single gather.
    """

    def __init__(self, spec: PolarCodeSpec, llrs: np.ndarray, list_size: int | None = None,
                 genie: bool = False):
        self.spec = spec
        self.profile = spec.profile
        self.kmat = spec.kernel.array().astype(np.int64)
        self.l = spec.l
        self.list_size = list_size
        L = list_size or 1
        if L < 1:
            raise ValueError("list size must be >= 1")
        self.L = L
        self.B = llrs.shape[0]
        self.n_inst = self.B * L
        self.genie = genie
        self.y = np.repeat(llrs, L, axis=0) if L > 1 else llrs
        self.u_hat = np.zeros((self.n_inst, spec.N), dtype=np.uint8)
        # max-plus path score: starts at 0 and only ever decreases
        self.metric = np.zeros(self.n_inst)
        if L > 1:
            self.metric.reshape(self.B, L)[:, 1:] = -np.inf
        self.leaf_llrs = np.zeros((self.n_inst, spec.N)) if genie else None
        self.layers: list[KernelProcessor | None] = [None] * (spec.n + 1)
        # path reorderings not yet applied to a layer (composed lazily)
        self.pending: list[np.ndarray | None] = [None] * (spec.n + 1)
        self.kernel_ops = 0
        self.list_ops = 0

    def run(self) -> np.ndarray:
        self._level(self.spec.n, self.y, 0)
        if self.L == 1:
            return self.u_hat
        best = np.argmax(self.metric.reshape(self.B, self.L), axis=1)
        return self.u_hat.reshape(self.B, self.L, -1)[np.arange(self.B), best]

    def _level(self, m: int, y: np.ndarray, offset: int) -> np.ndarray:
        l = self.l
        R = l ** (m - 1)
        yk = y.reshape(self.n_inst, l, R).transpose(0, 2, 1)
        self.layers[m] = KernelProcessor(self.profile, yk)
        for i1 in range(l):
            s = self.layers[m].phase_llr()
            if m == 1:
                enc = self._leaf(offset + i1, s[:, 0])[:, None]
            else:
                enc = self._level(m - 1, s, offset + i1 * R)
            self._sync(m)
            self.layers[m].commit(enc)
        proc = self.layers[m]
        self.kernel_ops += proc.ops * R
        ud = proc.u.reshape(self.n_inst, R, l).astype(np.int64)
        c = (ud @ self.kmat) & 1
        self.layers[m] = None
        return c.transpose(0, 2, 1).reshape(self.n_inst, l * R).astype(np.uint8)

    def _leaf(self, idx: int, s: np.ndarray) -> np.ndarray:
        if self.genie:
            self.leaf_llrs[:, idx] = s
            bit = np.zeros(self.n_inst, dtype=np.uint8)
        elif self.spec.frozen_mask[idx]:
            bit = np.zeros(self.n_inst, dtype=np.uint8)
            if self.list_size is not None:
                self.metric = self.metric + penalty(s, 0)
                self.list_ops += self.L
        elif self.list_size is None:
            bit = (s < 0).astype(np.uint8)
        else:
            bit = self._fork(s)
        self.u_hat[:, idx] = bit
        return bit

    def _fork(self, s: np.ndarray) -> np.ndarray:
        B, L = self.B, self.L
        cand = np.stack([self.metric + penalty(s, 0),
                         self.metric + penalty(s, 1)], axis=-1).reshape(B, 2 * L)
        order = np.argsort(-cand, axis=1, kind="stable")[:, :L]
        self.list_ops += 2 * L + 2 * L * int(np.ceil(np.log2(2 * L)))
        parent = (np.arange(B)[:, None] * L + order // 2).ravel()
        self.metric = np.take_along_axis(cand, order, axis=1).ravel()
        self._gather(parent)
        return (order % 2).ravel().astype(np.uint8)

    def _gather(self, parent: np.ndarray) -> None:
        self.u_hat = self.u_hat[parent]
        for m, proc in enumerate(self.layers):
            if proc is not None:
                prev = self.pending[m]
                self.pending[m] = parent if prev is None else prev[parent]

    def _sync(self, m: int) -> None:
        idx = self.pending[m]
        if idx is None:
            return
        R = self.l ** (m - 1)
        rows = (idx[:, None] * R + np.arange(R)).ravel()
        self.layers[m].gather(rows, (self.n_inst, R))
        self.pending[m] = None

    @property
    def ops_per_frame(self) -> int:
        return self.kernel_ops * self.L + self.list_ops


def _as_batch(spec: PolarCodeSpec, llrs) -> tuple[np.ndarray, bool]:
    y = np.asarray(llrs, dtype=float)
    single = y.ndim == 1
    y = y.reshape(-1, y.shape[-1])
    if y.shape[1] != spec.N:
        raise ValueError(f"expected {spec.N} channel LLRs, got {y.shape[1]}")
    return y, single


# upper bound on live LLR values held by one decoder call
STATE_BUDGET = 1 << 24


def frames_per_chunk(spec: PolarCodeSpec, list_size: int | None = None) -> int:
    """Frames decoded together so that window path state stays within STATE_BUDGET."""
    widest = max(spec.profile.window_sizes) + 1
    per_frame = 2 * spec.N * (list_size or 1) * (1 << widest)
    return max(1, STATE_BUDGET // per_frame)


def decode(spec: PolarCodeSpec, llrs, list_size: int | None = None) -> tuple[np.ndarray, int]:
    """Decode a batch of frames; returns (u_hat, operations per frame).

    ``list_size=None`` runs SC, an integer runs SCL with that many paths.
    Large batches are split into chunks bounded by :data:`STATE_BUDGET`.
    """
    y, single = _as_batch(spec, llrs)
    step = frames_per_chunk(spec, list_size)
    parts = []
    ops = 0
    for a in range(0, len(y), step):
        dec = _TreeDecoder(spec, y[a:a + step], list_size)
        parts.append(dec.run())
        ops = dec.ops_per_frame
    u = np.concatenate(parts) if parts else np.zeros((0, spec.N), dtype=np.uint8)
    return (u[0] if single else u), ops


def sc_decode(spec: PolarCodeSpec, llrs) -> np.ndarray:
    return decode(spec, llrs)[0]


def scl_decode(spec: PolarCodeSpec, llrs, L: int) -> np.ndarray:
    if L < 1:
        raise ValueError("list size must be >= 1")
    return decode(spec, llrs, L)[0]


def genie_leaf_llrs(spec: PolarCodeSpec, llrs) -> np.ndarray:
    """Bit-channel LLRs seen by an SC decoder told the all-zero input."""
    y, single = _as_batch(spec, llrs)
    step = frames_per_chunk(spec)
    out = []
    for a in range(0, len(y), step):
        dec = _TreeDecoder(spec, y[a:a + step], genie=True)
        dec.run()
        out.append(dec.leaf_llrs)
    leaf = np.concatenate(out)
    return leaf[0] if single else leaf


def max_plus_ml(spec: PolarCodeSpec, llrs) -> np.ndarray:
    """Exhaustive max-plus decoder over all 2^k codewords (small codes only)."""
    if spec.k > 16:
        raise UnsupportedSize(f"exhaustive decoding limited to k <= 16, got {spec.k}")
    y, single = _as_batch(spec, llrs)
    words = _all_words(spec.k)
    U = np.zeros((len(words), spec.N), dtype=np.uint8)
    U[:, spec.info_indices] = words
    C = encode(spec, U)
    score = penalty(y[:, None, :], C[None, :, :]).sum(axis=-1)
    best = U[np.argmax(score, axis=1)]
    return best[0] if single else best


def brute_force_sc_llrs(spec: PolarCodeSpec, llrs, decisions) -> np.ndarray:
    """Per-phase max-plus LLRs given fixed earlier decisions (N <= 16)."""
    N = spec.N
    if N > 16:
        raise UnsupportedSize("whole-code enumeration limited to N <= 16")
    y = np.asarray(llrs, dtype=float)
    d = np.asarray(decisions, dtype=np.uint8)
    U = _all_words(N)
    C = encode(PolarCodeSpec(spec.kernel, spec.n, frozenset()), U)
    score = penalty(y[..., None, :], C).sum(axis=-1)
    out = np.empty(y.shape[:-1] + (N,))
    for i in range(N):
        match = np.all(U[:, :i] == d[..., None, :i], axis=-1)
        zero = match & (U[:, i] == 0)
        one = match & (U[:, i] == 1)
        out[..., i] = (np.where(zero, score, -np.inf).max(axis=-1)
                       - np.where(one, score, -np.inf).max(axis=-1))
    return out


def iter_phase_checks(profile: WindowProfile, kernel: Kernel, llrs, decisions) -> Iterable[tuple[int, np.ndarray, np.ndarray]]:
    """Yield (phase, window LLR, brute-force LLR) along fixed decisions."""
    proc = KernelProcessor(profile, llrs)
    d = np.asarray(decisions, dtype=np.uint8)
    for i in range(profile.l):
        s = proc.phase_llr()
        yield i, s, brute_force_phase_llr(kernel, d[..., :i], llrs)
        proc.commit(d[..., i])
